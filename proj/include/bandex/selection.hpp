#pragma once

#include "bandex/core.hpp"
#include "bandex/learning.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bandex::selection {

/// Validation criteria for picking the reward shift k.
enum class Selector { minsup, dm, conservative, oracle };

std::string to_string(Selector selector);
Selector selector_from_string(const std::string& name);

struct SweepEntry {
    double k = 0.0;
    bool failed = false;
    std::string error;
    SoftmaxPolicy policy;
    std::map<Selector, double> estimates;
    double val_weight_sum = 0.0;    // S_D on validation data
    double unsupported_mass = 0.0;  // 1 - S_D
    std::optional<double> exact_value;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    std::map<Selector, double> chosen_k;
    std::map<Selector, std::size_t> chosen_index;
};

struct SweepInputs {
    const LoggedDataset* train = nullptr;
    const LoggedDataset* val = nullptr;
    std::vector<double> grid;
    learning::TrainConfig train_config;  // objective is forced to shifted
    std::vector<Selector> selectors;
    const PolicyTable* logging = nullptr;
    const RewardTable* reward_model = nullptr;   // needed by the dm selector
    const SyntheticProblem* problem = nullptr;   // needed by the oracle selector and exact values
    double minsup_weight_bound = 100.0;
};

/// 21 evenly spaced shifts over [-(r_max - r_min), r_max - r_min] by default.
std::vector<double> default_grid(const RewardBounds& bounds, int points = 21);

/// Trains one shifted-objective policy per grid point and scores it with every
/// selector on validation data. A failed grid point is recorded and skipped by
/// the argmax; ties in a selector's estimate go to the smaller |k|.
SweepResult sweep_k(const SweepInputs& inputs);

struct KappaCheck {
    bool satisfied = false;
    double failure_prob_bound = 1.0;
};

/// Checks 1 - kappa + epsilon <= weight_sum <= 1 - epsilon and reports the
/// Hoeffding failure bound 2 exp(-2 n epsilon^2 p_min^2).
KappaCheck check_kappa(double weight_sum, double kappa, double epsilon, std::size_t n, double p_min);

struct PMin {
    double value = 0.0;
    bool estimated = false;  // true when taken from logged propensities only
};

/// Smallest positive logging probability over the supported set.
PMin p_min_from_logging(const PolicyTable& logging);

/// Sample minimum of logged propensities; flagged as an estimate.
PMin p_min_from_data(const LoggedDataset& data);

}  // namespace bandex::selection
