#pragma once

#include "bandex/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bandex::learning {

enum class Objective { naive_ips, action_restricted, augmented, shifted };

std::string to_string(Objective objective);
Objective objective_from_string(const std::string& name);

struct TrainConfig {
    Objective objective = Objective::naive_ips;
    double shift_k = 0.0;  // reward shift u1 - u2 of the Lagrangian form
    int replay_count = 1;  // augmentation passes over the logged records
    double learn_rate = 0.5;
    int epochs = 60;
    int batch_size = 256;
    double l2 = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// --- reward regression ------------------------------------------------------

struct RegressionConfig {
    double learn_rate = 0.2;
    int epochs = 2000;
    double l2 = 0.0;
    /// Feature indices the model may see; empty means all of them.
    std::vector<int> feature_subset;
};

/// Per-action linear regression rhat(x, y) = w_y . phi(x) + b_y, where phi
/// selects the configured features.
struct RewardModel {
    Matrix weights;  // (n_features + 1) x n_actions; last row is the bias
    std::vector<int> features;
    std::vector<double> loss_trace;

    double predict(const Vector& x, int action) const;
    RewardTable tabulate(const ContextTable& contexts) const;
    double final_loss() const { return loss_trace.empty() ? 0.0 : loss_trace.back(); }
};

/// Minimizes the mean squared error on logged (x, y, r) by full-batch gradient descent.
RewardModel train_reward_model(const LoggedDataset& data, const RegressionConfig& config);

// --- data augmentation --------------------------------------------------------

struct SyntheticRecord {
    LogRecord record;         // action in U(x), reward rhat(x, y), propensity 1/|U(x)|
    std::size_t source = 0;   // index of the logged record it was drawn for
};

struct AugmentedDataset {
    LoggedDataset original;
    std::vector<SyntheticRecord> synthetic;
    int replay_count = 1;

    /// m in the 1/m normalization: one slot per (pass, logged record); records
    /// whose context has empty U occupy a slot with value zero.
    std::size_t normalizer() const { return original.size() * static_cast<std::size_t>(replay_count); }
};

AugmentedDataset augment_dataset(const LoggedDataset& data, const PolicyTable& logging,
                                 const RewardTable& reward_model, int replay_count, std::uint64_t seed);

// --- objectives ---------------------------------------------------------------

/// A slice of training data. `synthetic_norm` is the m of the synthetic term.
struct ObjectiveBatch {
    const ContextTable* contexts = nullptr;
    std::vector<LogRecord> logged;
    std::vector<LogRecord> synthetic;
    double synthetic_norm = 1.0;
};

struct ObjectiveAux {
    double shift_k = 0.0;
    double l2 = 0.0;
    /// Logging support (true = supported); required by action_restricted.
    const MaskMatrix* support = nullptr;
};

struct ObjectiveValue {
    double value = 0.0;       // objective to maximize (reward convention)
    Matrix gradient;          // d value / d weights
    double weight_sum = 0.0;  // S_D of the logged part
};

/// Empirical objective and its analytic gradient with respect to `policy.weights`.
ObjectiveValue objective_value_and_gradient(const SoftmaxPolicy& policy, const ObjectiveBatch& batch,
                                            Objective objective, const ObjectiveAux& aux);

ObjectiveBatch full_batch(const LoggedDataset& data);
ObjectiveBatch full_batch(const AugmentedDataset& data);

// --- ERM ----------------------------------------------------------------------

struct TraceRow {
    int epoch = 0;
    double objective = 0.0;
    double weight_sum = 0.0;
};

struct TrainResult {
    /// For action_restricted the policy carries the logging support mask, so
    /// evaluating it yields the restricted policy.
    SoftmaxPolicy policy;
    std::vector<TraceRow> trace;
};

/// Mini-batch gradient ascent on the configured objective, starting from the
/// uniform policy. `logging` is required for action_restricted and augmented,
/// `reward_model` for augmented.
TrainResult train_erm(const LoggedDataset& train, const TrainConfig& config, const PolicyTable* logging = nullptr,
                      const RewardTable* reward_model = nullptr);

}  // namespace bandex::learning
