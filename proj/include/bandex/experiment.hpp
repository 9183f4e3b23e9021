#pragma once

#include "bandex/datagen.hpp"
#include "bandex/learning.hpp"
#include "bandex/selection.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace bandex::experiment {

/// Learning methods compared per seed.
enum class Method {
    naive_ips,           // plain IPS ERM
    action_restriction,  // IPS ERM over the restricted policy class
    conservative,        // augmented objective with rhat == r_min
    regression,          // augmented objective with the learned reward model
    policy_restriction,  // shifted objective, k picked by the MinSup sweep
    direct,              // greedy policy of the learned reward model
};

std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct ExperimentConfig {
    datagen::GenConfig gen;
    learning::TrainConfig train;
    learning::RegressionConfig regression;
    std::vector<Method> methods{Method::naive_ips, Method::action_restriction, Method::conservative,
                                Method::regression, Method::policy_restriction};
    std::vector<selection::Selector> selectors{selection::Selector::minsup, selection::Selector::dm,
                                               selection::Selector::conservative, selection::Selector::oracle};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    /// Logging temperatures; each one is a deficiency level. Empty means gen.temperature only.
    std::vector<double> temperatures;
    std::size_t n_train = 4000;
    std::size_t n_val = 2000;
    double reward_offset = 0.0;  // added to every reward after generation
    int grid_points = 21;
    std::filesystem::path output_dir = "bandex_out";

    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct MethodResult {
    double exact_value = 0.0;
    double support_divergence = 0.0;
    double val_weight_sum = 0.0;
    std::optional<double> chosen_k;
};

/// Everything measured for one (seed, temperature) pair.
struct SeedResult {
    std::uint64_t seed = 0;
    double temperature = 1.0;
    double unsupported_fraction = 0.0;
    double logging_value = 0.0;
    double optimal_value = 0.0;
    std::map<Method, MethodResult> methods;
    selection::SweepResult sweep;
    /// Exact value of the policy each selector picked from the sweep.
    std::map<selection::Selector, double> selected_value;
};

/// gen -> log -> train -> eval -> sweep for one seed and logging temperature.
/// Stage failures surface as StageError naming the stage and seed.
SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed, double temperature);

nlohmann::json seed_result_to_json(const SeedResult& result);

struct RunReport {
    std::vector<SeedResult> results;
    nlohmann::json aggregate;
    std::vector<std::string> failures;  // "stage (seed s): message"
};

/// Runs every seed and temperature, writes seed_<s>_tau_<t>.json per pair,
/// aggregate.json (mean and std per method and level) and plot.csv.
RunReport run(const ExperimentConfig& config);

}  // namespace bandex::experiment
