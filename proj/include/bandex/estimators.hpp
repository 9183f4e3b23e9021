#pragma once

#include "bandex/core.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace bandex::estimators {

/// Point estimate plus the importance-weight diagnostics that come for free.
struct EstimatorReport {
    double value = 0.0;
    double weight_sum = 0.0;  // S_D(pi | pi_0)
    std::size_t n = 0;
    std::map<std::string, double> diagnostics;  // always has "max_weight" and "unsupported_mass"
};

/// Inverse propensity scoring: (1/n) sum_i pi(y_i|x_i) / p0_i * r_i.
EstimatorReport ips(const LoggedDataset& data, const PolicyTable& target);

struct AugmentOptions {
    /// Contexts with more unsupported actions than this are imputed by one
    /// uniform draw from U(x) instead of the exact sum.
    std::size_t exact_cutoff = 64;
    std::uint64_t seed = 0;
};

/// IPS over logged records plus sum_{y in U(x_i)} pi(y|x_i) rhat(x_i, y).
/// U(x_i) is recomputed from `logging`.
EstimatorReport augmented_ips(const LoggedDataset& data, const PolicyTable& target, const PolicyTable& logging,
                              const RewardTable& reward_model, const AugmentOptions& options = {});

/// rhat == r_min everywhere.
RewardTable conservative_model(const RewardBounds& bounds, std::size_t n_contexts, int n_actions);

/// Doubly robust estimate. Also evaluates the supported / correction /
/// unsupported decomposition and throws if the two forms differ by more than 1e-10
/// (relative to the magnitude of the terms).
EstimatorReport dr(const LoggedDataset& data, const PolicyTable& target, const RewardTable& reward_model,
                   const PolicyTable& logging);

/// DR without the decomposition check (no logging policy needed).
EstimatorReport dr(const LoggedDataset& data, const PolicyTable& target, const RewardTable& reward_model);

/// Direct method over the dataset's logged contexts: (1/n) sum_i sum_y pi(y|x_i) rhat(x_i, y).
double dm(const LoggedDataset& data, const PolicyTable& target, const RewardTable& reward_model);

/// Direct method over a weighted enumerated context set.
double dm(const std::vector<double>& context_weights, const PolicyTable& target, const RewardTable& reward_model);

/// Per-context distribution supported inside pi_0 with every IPS weight bounded.
struct MinSupPolicy {
    PolicyTable table;
    double weight_bound = 100.0;
};

/// Greedy construction: walk supported actions by ascending propensity (ties by
/// action index) and give each min(remaining, weight_bound * pi_0(y|x)).
MinSupPolicy build_minsup(const PolicyTable& logging, double weight_bound = 100.0);

enum class MinSupData {
    same,     // R_IPS(pi_MinSup) on the same records as R_IPS(pi)
    holdout,  // first half for R_IPS(pi) and S_D, second half for R_IPS(pi_MinSup)
};

/// R_IPS(pi) + (1 - S_D(pi | pi_0)) * R_IPS(pi_MinSup).
double minsup_estimate(const LoggedDataset& data, const PolicyTable& target, const MinSupPolicy& minsup,
                       MinSupData split = MinSupData::same);

}  // namespace bandex::estimators
