#pragma once

#include "bandex/core.hpp"

#include <span>
#include <vector>

// Exact expectations over finite problems by enumeration of (x, y) pairs.
//
// Every estimator in this library is a sample mean of i.i.d. per-record terms,
// so E_D[estimator] equals the expectation of a single record's term; the
// functions below enumerate that single-record expectation.

namespace bandex::oracle {

struct ExactReport {
    double true_value = 0.0;             // R(pi)
    double estimator_expectation = 0.0;  // E_D[R_IPS(pi)], by enumeration
    double bias = 0.0;                   // estimator_expectation - true_value
    double closed_form_bias = 0.0;       // -E_x[sum_{y in U(x)} pi(y|x) delta(x, y)]
    double support_divergence = 0.0;     // D_X(pi | pi_0)
    double expected_weight_sum = 0.0;    // E_D[S_D(pi | pi_0)]
};

/// R(pi) = sum_x P(x) sum_y pi(y|x) delta(x, y).
double exact_policy_value(const SyntheticProblem& problem, const PolicyTable& policy);

/// Same, against an arbitrary reward table (e.g. a learned model).
double exact_policy_value(const SyntheticProblem& problem, const PolicyTable& policy, const RewardTable& rewards);

/// D_X(pi | pi_0) = sum_x P(x) sum_{y in U(x)} pi(y|x).
double exact_support_divergence(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target);

/// Enumerated E[pi(y|x)/pi_0(y|x)] with y ~ pi_0(.|x).
double expected_weight_sum(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target);

/// Enumerated E[pi(y|x)/pi_0(y|x) * r] with y ~ pi_0(.|x).
double expected_ips(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target);

ExactReport exact_ips_bias(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target);

/// Closed-form bias of the augmented IPS estimator: E_x[sum_{U(x)} pi (rhat - delta)].
double exact_augmented_bias(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target,
                            const RewardTable& reward_model);

/// Enumerated E_D[augmented IPS].
double expected_augmented_ips(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target,
                              const RewardTable& reward_model);

/// Enumerated expectation of the sampled augmentation objective over both the
/// logged record and `replay_count` uniform draws from U(x) per record. Records
/// whose context has empty U contribute zero-valued draws.
double exact_sampled_objective_expectation(const SyntheticProblem& problem, const PolicyTable& logging,
                                           const PolicyTable& target, const RewardTable& reward_model,
                                           int replay_count);

/// Index of the policy maximizing enumerated E_D[R_IPS]. Ties go to the
/// smaller support divergence (the policy that looks like pi_0), then to the
/// lower index.
std::size_t exact_erm_choice(const SyntheticProblem& problem, const PolicyTable& logging,
                             std::span<const PolicyTable> policies);

struct AdversarialResult {
    SyntheticProblem problem;  // skeleton with the adversarial reward table installed
    double gap = 0.0;          // R(pi*) - R(pi_hat)
    double max_divergence = 0.0;
    double lower_bound = 0.0;  // (r_max - r_min) * max_divergence
    std::size_t erm_choice = 0;
    std::size_t best_choice = 0;
    std::vector<double> true_values;
    std::vector<double> ips_expectations;
    std::vector<double> divergences;
};

/// Builds delta = r_max on U(x), r_min elsewhere (bounds from the skeleton) and
/// measures the suboptimality of IPS-ERM over the finite policy list. The gap
/// reaches (r_max - r_min) * max divergence whenever r_min >= 0; for r_min < 0
/// IPS prefers the unsupported actions of this table and the gap can vanish.
AdversarialResult adversarial_construction(const SyntheticProblem& skeleton, const PolicyTable& logging,
                                           std::span<const PolicyTable> policies);

}  // namespace bandex::oracle
