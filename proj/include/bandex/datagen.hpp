#pragma once

#include "bandex/core.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace bandex::datagen {

enum class Scheme { multiclass, feature_split };

struct GenConfig {
    Scheme scheme = Scheme::multiclass;
    int n_contexts = 20;
    int context_dim = 20;
    int n_actions = 10;
    std::uint64_t seed = 0;
    double temperature = 1.0;
    double clip_threshold = 0.01;
    /// Explicit P(X); uniform over contexts when absent.
    std::optional<std::vector<double>> context_weights;

    void validate() const;
};

/// Supervised-to-bandit conversion: each context gets one correct label
/// y*(x) = argmax of a seeded linear teacher, and delta(x, y) = 1{y = y*(x)}.
SyntheticProblem make_multiclass_problem(const GenConfig& config);

/// Feature-split scheme: a standard normal raw vector per context, the first
/// context_dim entries are features and the next n_actions entries are the
/// per-action rewards, min-max normalized into [0, 1] over the whole table.
SyntheticProblem make_feature_split_problem(const GenConfig& config);

/// Dispatches on config.scheme.
SyntheticProblem make_problem(const GenConfig& config);

struct LoggerTraining {
    int steps = 10;
    double learn_rate = 0.5;
    double init_scale = 0.01;
    double train_fraction = 0.5;  // share of contexts the logger is fit on
};

/// Softmax logger fit toward argmax_y delta(x, y) by a few cross-entropy
/// gradient steps on a seeded subset of contexts, then scaled by `temperature`
/// and clipped at `clip_threshold`.
SoftmaxPolicy make_logging_policy(const SyntheticProblem& problem, double temperature, double clip_threshold,
                                  std::uint64_t seed, const LoggerTraining& training = {});

/// Fraction of (context, action) pairs with zero logging probability.
double unsupported_fraction(const PolicyTable& logging);

/// Draws x ~ P(X), y ~ pi_0(.|x), and r from the problem's reward law; records pi_0(y|x).
LoggedDataset log_interactions(const SyntheticProblem& problem, const PolicyTable& logging, std::size_t n,
                               std::uint64_t seed);
LoggedDataset log_interactions(const SyntheticProblem& problem, const SoftmaxPolicy& logging, std::size_t n,
                               std::uint64_t seed);

SyntheticProblem translate_rewards(const SyntheticProblem& problem, double offset);
LoggedDataset translate_rewards(const LoggedDataset& dataset, double offset);

}  // namespace bandex::datagen
