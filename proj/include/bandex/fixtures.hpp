#pragma once

#include "bandex/core.hpp"
#include "bandex/rng.hpp"

namespace bandex::fixtures {

/// A small enumerated problem with a logging and a target table.
struct Instance {
    SyntheticProblem problem;
    PolicyTable logging;
    PolicyTable target;
};

/// Two one-hot contexts with equal weight, three actions.
/// logging: x0 -> (0.5, 0.5, 0), x1 -> (1, 0, 0)
/// target:  x0 -> (0.2, 0.3, 0.5), x1 -> (0.6, 0.3, 0.1)
/// delta:   x0 -> (1, 0, 0.5),     x1 -> (0.2, 0.8, 0.4)
Instance reference_instance();

/// Random probability vector of length k; entries flagged in `zero` are exact zeros.
Vector random_distribution(Rng& rng, int k, const std::vector<bool>& zero = {});

/// Random instance with up to `max_contexts` contexts and `max_actions` actions.
/// Each logging row drops a random subset of actions (at least one survives)
/// when `deficient` is set. Rewards are uniform in `bounds`.
Instance random_instance(Rng& rng, int max_contexts = 4, int max_actions = 4, bool deficient = true,
                         RewardBounds bounds = {0.0, 1.0});

/// Uniform reward table inside `bounds`.
RewardTable random_rewards(Rng& rng, std::size_t n_contexts, int n_actions, RewardBounds bounds);

}  // namespace bandex::fixtures
