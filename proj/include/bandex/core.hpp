#pragma once

#include "bandex/error.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bandex {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Feature vectors of an enumerated context set, indexed by context id.
using ContextTable = std::vector<Vector>;

/// Mean (or predicted) reward per (context, action); rows are contexts.
using RewardTable = Matrix;

struct RewardBounds {
    double min = 0.0;
    double max = 1.0;
};

enum class RewardNoise { deterministic, bernoulli };

/// Full-information ground truth over a finite, weighted context set.
struct SyntheticProblem {
    ContextTable contexts;
    std::vector<double> context_weights;
    int n_actions = 0;
    RewardTable mean_reward;
    RewardBounds bounds;
    RewardNoise noise = RewardNoise::deterministic;

    std::size_t n_contexts() const { return contexts.size(); }
    std::size_t context_dim() const { return contexts.empty() ? 0 : contexts.front().size(); }

    /// Throws ContractError if the weights, table shape, or reward range are inconsistent.
    void validate() const;
};

/// Linear softmax policy: pi(y|x) proportional to exp(temperature * x^T W[:, y]).
///
/// An optional support mask (contexts x actions, false = forced zero) turns the
/// policy into a clipped logging policy; masked actions get exactly 0 and the
/// survivors renormalize.
struct SoftmaxPolicy {
    Matrix weights;  // context_dim x n_actions
    double temperature = 1.0;
    std::optional<MaskMatrix> support_mask;

    int n_actions() const { return static_cast<int>(weights.cols()); }
    std::size_t context_dim() const { return static_cast<std::size_t>(weights.rows()); }

    static SoftmaxPolicy zeros(std::size_t context_dim, int n_actions, double temperature = 1.0);
};

/// Action distribution of `policy` at a context. `ctx` is required when the
/// policy carries a support mask.
Vector policy_probs(const SoftmaxPolicy& policy, const Vector& features,
                    std::optional<std::size_t> ctx = std::nullopt);

/// Explicit per-context action distributions (rows sum to 1).
struct PolicyTable {
    Matrix probs;

    std::size_t n_contexts() const { return static_cast<std::size_t>(probs.rows()); }
    int n_actions() const { return static_cast<int>(probs.cols()); }
    double operator()(std::size_t ctx, int action) const { return probs(static_cast<Eigen::Index>(ctx), action); }
    auto row(std::size_t ctx) const { return probs.row(static_cast<Eigen::Index>(ctx)); }

    /// Throws ContractError unless every row is a distribution within `tol`.
    void validate(double tol = 1e-12) const;
};

PolicyTable tabulate(const SoftmaxPolicy& policy, const ContextTable& contexts);

/// Zeroes every (x, y) with pi(y|x) < threshold and renormalizes the survivors.
SoftmaxPolicy clip_support(const SoftmaxPolicy& policy, const ContextTable& contexts, double threshold);

/// Per-context list of actions with exactly zero logging probability, U(x).
struct SupportSet {
    std::vector<std::vector<int>> unsupported;

    std::size_t n_contexts() const { return unsupported.size(); }
    const std::vector<int>& at(std::size_t ctx) const { return unsupported.at(ctx); }
    bool contains(std::size_t ctx, int action) const;
    bool all_empty() const;
};

SupportSet unsupported_set(const PolicyTable& logging);
SupportSet unsupported_set(const SoftmaxPolicy& logging, const SyntheticProblem& problem);

/// Mask with true exactly where the logging table is positive.
MaskMatrix support_mask(const PolicyTable& logging);

/// pi(y|x) 1{y not in U} / (1 - sum_{U} pi). Throws DegenerateRestrictionError
/// when the target has no mass off U.
Vector action_restrict(const Vector& target, std::span<const int> unsupported);
PolicyTable action_restrict(const PolicyTable& target, const SupportSet& unsupported);

/// One logged interaction. `ctx` indexes the dataset's context table.
struct LogRecord {
    std::size_t ctx = 0;
    int action = 0;
    double reward = 0.0;
    double propensity = 1.0;
};

/// Logged bandit feedback D = {(x_i, y_i, r_i, pi_0(y_i|x_i))}.
struct LoggedDataset {
    ContextTable contexts;
    int n_actions = 0;
    RewardBounds bounds;
    std::vector<LogRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    const Vector& features(const LogRecord& rec) const { return contexts[rec.ctx]; }

    /// Throws CorruptDataError on nonpositive propensities, bad indices, or
    /// out-of-range rewards.
    void validate() const;

    /// Copy holding records [first, last).
    LoggedDataset slice(std::size_t first, std::size_t last) const;
};

/// Constant reward table of the given shape.
RewardTable constant_rewards(std::size_t n_contexts, int n_actions, double value);

}  // namespace bandex
