#include "bandex/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace bandex {

namespace {

std::string ctx_str(std::size_t ctx) { return "context " + std::to_string(ctx); }

}  // namespace

void SyntheticProblem::validate() const {
    if (contexts.empty()) throw ContractError("problem has no contexts");
    if (n_actions <= 0) throw ContractError("problem needs at least one action");
    if (context_weights.size() != contexts.size())
        throw ContractError("context_weights size does not match contexts");
    const auto dim = contexts.front().size();
    for (const auto& x : contexts)
        if (x.size() != dim) throw ContractError("contexts have inconsistent dimension");
    double total = 0.0;
    for (double w : context_weights) {
        if (!(w >= 0.0)) throw ContractError("context weight must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ContractError("context weights must sum to 1");
    if (mean_reward.rows() != static_cast<Eigen::Index>(contexts.size()) || mean_reward.cols() != n_actions)
        throw ContractError("mean_reward table has wrong shape");
    if (!(bounds.min <= bounds.max)) throw ContractError("reward bounds are inverted");
    if (mean_reward.minCoeff() < bounds.min || mean_reward.maxCoeff() > bounds.max)
        throw ContractError("mean reward outside reward bounds");
}

SoftmaxPolicy SoftmaxPolicy::zeros(std::size_t context_dim, int n_actions, double temperature) {
    SoftmaxPolicy p;
    p.weights = Matrix::Zero(static_cast<Eigen::Index>(context_dim), n_actions);
    p.temperature = temperature;
    return p;
}

Vector policy_probs(const SoftmaxPolicy& policy, const Vector& features, std::optional<std::size_t> ctx) {
    if (features.size() != policy.weights.rows())
        throw ContractError("context dimension " + std::to_string(features.size()) +
                            " does not match policy dimension " + std::to_string(policy.weights.rows()));
    if (!(policy.temperature > 0.0)) throw ContractError("temperature must be positive");

    const int k = policy.n_actions();
    Vector scores = policy.temperature * (policy.weights.transpose() * features);

    const bool* mask_row = nullptr;
    Eigen::Matrix<bool, 1, Eigen::Dynamic> row_copy;
    if (policy.support_mask) {
        const auto& mask = *policy.support_mask;
        if (!ctx) throw ContractError("masked policy needs a context index");
        if (*ctx >= static_cast<std::size_t>(mask.rows()) || mask.cols() != k)
            throw ContractError("support mask does not cover " + ctx_str(*ctx));
        row_copy = mask.row(static_cast<Eigen::Index>(*ctx));
        mask_row = row_copy.data();
    }

    double top = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < k; ++a)
        if (!mask_row || mask_row[a]) top = std::max(top, scores[a]);
    if (top == -std::numeric_limits<double>::infinity())
        throw InvalidPolicyError("all actions masked at " + ctx_str(ctx.value_or(0)));

    Vector out = Vector::Zero(k);
    double total = 0.0;
    for (int a = 0; a < k; ++a) {
        if (mask_row && !mask_row[a]) continue;
        out[a] = std::exp(scores[a] - top);
        total += out[a];
    }
    out /= total;
    return out;
}

void PolicyTable::validate(double tol) const {
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        if (probs.row(i).minCoeff() < 0.0)
            throw ContractError("negative probability at " + ctx_str(static_cast<std::size_t>(i)));
        if (std::abs(probs.row(i).sum() - 1.0) > tol)
            throw ContractError("probabilities do not sum to 1 at " + ctx_str(static_cast<std::size_t>(i)));
    }
}

PolicyTable tabulate(const SoftmaxPolicy& policy, const ContextTable& contexts) {
    PolicyTable t;
    t.probs.resize(static_cast<Eigen::Index>(contexts.size()), policy.n_actions());
    for (std::size_t i = 0; i < contexts.size(); ++i)
        t.probs.row(static_cast<Eigen::Index>(i)) = policy_probs(policy, contexts[i], i).transpose();
    return t;
}

SoftmaxPolicy clip_support(const SoftmaxPolicy& policy, const ContextTable& contexts, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ContractError("clip threshold must lie in (0, 1)");
    const int k = policy.n_actions();
    MaskMatrix mask(static_cast<Eigen::Index>(contexts.size()), k);
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        const Vector p = policy_probs(policy, contexts[i], i);
        bool any = false;
        for (int a = 0; a < k; ++a) {
            const bool keep = p[a] >= threshold;
            mask(static_cast<Eigen::Index>(i), a) = keep;
            any = any || keep;
        }
        if (!any) throw InvalidPolicyError("clipping at " + std::to_string(threshold) + " removes every action at " + ctx_str(i));
    }
    SoftmaxPolicy out = policy;
    out.support_mask = std::move(mask);
    return out;
}

bool SupportSet::contains(std::size_t ctx, int action) const {
    const auto& u = unsupported.at(ctx);
    return std::binary_search(u.begin(), u.end(), action);
}

bool SupportSet::all_empty() const {
    return std::all_of(unsupported.begin(), unsupported.end(), [](const auto& u) { return u.empty(); });
}

SupportSet unsupported_set(const PolicyTable& logging) {
    SupportSet s;
    s.unsupported.resize(logging.n_contexts());
    for (std::size_t i = 0; i < logging.n_contexts(); ++i)
        for (int a = 0; a < logging.n_actions(); ++a)
            if (logging(i, a) == 0.0) s.unsupported[i].push_back(a);
    return s;
}

SupportSet unsupported_set(const SoftmaxPolicy& logging, const SyntheticProblem& problem) {
    if (logging.n_actions() != problem.n_actions) throw ContractError("policy and problem disagree on action count");
    return unsupported_set(tabulate(logging, problem.contexts));
}

MaskMatrix support_mask(const PolicyTable& logging) {
    return (logging.probs.array() > 0.0).matrix();
}

Vector action_restrict(const Vector& target, std::span<const int> unsupported) {
    double off = 0.0;
    for (int a : unsupported) {
        if (a < 0 || a >= target.size()) throw ContractError("unsupported action index out of range");
        off += target[a];
    }
    Vector out = target;
    for (int a : unsupported) out[a] = 0.0;
    const double kept = out.sum();
    if (!(kept > 0.0) || !(1.0 - off > 0.0))
        throw DegenerateRestrictionError("target places all of its mass on unsupported actions");
    out /= kept;
    return out;
}

PolicyTable action_restrict(const PolicyTable& target, const SupportSet& unsupported) {
    if (unsupported.n_contexts() != target.n_contexts()) throw ContractError("support set does not match policy contexts");
    PolicyTable out = target;
    for (std::size_t i = 0; i < target.n_contexts(); ++i) {
        const Vector row = target.row(i).transpose();
        out.probs.row(static_cast<Eigen::Index>(i)) = action_restrict(row, unsupported.at(i)).transpose();
    }
    return out;
}

void LoggedDataset::validate() const {
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const std::string where = "record " + std::to_string(i);
        if (!(r.propensity > 0.0 && r.propensity <= 1.0))
            throw CorruptDataError(where + ": propensity " + std::to_string(r.propensity) + " outside (0, 1]");
        if (r.ctx >= contexts.size()) throw CorruptDataError(where + ": context index out of range");
        if (r.action < 0 || r.action >= n_actions) throw CorruptDataError(where + ": action index out of range");
        if (!std::isfinite(r.reward) || r.reward < bounds.min || r.reward > bounds.max)
            throw CorruptDataError(where + ": reward outside declared bounds");
    }
}

LoggedDataset LoggedDataset::slice(std::size_t first, std::size_t last) const {
    if (first > last || last > records.size()) throw ContractError("slice out of range");
    LoggedDataset d;
    d.contexts = contexts;
    d.n_actions = n_actions;
    d.bounds = bounds;
    d.records.assign(records.begin() + static_cast<std::ptrdiff_t>(first),
                     records.begin() + static_cast<std::ptrdiff_t>(last));
    return d;
}

RewardTable constant_rewards(std::size_t n_contexts, int n_actions, double value) {
    return RewardTable::Constant(static_cast<Eigen::Index>(n_contexts), n_actions, value);
}

}  // namespace bandex
