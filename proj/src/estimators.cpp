#include "bandex/estimators.hpp"

#include "bandex/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bandex::estimators {

namespace {

void check_inputs(const LoggedDataset& data, const PolicyTable& target) {
    if (data.empty()) throw ContractError("empty dataset");
    if (target.n_contexts() != data.contexts.size() || target.n_actions() != data.n_actions)
        throw ContractError("target table does not match dataset contexts/actions");
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const auto& r = data.records[i];
        if (!(r.propensity > 0.0))
            throw CorruptDataError("record " + std::to_string(i) + " has nonpositive propensity " +
                                   std::to_string(r.propensity));
        if (r.ctx >= data.contexts.size() || r.action < 0 || r.action >= data.n_actions)
            throw CorruptDataError("record " + std::to_string(i) + " has an out-of-range index");
    }
}

void check_table(const LoggedDataset& data, const Matrix& table, const char* what) {
    if (table.rows() != static_cast<Eigen::Index>(data.contexts.size()) || table.cols() != data.n_actions)
        throw ContractError(std::string(what) + " does not match dataset contexts/actions");
}

double weight(const PolicyTable& target, const LogRecord& r) { return target(r.ctx, r.action) / r.propensity; }

// Pairwise summation keeps the reduction order fixed and the rounding error small.
double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double mean(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size()); }

EstimatorReport make_report(const std::vector<double>& terms, const std::vector<double>& weights) {
    EstimatorReport rep;
    rep.n = terms.size();
    rep.value = mean(terms);
    rep.weight_sum = mean(weights);
    rep.diagnostics["max_weight"] = *std::max_element(weights.begin(), weights.end());
    rep.diagnostics["unsupported_mass"] = 1.0 - rep.weight_sum;
    return rep;
}

}  // namespace

EstimatorReport ips(const LoggedDataset& data, const PolicyTable& target) {
    check_inputs(data, target);
    std::vector<double> terms(data.size());
    std::vector<double> weights(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = data.records[i];
        weights[i] = weight(target, r);
        terms[i] = weights[i] * r.reward;
    }
    return make_report(terms, weights);
}

EstimatorReport augmented_ips(const LoggedDataset& data, const PolicyTable& target, const PolicyTable& logging,
                              const RewardTable& reward_model, const AugmentOptions& options) {
    check_inputs(data, target);
    check_table(data, logging.probs, "logging table");
    check_table(data, reward_model, "reward model");
    const SupportSet support = unsupported_set(logging);

    // Imputed mass per context is a pure function of the context; cache it for the exact path.
    std::vector<double> imputed(data.contexts.size(), 0.0);
    for (std::size_t c = 0; c < data.contexts.size(); ++c)
        for (int y : support.at(c)) imputed[c] += target(c, y) * reward_model(static_cast<Eigen::Index>(c), y);

    Rng rng(derive_seed(options.seed, 11));
    std::vector<double> terms(data.size());
    std::vector<double> weights(data.size());
    std::size_t sampled = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = data.records[i];
        const auto& u = support.at(r.ctx);
        weights[i] = weight(target, r);
        double extra = imputed[r.ctx];
        if (u.size() > options.exact_cutoff) {
            const int y = u[rng.index(u.size())];
            extra = static_cast<double>(u.size()) * target(r.ctx, y) * reward_model(static_cast<Eigen::Index>(r.ctx), y);
            ++sampled;
        }
        terms[i] = weights[i] * r.reward + extra;
    }
    auto rep = make_report(terms, weights);
    rep.diagnostics["sampled_records"] = static_cast<double>(sampled);
    return rep;
}

RewardTable conservative_model(const RewardBounds& bounds, std::size_t n_contexts, int n_actions) {
    return constant_rewards(n_contexts, n_actions, bounds.min);
}

EstimatorReport dr(const LoggedDataset& data, const PolicyTable& target, const RewardTable& reward_model) {
    check_inputs(data, target);
    check_table(data, reward_model, "reward model");
    std::vector<double> terms(data.size());
    std::vector<double> weights(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = data.records[i];
        const auto c = static_cast<Eigen::Index>(r.ctx);
        const double baseline = target.row(r.ctx).dot(reward_model.row(c));
        weights[i] = weight(target, r);
        terms[i] = baseline + weights[i] * (r.reward - reward_model(c, r.action));
    }
    return make_report(terms, weights);
}

EstimatorReport dr(const LoggedDataset& data, const PolicyTable& target, const RewardTable& reward_model,
                   const PolicyTable& logging) {
    auto rep = dr(data, target, reward_model);
    check_table(data, logging.probs, "logging table");

    std::vector<double> supported(data.size()), correction(data.size()), unsupported(data.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = data.records[i];
        const auto c = static_cast<Eigen::Index>(r.ctx);
        double s = 0.0;
        double u = 0.0;
        for (int y = 0; y < data.n_actions; ++y) {
            const double term = target(r.ctx, y) * reward_model(c, y);
            (logging(r.ctx, y) > 0.0 ? s : u) += term;
        }
        supported[i] = s;
        unsupported[i] = u;
        correction[i] = weight(target, r) * (r.reward - reward_model(c, r.action));
        scale = std::max({scale, std::abs(s), std::abs(u), std::abs(correction[i])});
    }
    const double decomposed = mean(supported) + mean(correction) + mean(unsupported);
    const double gap = std::abs(decomposed - rep.value);
    if (gap > 1e-10 * std::max(1.0, scale))
        throw Error("doubly robust decomposition disagrees with direct form by " + std::to_string(gap));
    rep.diagnostics["decomposition_gap"] = gap;
    rep.diagnostics["unsupported_imputation"] = mean(unsupported);
    return rep;
}

double dm(const LoggedDataset& data, const PolicyTable& target, const RewardTable& reward_model) {
    if (data.empty()) throw ContractError("empty dataset");
    check_table(data, target.probs, "target table");
    check_table(data, reward_model, "reward model");
    std::vector<double> terms(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto c = data.records[i].ctx;
        terms[i] = target.row(c).dot(reward_model.row(static_cast<Eigen::Index>(c)));
    }
    return mean(terms);
}

double dm(const std::vector<double>& context_weights, const PolicyTable& target, const RewardTable& reward_model) {
    if (context_weights.size() != target.n_contexts() || reward_model.rows() != target.probs.rows() ||
        reward_model.cols() != target.probs.cols())
        throw ContractError("context weights, target and reward model shapes disagree");
    double total = 0.0;
    for (std::size_t c = 0; c < context_weights.size(); ++c)
        total += context_weights[c] * target.row(c).dot(reward_model.row(static_cast<Eigen::Index>(c)));
    return total;
}

MinSupPolicy build_minsup(const PolicyTable& logging, double weight_bound) {
    if (!(weight_bound >= 1.0)) throw ContractError("weight_bound must be at least 1");
    MinSupPolicy out;
    out.weight_bound = weight_bound;
    out.table.probs = Matrix::Zero(logging.probs.rows(), logging.probs.cols());

    const int k = logging.n_actions();
    std::vector<int> order(static_cast<std::size_t>(k));
    for (std::size_t c = 0; c < logging.n_contexts(); ++c) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return logging(c, a) < logging(c, b); });

        double remaining = 1.0;
        int last = -1;
        for (int a : order) {
            const double p0 = logging(c, a);
            if (p0 <= 0.0) continue;
            if (remaining <= 0.0) break;
            const double p = std::min(remaining, weight_bound * p0);
            out.table.probs(static_cast<Eigen::Index>(c), a) = p;
            remaining -= p;
            last = a;
        }
        if (last < 0) throw InvalidPolicyError("logging policy has no support at context " + std::to_string(c));
        // Rounding can leave a residue of a few ulps; the last assigned action
        // always has slack for it because its cap exceeded the remaining mass.
        if (remaining > 0.0) out.table.probs(static_cast<Eigen::Index>(c), last) += remaining;
    }
    return out;
}

double minsup_estimate(const LoggedDataset& data, const PolicyTable& target, const MinSupPolicy& minsup,
                       MinSupData split) {
    if (split == MinSupData::same) {
        const auto main = ips(data, target);
        const auto sub = ips(data, minsup.table);
        return main.value + (1.0 - main.weight_sum) * sub.value;
    }
    if (data.size() < 2) throw ContractError("holdout split needs at least two records");
    const std::size_t half = data.size() / 2;
    const auto main = ips(data.slice(0, half), target);
    const auto sub = ips(data.slice(half, data.size()), minsup.table);
    return main.value + (1.0 - main.weight_sum) * sub.value;
}

}  // namespace bandex::estimators
