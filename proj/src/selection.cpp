#include "bandex/selection.hpp"

#include "bandex/estimators.hpp"
#include "bandex/oracle.hpp"
#include "bandex/parallel.hpp"

#include <cmath>
#include <limits>

namespace bandex::selection {

std::string to_string(Selector selector) {
    switch (selector) {
        case Selector::minsup: return "minsup";
        case Selector::dm: return "dm";
        case Selector::conservative: return "conservative";
        case Selector::oracle: return "oracle";
    }
    return "unknown";
}

Selector selector_from_string(const std::string& name) {
    if (name == "minsup") return Selector::minsup;
    if (name == "dm") return Selector::dm;
    if (name == "conservative") return Selector::conservative;
    if (name == "oracle") return Selector::oracle;
    throw ContractError("unknown selector '" + name + "'");
}

std::vector<double> default_grid(const RewardBounds& bounds, int points) {
    if (points < 1) throw ContractError("grid needs at least one point");
    const double span = bounds.max - bounds.min;
    if (points == 1) return {0.0};
    std::vector<double> grid;
    for (int i = 0; i < points; ++i) {
        const double v = -span + 2.0 * span * i / (points - 1);
        grid.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    }
    return grid;
}

SweepResult sweep_k(const SweepInputs& in) {
    if (!in.train || !in.val || !in.logging) throw ContractError("sweep needs train, validation and logging inputs");
    if (in.grid.empty()) throw ContractError("grid is empty");
    for (Selector s : in.selectors) {
        if (s == Selector::dm && !in.reward_model) throw ContractError("dm selector needs a reward model");
        if (s == Selector::oracle && !in.problem) throw ContractError("oracle selector needs the full-information problem");
    }

    const auto& val = *in.val;
    const auto minsup = estimators::build_minsup(*in.logging, in.minsup_weight_bound);
    const RewardTable conservative =
        estimators::conservative_model(val.bounds, val.contexts.size(), val.n_actions);

    SweepResult result;
    result.entries.resize(in.grid.size());
    parallel_for(in.grid.size(), [&](std::size_t g) {
        SweepEntry& e = result.entries[g];
        e.k = in.grid[g];
        try {
            auto cfg = in.train_config;
            cfg.objective = learning::Objective::shifted;
            cfg.shift_k = e.k;
            e.policy = learning::train_erm(*in.train, cfg).policy;
            const PolicyTable table = tabulate(e.policy, val.contexts);

            const auto ips = estimators::ips(val, table);
            e.val_weight_sum = ips.weight_sum;
            e.unsupported_mass = 1.0 - ips.weight_sum;
            if (in.problem) e.exact_value = oracle::exact_policy_value(*in.problem, table);
            for (Selector s : in.selectors) {
                switch (s) {
                    case Selector::minsup: e.estimates[s] = estimators::minsup_estimate(val, table, minsup); break;
                    case Selector::dm: e.estimates[s] = estimators::dm(val, table, *in.reward_model); break;
                    case Selector::conservative:
                        e.estimates[s] = estimators::augmented_ips(val, table, *in.logging, conservative).value;
                        break;
                    case Selector::oracle: e.estimates[s] = *e.exact_value; break;
                }
            }
        } catch (const Error& err) {
            e.failed = true;
            e.error = "k=" + std::to_string(e.k) + ": " + err.what();
        }
    });

    for (Selector s : in.selectors) {
        std::optional<std::size_t> best;
        for (std::size_t g = 0; g < result.entries.size(); ++g) {
            const auto& e = result.entries[g];
            if (e.failed) continue;
            if (!best) {
                best = g;
                continue;
            }
            const auto& b = result.entries[*best];
            const double v = e.estimates.at(s);
            const double bv = b.estimates.at(s);
            if (v > bv || (v == bv && (std::abs(e.k) < std::abs(b.k) || (std::abs(e.k) == std::abs(b.k) && e.k < b.k))))
                best = g;
        }
        if (best) {
            result.chosen_index[s] = *best;
            result.chosen_k[s] = result.entries[*best].k;
        }
    }
    return result;
}

KappaCheck check_kappa(double weight_sum, double kappa, double epsilon, std::size_t n, double p_min) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw ContractError("kappa must lie in (0, 1)");
    if (!(epsilon > 0.0 && epsilon < kappa / 2.0)) throw ContractError("epsilon must lie in (0, kappa/2)");
    if (!(p_min > 0.0 && p_min <= 1.0)) throw ContractError("p_min must lie in (0, 1]");
    if (n == 0) throw ContractError("n must be positive");
    KappaCheck out;
    out.satisfied = (1.0 - kappa + epsilon <= weight_sum) && (weight_sum <= 1.0 - epsilon);
    out.failure_prob_bound = 2.0 * std::exp(-2.0 * static_cast<double>(n) * epsilon * epsilon * p_min * p_min);
    return out;
}

PMin p_min_from_logging(const PolicyTable& logging) {
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < logging.probs.size(); ++i) {
        const double p = logging.probs.data()[i];
        if (p > 0.0) m = std::min(m, p);
    }
    if (!std::isfinite(m)) throw ContractError("logging policy has empty support");
    return {m, false};
}

PMin p_min_from_data(const LoggedDataset& data) {
    if (data.empty()) throw ContractError("empty dataset");
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : data.records) m = std::min(m, r.propensity);
    return {m, true};
}

}  // namespace bandex::selection
