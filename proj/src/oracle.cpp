#include "bandex/oracle.hpp"

#include <algorithm>

namespace bandex::oracle {

namespace {

void check_shapes(const SyntheticProblem& problem, const PolicyTable& table, const char* what) {
    if (table.n_contexts() != problem.n_contexts() || table.n_actions() != problem.n_actions)
        throw ContractError(std::string(what) + " table does not match problem shape");
}

void check_rewards(const SyntheticProblem& problem, const RewardTable& rewards) {
    if (rewards.rows() != static_cast<Eigen::Index>(problem.n_contexts()) || rewards.cols() != problem.n_actions)
        throw ContractError("reward table does not match problem shape");
}

// sum_x P(x) sum_{y : pi_0(y|x) > 0} pi_0(y|x) * term(x, y)
template <class Term>
double logged_expectation(const SyntheticProblem& problem, const PolicyTable& logging, Term term) {
    double total = 0.0;
    for (std::size_t x = 0; x < problem.n_contexts(); ++x) {
        double inner = 0.0;
        for (int y = 0; y < problem.n_actions; ++y) {
            const double p0 = logging(x, y);
            if (p0 > 0.0) inner += p0 * term(x, y);
        }
        total += problem.context_weights[x] * inner;
    }
    return total;
}

// sum_x P(x) sum_{y in U(x)} term(x, y)
template <class Term>
double unsupported_sum(const SyntheticProblem& problem, const PolicyTable& logging, Term term) {
    double total = 0.0;
    for (std::size_t x = 0; x < problem.n_contexts(); ++x) {
        double inner = 0.0;
        for (int y = 0; y < problem.n_actions; ++y)
            if (logging(x, y) == 0.0) inner += term(x, y);
        total += problem.context_weights[x] * inner;
    }
    return total;
}

}  // namespace

double exact_policy_value(const SyntheticProblem& problem, const PolicyTable& policy) {
    return exact_policy_value(problem, policy, problem.mean_reward);
}

double exact_policy_value(const SyntheticProblem& problem, const PolicyTable& policy, const RewardTable& rewards) {
    check_shapes(problem, policy, "policy");
    check_rewards(problem, rewards);
    double total = 0.0;
    for (std::size_t x = 0; x < problem.n_contexts(); ++x) {
        const auto i = static_cast<Eigen::Index>(x);
        total += problem.context_weights[x] * policy.probs.row(i).dot(rewards.row(i));
    }
    return total;
}

double exact_support_divergence(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target) {
    check_shapes(problem, logging, "logging");
    check_shapes(problem, target, "target");
    return unsupported_sum(problem, logging, [&](std::size_t x, int y) { return target(x, y); });
}

double expected_weight_sum(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target) {
    check_shapes(problem, logging, "logging");
    check_shapes(problem, target, "target");
    return logged_expectation(problem, logging, [&](std::size_t x, int y) { return target(x, y) / logging(x, y); });
}

double expected_ips(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target) {
    check_shapes(problem, logging, "logging");
    check_shapes(problem, target, "target");
    const auto& delta = problem.mean_reward;
    return logged_expectation(problem, logging, [&](std::size_t x, int y) {
        return target(x, y) / logging(x, y) * delta(static_cast<Eigen::Index>(x), y);
    });
}

ExactReport exact_ips_bias(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target) {
    ExactReport r;
    r.true_value = exact_policy_value(problem, target);
    r.estimator_expectation = expected_ips(problem, logging, target);
    r.bias = r.estimator_expectation - r.true_value;
    const auto& delta = problem.mean_reward;
    r.closed_form_bias = -unsupported_sum(problem, logging, [&](std::size_t x, int y) {
        return target(x, y) * delta(static_cast<Eigen::Index>(x), y);
    });
    r.support_divergence = exact_support_divergence(problem, logging, target);
    r.expected_weight_sum = expected_weight_sum(problem, logging, target);
    return r;
}

double exact_augmented_bias(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target,
                            const RewardTable& reward_model) {
    check_shapes(problem, logging, "logging");
    check_shapes(problem, target, "target");
    check_rewards(problem, reward_model);
    const auto& delta = problem.mean_reward;
    return unsupported_sum(problem, logging, [&](std::size_t x, int y) {
        const auto i = static_cast<Eigen::Index>(x);
        return target(x, y) * (reward_model(i, y) - delta(i, y));
    });
}

double expected_augmented_ips(const SyntheticProblem& problem, const PolicyTable& logging, const PolicyTable& target,
                              const RewardTable& reward_model) {
    check_shapes(problem, logging, "logging");
    check_shapes(problem, target, "target");
    check_rewards(problem, reward_model);
    const auto& delta = problem.mean_reward;
    return logged_expectation(problem, logging, [&](std::size_t x, int y) {
        const auto i = static_cast<Eigen::Index>(x);
        double imputed = 0.0;
        for (int u = 0; u < problem.n_actions; ++u)
            if (logging(x, u) == 0.0) imputed += target(x, u) * reward_model(i, u);
        return target(x, y) / logging(x, y) * delta(i, y) + imputed;
    });
}

double exact_sampled_objective_expectation(const SyntheticProblem& problem, const PolicyTable& logging,
                                           const PolicyTable& target, const RewardTable& reward_model,
                                           int replay_count) {
    if (replay_count < 1) throw ContractError("replay_count must be at least 1");
    check_shapes(problem, logging, "logging");
    check_shapes(problem, target, "target");
    check_rewards(problem, reward_model);
    const auto& delta = problem.mean_reward;
    const SupportSet support = unsupported_set(logging);

    // Per record: pi/pi_0 * r + (1 / replay_count) * sum_j pi(y'_j) / p'_j * rhat(y'_j),
    // with each y'_j ~ Uniform(U(x)) enumerated jointly with the logged action.
    double total = 0.0;
    for (std::size_t x = 0; x < problem.n_contexts(); ++x) {
        const auto i = static_cast<Eigen::Index>(x);
        const auto& u = support.at(x);
        double per_context = 0.0;
        for (int y = 0; y < problem.n_actions; ++y) {
            const double p0 = logging(x, y);
            if (p0 <= 0.0) continue;
            const double logged_term = target(x, y) / p0 * delta(i, y);
            double replay_term = 0.0;
            if (!u.empty()) {
                const double draw_prob = 1.0 / static_cast<double>(u.size());
                for (int j = 0; j < replay_count; ++j) {
                    double draw_expectation = 0.0;
                    for (int y_aug : u)
                        draw_expectation += draw_prob * (target(x, y_aug) / draw_prob) * reward_model(i, y_aug);
                    replay_term += draw_expectation;
                }
                replay_term /= replay_count;
            }
            per_context += p0 * (logged_term + replay_term);
        }
        total += problem.context_weights[x] * per_context;
    }
    return total;
}

std::size_t exact_erm_choice(const SyntheticProblem& problem, const PolicyTable& logging,
                             std::span<const PolicyTable> policies) {
    if (policies.empty()) throw ContractError("policy list is empty");
    std::size_t best = 0;
    double best_value = expected_ips(problem, logging, policies[0]);
    double best_div = exact_support_divergence(problem, logging, policies[0]);
    for (std::size_t k = 1; k < policies.size(); ++k) {
        const double v = expected_ips(problem, logging, policies[k]);
        const double d = exact_support_divergence(problem, logging, policies[k]);
        if (v > best_value || (v == best_value && d < best_div)) {
            best = k;
            best_value = v;
            best_div = d;
        }
    }
    return best;
}

AdversarialResult adversarial_construction(const SyntheticProblem& skeleton, const PolicyTable& logging,
                                           std::span<const PolicyTable> policies) {
    if (policies.empty()) throw ContractError("policy list is empty");
    check_shapes(skeleton, logging, "logging");
    const bool has_logging = std::any_of(policies.begin(), policies.end(), [&](const PolicyTable& p) {
        return p.probs.rows() == logging.probs.rows() && p.probs.cols() == logging.probs.cols() &&
               (p.probs - logging.probs).cwiseAbs().maxCoeff() == 0.0;
    });
    if (!has_logging) throw ContractError("policy list must contain the logging policy");

    AdversarialResult out;
    out.problem = skeleton;
    const double lo = skeleton.bounds.min;
    const double hi = skeleton.bounds.max;
    out.problem.mean_reward = RewardTable(static_cast<Eigen::Index>(skeleton.n_contexts()), skeleton.n_actions);
    for (std::size_t x = 0; x < skeleton.n_contexts(); ++x)
        for (int y = 0; y < skeleton.n_actions; ++y)
            out.problem.mean_reward(static_cast<Eigen::Index>(x), y) = logging(x, y) == 0.0 ? hi : lo;
    out.problem.noise = RewardNoise::deterministic;

    for (const auto& p : policies) {
        out.true_values.push_back(exact_policy_value(out.problem, p));
        out.ips_expectations.push_back(expected_ips(out.problem, logging, p));
        out.divergences.push_back(exact_support_divergence(out.problem, logging, p));
    }
    out.erm_choice = exact_erm_choice(out.problem, logging, policies);
    out.best_choice = static_cast<std::size_t>(
        std::max_element(out.true_values.begin(), out.true_values.end()) - out.true_values.begin());
    out.max_divergence = *std::max_element(out.divergences.begin(), out.divergences.end());
    out.lower_bound = (hi - lo) * out.max_divergence;
    out.gap = out.true_values[out.best_choice] - out.true_values[out.erm_choice];
    return out;
}

}  // namespace bandex::oracle
