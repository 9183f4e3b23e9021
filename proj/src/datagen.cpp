#include "bandex/datagen.hpp"

#include "bandex/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bandex::datagen {

namespace {

std::vector<double> resolve_weights(const GenConfig& config) {
    if (config.context_weights) {
        if (config.context_weights->size() != static_cast<std::size_t>(config.n_contexts))
            throw ContractError("context_weights size does not match n_contexts");
        return *config.context_weights;
    }
    return std::vector<double>(static_cast<std::size_t>(config.n_contexts), 1.0 / config.n_contexts);
}

Vector normal_vector(Rng& rng, int size) {
    Vector v(size);
    for (int i = 0; i < size; ++i) v[i] = rng.normal();
    return v;
}

}  // namespace

void GenConfig::validate() const {
    if (n_contexts <= 0 || context_dim <= 0 || n_actions <= 0)
        throw ContractError("n_contexts, context_dim and n_actions must be positive");
    if (scheme == Scheme::feature_split && n_actions < 2)
        throw ContractError("feature_split needs at least two actions");
    if (!(temperature > 0.0)) throw ContractError("temperature must be positive");
    if (!(clip_threshold > 0.0 && clip_threshold < 1.0)) throw ContractError("clip_threshold must lie in (0, 1)");
    if (context_weights) {
        if (context_weights->size() != static_cast<std::size_t>(n_contexts))
            throw ContractError("context_weights size does not match n_contexts");
        double total = 0.0;
        for (double w : *context_weights) {
            if (!(w >= 0.0)) throw ContractError("context_weights must be nonnegative");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ContractError("context_weights must sum to 1");
    }
}

SyntheticProblem make_multiclass_problem(const GenConfig& config) {
    config.validate();
    if (config.scheme != Scheme::multiclass) throw ContractError("config scheme is not multiclass");
    Rng rng(derive_seed(config.seed, 1));

    SyntheticProblem p;
    p.n_actions = config.n_actions;
    p.context_weights = resolve_weights(config);
    p.bounds = {0.0, 1.0};
    p.noise = RewardNoise::deterministic;

    Matrix teacher(config.context_dim, config.n_actions);
    for (Eigen::Index i = 0; i < teacher.size(); ++i) teacher.data()[i] = rng.normal();

    p.mean_reward = RewardTable::Zero(config.n_contexts, config.n_actions);
    for (int c = 0; c < config.n_contexts; ++c) {
        p.contexts.push_back(normal_vector(rng, config.context_dim));
        Eigen::Index label = 0;
        (teacher.transpose() * p.contexts.back()).maxCoeff(&label);
        p.mean_reward(c, label) = 1.0;
    }
    p.validate();
    return p;
}

SyntheticProblem make_feature_split_problem(const GenConfig& config) {
    config.validate();
    if (config.scheme != Scheme::feature_split) throw ContractError("config scheme is not feature_split");
    Rng rng(derive_seed(config.seed, 2));

    SyntheticProblem p;
    p.n_actions = config.n_actions;
    p.context_weights = resolve_weights(config);
    p.bounds = {0.0, 1.0};
    p.noise = RewardNoise::deterministic;

    RewardTable raw(config.n_contexts, config.n_actions);
    for (int c = 0; c < config.n_contexts; ++c) {
        const Vector v = normal_vector(rng, config.context_dim + config.n_actions);
        p.contexts.push_back(v.head(config.context_dim));
        raw.row(c) = v.tail(config.n_actions).transpose();
    }
    const double lo = raw.minCoeff();
    const double hi = raw.maxCoeff();
    if (hi > lo) {
        p.mean_reward = (raw.array() - lo) / (hi - lo);
    } else {
        p.mean_reward = RewardTable::Zero(raw.rows(), raw.cols());
    }
    p.validate();
    return p;
}

SyntheticProblem make_problem(const GenConfig& config) {
    return config.scheme == Scheme::multiclass ? make_multiclass_problem(config) : make_feature_split_problem(config);
}

SoftmaxPolicy make_logging_policy(const SyntheticProblem& problem, double temperature, double clip_threshold,
                                  std::uint64_t seed, const LoggerTraining& training) {
    if (!(temperature > 0.0)) throw ContractError("temperature must be positive");
    problem.validate();
    Rng rng(derive_seed(seed, 3));

    const auto dim = static_cast<Eigen::Index>(problem.context_dim());
    const int k = problem.n_actions;
    SoftmaxPolicy policy = SoftmaxPolicy::zeros(static_cast<std::size_t>(dim), k);
    for (Eigen::Index i = 0; i < policy.weights.size(); ++i)
        policy.weights.data()[i] = training.init_scale * rng.normal();

    std::vector<int> labels(problem.n_contexts());
    for (std::size_t c = 0; c < problem.n_contexts(); ++c) {
        Eigen::Index best = 0;
        problem.mean_reward.row(static_cast<Eigen::Index>(c)).maxCoeff(&best);
        labels[c] = static_cast<int>(best);
    }

    // The logger only sees a seeded subset of contexts.
    std::vector<std::size_t> seen(problem.n_contexts());
    std::iota(seen.begin(), seen.end(), 0);
    for (std::size_t i = seen.size(); i > 1; --i) std::swap(seen[i - 1], seen[rng.index(i)]);
    const auto n_seen = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(training.train_fraction * static_cast<double>(seen.size()))));
    seen.resize(std::min(n_seen, seen.size()));
    double seen_mass = 0.0;
    for (auto c : seen) seen_mass += problem.context_weights[c];
    if (!(seen_mass > 0.0)) seen_mass = 1.0;

    // Full-batch gradient descent on P(X)-weighted cross-entropy over the seen contexts.
    for (int step = 0; step < training.steps; ++step) {
        Matrix grad = Matrix::Zero(dim, k);
        for (std::size_t c : seen) {
            const Vector& x = problem.contexts[c];
            Vector residual = policy_probs(policy, x);
            residual[labels[c]] -= 1.0;
            grad.noalias() += problem.context_weights[c] / seen_mass * x * residual.transpose();
        }
        policy.weights -= training.learn_rate * grad;
    }

    policy.temperature = temperature;
    return clip_support(policy, problem.contexts, clip_threshold);
}

double unsupported_fraction(const PolicyTable& logging) {
    if (logging.probs.size() == 0) return 0.0;
    return static_cast<double>((logging.probs.array() == 0.0).count()) / static_cast<double>(logging.probs.size());
}

LoggedDataset log_interactions(const SyntheticProblem& problem, const PolicyTable& logging, std::size_t n,
                               std::uint64_t seed) {
    problem.validate();
    if (logging.n_contexts() != problem.n_contexts() || logging.n_actions() != problem.n_actions)
        throw ContractError("logging table does not match problem shape");
    Rng rng(derive_seed(seed, 4));

    const Vector weights = Eigen::Map<const Vector>(problem.context_weights.data(),
                                                    static_cast<Eigen::Index>(problem.context_weights.size()));
    LoggedDataset d;
    d.contexts = problem.contexts;
    d.n_actions = problem.n_actions;
    d.bounds = problem.bounds;
    d.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ctx = static_cast<std::size_t>(rng.categorical(weights));
        const Vector probs = logging.row(ctx).transpose();
        const int action = rng.categorical(probs);
        const double mean = problem.mean_reward(static_cast<Eigen::Index>(ctx), action);
        double reward = mean;
        if (problem.noise == RewardNoise::bernoulli) {
            // Two-point law on {r_min, r_max} with mean delta(x, y).
            const double span = problem.bounds.max - problem.bounds.min;
            const double p_hi = span > 0.0 ? (mean - problem.bounds.min) / span : 0.0;
            reward = rng.bernoulli(p_hi) ? problem.bounds.max : problem.bounds.min;
        }
        d.records.push_back({ctx, action, reward, probs[action]});
    }
    return d;
}

LoggedDataset log_interactions(const SyntheticProblem& problem, const SoftmaxPolicy& logging, std::size_t n,
                               std::uint64_t seed) {
    return log_interactions(problem, tabulate(logging, problem.contexts), n, seed);
}

SyntheticProblem translate_rewards(const SyntheticProblem& problem, double offset) {
    SyntheticProblem out = problem;
    out.mean_reward.array() += offset;
    out.bounds = {problem.bounds.min + offset, problem.bounds.max + offset};
    return out;
}

LoggedDataset translate_rewards(const LoggedDataset& dataset, double offset) {
    LoggedDataset out = dataset;
    for (auto& r : out.records) r.reward += offset;
    out.bounds = {dataset.bounds.min + offset, dataset.bounds.max + offset};
    return out;
}

}  // namespace bandex::datagen
