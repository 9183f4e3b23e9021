#include "bandex/learning.hpp"

#include "bandex/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bandex::learning {

std::string to_string(Objective objective) {
    switch (objective) {
        case Objective::naive_ips: return "naive_ips";
        case Objective::action_restricted: return "action_restricted";
        case Objective::augmented: return "augmented";
        case Objective::shifted: return "shifted";
    }
    return "unknown";
}

Objective objective_from_string(const std::string& name) {
    if (name == "naive_ips") return Objective::naive_ips;
    if (name == "action_restricted") return Objective::action_restricted;
    if (name == "augmented") return Objective::augmented;
    if (name == "shifted") return Objective::shifted;
    throw ContractError("unknown objective '" + name + "'");
}

void TrainConfig::validate() const {
    if (!std::isfinite(shift_k)) throw ContractError("shift_k must be finite");
    if (replay_count < 1) throw ContractError("replay_count must be at least 1");
    if (!(learn_rate > 0.0)) throw ContractError("learn_rate must be positive");
    if (epochs < 1) throw ContractError("epochs must be positive");
    if (batch_size < 1) throw ContractError("batch_size must be positive");
    if (!(l2 >= 0.0)) throw ContractError("l2 must be nonnegative");
}

// --- reward regression ------------------------------------------------------

namespace {

Vector design_row(const Vector& x, const std::vector<int>& features) {
    Vector phi(static_cast<Eigen::Index>(features.size()) + 1);
    for (std::size_t j = 0; j < features.size(); ++j) phi[static_cast<Eigen::Index>(j)] = x[features[j]];
    phi[phi.size() - 1] = 1.0;
    return phi;
}

}  // namespace

double RewardModel::predict(const Vector& x, int action) const {
    return design_row(x, features).dot(weights.col(action));
}

RewardTable RewardModel::tabulate(const ContextTable& contexts) const {
    RewardTable t(static_cast<Eigen::Index>(contexts.size()), weights.cols());
    for (std::size_t c = 0; c < contexts.size(); ++c)
        t.row(static_cast<Eigen::Index>(c)) = design_row(contexts[c], features).transpose() * weights;
    return t;
}

RewardModel train_reward_model(const LoggedDataset& data, const RegressionConfig& config) {
    if (data.empty()) throw ContractError("cannot fit a reward model on an empty dataset");
    if (!(config.learn_rate > 0.0) || config.epochs < 1) throw ContractError("invalid regression config");
    const auto dim = static_cast<int>(data.contexts.empty() ? 0 : data.contexts.front().size());

    RewardModel model;
    if (config.feature_subset.empty()) {
        model.features.resize(static_cast<std::size_t>(dim));
        std::iota(model.features.begin(), model.features.end(), 0);
    } else {
        model.features = config.feature_subset;
        for (int f : model.features)
            if (f < 0 || f >= dim) throw ContractError("feature index out of range");
    }
    const auto p = static_cast<Eigen::Index>(model.features.size()) + 1;
    const int k = data.n_actions;
    model.weights = Matrix::Zero(p, k);

    // The squared loss only depends on per-(context, action) counts and reward sums.
    const auto n_ctx = static_cast<Eigen::Index>(data.contexts.size());
    Matrix count = Matrix::Zero(n_ctx, k);
    Matrix total = Matrix::Zero(n_ctx, k);
    double sum_sq = 0.0;
    for (const auto& r : data.records) {
        count(static_cast<Eigen::Index>(r.ctx), r.action) += 1.0;
        total(static_cast<Eigen::Index>(r.ctx), r.action) += r.reward;
        sum_sq += r.reward * r.reward;
    }
    const double n = static_cast<double>(data.size());
    Matrix design(n_ctx, p);
    for (Eigen::Index c = 0; c < n_ctx; ++c)
        design.row(c) = design_row(data.contexts[static_cast<std::size_t>(c)], model.features).transpose();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const Matrix pred = design * model.weights;
        // sum_i (pred - r_i)^2 = sum_cells count*pred^2 - 2*pred*total + sum r^2
        const double sse =
            (count.array() * pred.array().square()).sum() - 2.0 * (pred.array() * total.array()).sum() + sum_sq;
        const double loss = sse / n + config.l2 * model.weights.squaredNorm();
        if (!std::isfinite(loss)) throw TrainingFailure("reward model training diverged", epoch);
        model.loss_trace.push_back(sse / n);

        const Matrix residual = (count.array() * pred.array() - total.array()).matrix();
        const Matrix grad = (2.0 / n) * design.transpose() * residual + 2.0 * config.l2 * model.weights;
        model.weights -= config.learn_rate * grad;
    }
    const Matrix pred = design * model.weights;
    const double sse = (count.array() * pred.array().square()).sum() - 2.0 * (pred.array() * total.array()).sum() + sum_sq;
    if (!std::isfinite(sse)) throw TrainingFailure("reward model training diverged", config.epochs);
    model.loss_trace.push_back(std::max(0.0, sse / n));
    return model;
}

// --- data augmentation --------------------------------------------------------

AugmentedDataset augment_dataset(const LoggedDataset& data, const PolicyTable& logging,
                                 const RewardTable& reward_model, int replay_count, std::uint64_t seed) {
    if (replay_count < 1) throw ContractError("replay_count must be at least 1");
    if (logging.n_contexts() != data.contexts.size() || logging.n_actions() != data.n_actions)
        throw ContractError("logging table does not match dataset");
    if (reward_model.rows() != static_cast<Eigen::Index>(data.contexts.size()) || reward_model.cols() != data.n_actions)
        throw ContractError("reward model does not match dataset");

    const SupportSet support = unsupported_set(logging);
    Rng rng(derive_seed(seed, 31));
    AugmentedDataset out;
    out.original = data;
    out.replay_count = replay_count;
    for (int pass = 0; pass < replay_count; ++pass) {
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto ctx = data.records[i].ctx;
            const auto& u = support.at(ctx);
            if (u.empty()) continue;
            const int y = u[rng.index(u.size())];
            LogRecord rec{ctx, y, reward_model(static_cast<Eigen::Index>(ctx), y), 1.0 / static_cast<double>(u.size())};
            out.synthetic.push_back({rec, i});
        }
    }
    return out;
}

// --- objectives ---------------------------------------------------------------

ObjectiveValue objective_value_and_gradient(const SoftmaxPolicy& policy, const ObjectiveBatch& batch,
                                            Objective objective, const ObjectiveAux& aux) {
    if (!batch.contexts) throw ContractError("batch has no context table");
    if (batch.logged.empty()) throw ContractError("empty batch");
    const auto& contexts = *batch.contexts;
    const auto n_ctx = static_cast<Eigen::Index>(contexts.size());
    const int k = policy.n_actions();

    SoftmaxPolicy eval = policy;
    if (objective == Objective::action_restricted) {
        if (!aux.support) throw ContractError("action_restricted objective needs the logging support");
        if (aux.support->rows() != n_ctx || aux.support->cols() != k)
            throw ContractError("logging support does not match batch contexts");
        eval.support_mask = *aux.support;
    }

    // Every term is linear in pi(y|x): value = sum_{x,y} coef(x,y) pi(y|x).
    Matrix coef = Matrix::Zero(n_ctx, k);
    Matrix weight_coef = Matrix::Zero(n_ctx, k);
    const double inv_b = 1.0 / static_cast<double>(batch.logged.size());
    const double shift = objective == Objective::shifted ? aux.shift_k : 0.0;
    for (const auto& r : batch.logged) {
        if (!(r.propensity > 0.0)) throw CorruptDataError("nonpositive propensity in batch");
        const auto c = static_cast<Eigen::Index>(r.ctx);
        coef(c, r.action) += (r.reward + shift) * inv_b / r.propensity;
        weight_coef(c, r.action) += inv_b / r.propensity;
    }
    if (objective == Objective::augmented && !batch.synthetic.empty()) {
        if (!(batch.synthetic_norm > 0.0)) throw ContractError("synthetic_norm must be positive");
        for (const auto& r : batch.synthetic)
            coef(static_cast<Eigen::Index>(r.ctx), r.action) += r.reward / (r.propensity * batch.synthetic_norm);
    }

    ObjectiveValue out;
    out.gradient = Matrix::Zero(policy.weights.rows(), k);
    for (Eigen::Index c = 0; c < n_ctx; ++c) {
        if (coef.row(c).isZero(0.0) && weight_coef.row(c).isZero(0.0)) continue;
        const auto ctx = static_cast<std::size_t>(c);
        const Vector pi = policy_probs(eval, contexts[ctx], ctx);
        const Vector cvec = coef.row(c).transpose();
        const double expected = cvec.dot(pi);
        out.value += expected;
        out.weight_sum += weight_coef.row(c).dot(pi);
        // d/ds_a sum_y c_y pi_y = pi_a (c_a - sum_y c_y pi_y); masked actions have pi_a = 0.
        const Vector ds = pi.cwiseProduct((cvec.array() - expected).matrix());
        out.gradient.noalias() += policy.temperature * contexts[ctx] * ds.transpose();
    }
    if (aux.l2 > 0.0) {
        out.value -= 0.5 * aux.l2 * policy.weights.squaredNorm();
        out.gradient -= aux.l2 * policy.weights;
    }
    return out;
}

ObjectiveBatch full_batch(const LoggedDataset& data) {
    ObjectiveBatch b;
    b.contexts = &data.contexts;
    b.logged = data.records;
    return b;
}

ObjectiveBatch full_batch(const AugmentedDataset& data) {
    ObjectiveBatch b = full_batch(data.original);
    b.synthetic.reserve(data.synthetic.size());
    for (const auto& s : data.synthetic) b.synthetic.push_back(s.record);
    b.synthetic_norm = static_cast<double>(data.normalizer());
    return b;
}

// --- ERM ----------------------------------------------------------------------

TrainResult train_erm(const LoggedDataset& train, const TrainConfig& config, const PolicyTable* logging,
                      const RewardTable* reward_model) {
    config.validate();
    if (train.empty()) throw ContractError("empty training data");
    const auto dim = train.contexts.front().size();
    const int k = train.n_actions;

    ObjectiveAux aux;
    aux.shift_k = config.shift_k;
    aux.l2 = config.l2;

    MaskMatrix mask;
    if (config.objective == Objective::action_restricted || config.objective == Objective::augmented) {
        if (!logging) throw ContractError(to_string(config.objective) + " training needs the logging policy");
        if (logging->n_contexts() != train.contexts.size() || logging->n_actions() != k)
            throw ContractError("logging table does not match training data");
    }
    if (config.objective == Objective::action_restricted) {
        mask = support_mask(*logging);
        aux.support = &mask;
    }

    AugmentedDataset augmented;
    std::vector<std::vector<std::size_t>> children;
    if (config.objective == Objective::augmented) {
        if (!reward_model) throw ContractError("augmented training needs a reward model");
        augmented = augment_dataset(train, *logging, *reward_model, config.replay_count, derive_seed(config.seed, 41));
        children.resize(train.size());
        for (std::size_t j = 0; j < augmented.synthetic.size(); ++j)
            children[augmented.synthetic[j].source].push_back(j);
    }

    const ObjectiveBatch everything =
        config.objective == Objective::augmented ? full_batch(augmented) : full_batch(train);

    TrainResult result;
    result.policy = SoftmaxPolicy::zeros(dim, k);
    Rng rng(derive_seed(config.seed, 42));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    const auto batch = static_cast<std::size_t>(config.batch_size);

    long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            ObjectiveBatch mb;
            mb.contexts = &train.contexts;
            mb.logged.reserve(stop - start);
            for (std::size_t t = start; t < stop; ++t) {
                mb.logged.push_back(train.records[order[t]]);
                if (!children.empty())
                    for (std::size_t j : children[order[t]]) mb.synthetic.push_back(augmented.synthetic[j].record);
            }
            mb.synthetic_norm = static_cast<double>((stop - start) * static_cast<std::size_t>(config.replay_count));
            const auto ov = objective_value_and_gradient(result.policy, mb, config.objective, aux);
            if (!std::isfinite(ov.value) || !ov.gradient.allFinite())
                throw TrainingFailure("non-finite " + to_string(config.objective) + " objective", step);
            result.policy.weights += config.learn_rate * ov.gradient;
            ++step;
        }
        const auto full = objective_value_and_gradient(result.policy, everything, config.objective, aux);
        if (!std::isfinite(full.value)) throw TrainingFailure("non-finite objective after epoch", step);
        result.trace.push_back({epoch, full.value, full.weight_sum});
    }
    if (config.objective == Objective::action_restricted) result.policy.support_mask = mask;
    return result;
}

}  // namespace bandex::learning
