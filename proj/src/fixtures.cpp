#include "bandex/fixtures.hpp"

namespace bandex::fixtures {

Instance reference_instance() {
    Instance f;
    auto& p = f.problem;
    p.contexts = {Vector::Unit(2, 0), Vector::Unit(2, 1)};
    p.context_weights = {0.5, 0.5};
    p.n_actions = 3;
    p.mean_reward.resize(2, 3);
    p.mean_reward << 1.0, 0.0, 0.5,
                     0.2, 0.8, 0.4;
    p.bounds = {0.0, 1.0};
    f.logging.probs.resize(2, 3);
    f.logging.probs << 0.5, 0.5, 0.0,
                       1.0, 0.0, 0.0;
    f.target.probs.resize(2, 3);
    f.target.probs << 0.2, 0.3, 0.5,
                      0.6, 0.3, 0.1;
    return f;
}

Vector random_distribution(Rng& rng, int k, const std::vector<bool>& zero) {
    Vector v(k);
    for (int a = 0; a < k; ++a) {
        const bool z = !zero.empty() && zero[static_cast<std::size_t>(a)];
        v(a) = z ? 0.0 : 0.05 + rng.uniform();
    }
    return v / v.sum();
}

RewardTable random_rewards(Rng& rng, std::size_t n_contexts, int n_actions, RewardBounds bounds) {
    RewardTable t(static_cast<Eigen::Index>(n_contexts), n_actions);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = bounds.min + (bounds.max - bounds.min) * rng.uniform();
    return t;
}

Instance random_instance(Rng& rng, int max_contexts, int max_actions, bool deficient, RewardBounds bounds) {
    const int n_ctx = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_contexts)));
    const int k = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(std::max(1, max_actions - 1))));

    Instance f;
    auto& p = f.problem;
    p.n_actions = k;
    p.bounds = bounds;
    const Vector w = random_distribution(rng, n_ctx);
    p.context_weights.assign(w.data(), w.data() + w.size());
    for (int i = 0; i < n_ctx; ++i) p.contexts.push_back(Vector::Unit(n_ctx, i));
    p.mean_reward = random_rewards(rng, static_cast<std::size_t>(n_ctx), k, bounds);

    f.logging.probs.resize(n_ctx, k);
    f.target.probs.resize(n_ctx, k);
    for (int i = 0; i < n_ctx; ++i) {
        std::vector<bool> zero(static_cast<std::size_t>(k), false);
        if (deficient) {
            for (auto&& z : zero) z = rng.bernoulli(0.4);
            zero[rng.index(static_cast<std::size_t>(k))] = false;
        }
        f.logging.probs.row(i) = random_distribution(rng, k, zero).transpose();
        f.target.probs.row(i) = random_distribution(rng, k).transpose();
    }
    return f;
}

}  // namespace bandex::fixtures
