#include <doctest.h>

#include "bandex/datagen.hpp"
#include "bandex/experiment.hpp"
#include "bandex/fixtures.hpp"
#include "bandex/selection.hpp"

#include <cmath>

using namespace bandex;
using namespace bandex::selection;

TEST_CASE("default grid") {
    const auto g = default_grid({-1.0, 0.0});
    REQUIRE(g.size() == 21);
    CHECK(g.front() == -1.0);
    CHECK(g.back() == 1.0);
    CHECK(std::abs(g[10]) < 1e-15);
    CHECK(std::abs(g[11] - 0.1) < 1e-15);
    CHECK(default_grid({0.0, 2.0}, 5) == std::vector<double>{-2.0, -1.0, 0.0, 1.0, 2.0});
}

TEST_CASE("check_kappa examples") {
    const auto r = check_kappa(0.8, 0.5, 0.1, 5000, 0.1);
    CHECK(r.satisfied);
    CHECK(std::abs(r.failure_prob_bound - 2.0 * std::exp(-1.0)) < 1e-15);
    CHECK(std::abs(r.failure_prob_bound - 0.7358) < 1e-4);
    SUBCASE("both ends of the interval are inclusive") {
        CHECK(check_kappa(0.6, 0.5, 0.1, 10, 0.5).satisfied);
        CHECK(check_kappa(0.9, 0.5, 0.1, 10, 0.5).satisfied);
        CHECK_FALSE(check_kappa(0.95, 0.5, 0.1, 10, 0.5).satisfied);
        CHECK_FALSE(check_kappa(0.55, 0.5, 0.1, 10, 0.5).satisfied);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(check_kappa(0.8, 0.0, 0.1, 10, 0.5), ContractError);
        CHECK_THROWS_AS(check_kappa(0.8, 1.0, 0.1, 10, 0.5), ContractError);
        CHECK_THROWS_AS(check_kappa(0.8, 0.5, 0.25, 10, 0.5), ContractError);
        CHECK_THROWS_AS(check_kappa(0.8, 0.5, 0.1, 0, 0.5), ContractError);
        CHECK_THROWS_AS(check_kappa(0.8, 0.5, 0.1, 10, 0.0), ContractError);
    }
}

TEST_CASE("check_kappa bound is nonincreasing in n, epsilon and p_min") {
    Rng rng(3);
    for (int t = 0; t < 500; ++t) {
        const double kappa = 0.1 + 0.8 * rng.uniform();
        const double eps = (0.05 + 0.4 * rng.uniform()) * kappa;
        const std::size_t n = 1 + rng.index(10000);
        const double pm = 0.01 + 0.98 * rng.uniform();
        const double base = check_kappa(0.5, kappa, eps, n, pm).failure_prob_bound;
        REQUIRE(check_kappa(0.5, kappa, eps, n + 1 + rng.index(100), pm).failure_prob_bound <= base);
        REQUIRE(check_kappa(0.5, kappa, std::min(eps * 1.1, 0.49 * kappa), n, pm).failure_prob_bound <= base);
        REQUIRE(check_kappa(0.5, kappa, eps, n, std::min(1.0, pm * 1.1)).failure_prob_bound <= base);
    }
}

TEST_CASE("p_min") {
    const auto f = fixtures::reference_instance();
    const auto exact = p_min_from_logging(f.logging);
    CHECK(exact.value == 0.5);
    CHECK_FALSE(exact.estimated);
    const auto d = datagen::log_interactions(f.problem, f.logging, 100, 1);
    const auto est = p_min_from_data(d);
    CHECK(est.estimated);
    CHECK(est.value >= exact.value);
    CHECK_THROWS_AS(p_min_from_logging(PolicyTable{Matrix::Zero(1, 2)}), ContractError);
}

TEST_CASE("selector names round-trip") {
    for (auto s : {Selector::minsup, Selector::dm, Selector::conservative, Selector::oracle})
        CHECK(selector_from_string(to_string(s)) == s);
    CHECK_THROWS(selector_from_string("nope"));
}

namespace {

struct Setup {
    SyntheticProblem problem;
    PolicyTable logging;
    LoggedDataset train, val;
    RewardTable rhat;
};

Setup setup(std::uint64_t seed, double tau) {
    Setup s;
    datagen::GenConfig g;
    g.seed = seed;
    s.problem = datagen::translate_rewards(datagen::make_problem(g), -1.0);
    s.logging = tabulate(datagen::make_logging_policy(s.problem, tau, 0.01, derive_seed(seed, 3)), s.problem.contexts);
    s.train = datagen::log_interactions(s.problem, s.logging, 4000, derive_seed(seed, 4));
    s.val = datagen::log_interactions(s.problem, s.logging, 2000, derive_seed(seed, 5));
    s.rhat = constant_rewards(s.problem.n_contexts(), s.problem.n_actions, -1.0);
    return s;
}

}  // namespace

TEST_CASE("singleton grid returns that k for every selector") {
    const auto s = setup(1, 5.0);
    SweepInputs in;
    in.train = &s.train;
    in.val = &s.val;
    in.grid = {0.3};
    in.selectors = {Selector::minsup, Selector::dm, Selector::conservative, Selector::oracle};
    in.logging = &s.logging;
    in.reward_model = &s.rhat;
    in.problem = &s.problem;
    in.train_config.epochs = 5;
    const auto res = sweep_k(in);
    REQUIRE(res.entries.size() == 1);
    for (auto sel : in.selectors) {
        CHECK(res.chosen_k.at(sel) == 0.3);
        CHECK(res.chosen_index.at(sel) == 0);
    }
    CHECK(res.entries[0].exact_value.has_value());
    CHECK(std::abs(res.entries[0].unsupported_mass - (1.0 - res.entries[0].val_weight_sum)) < 1e-15);
}

TEST_CASE("sweep: oracle selection upper-bounds the others and MinSup tracks it") {
    const auto s = setup(0, 5.0);
    SweepInputs in;
    in.train = &s.train;
    in.val = &s.val;
    in.grid = default_grid(s.problem.bounds, 11);
    in.selectors = {Selector::minsup, Selector::dm, Selector::conservative, Selector::oracle};
    in.logging = &s.logging;
    in.reward_model = &s.rhat;
    in.problem = &s.problem;
    const auto res = sweep_k(in);
    REQUIRE(res.entries.size() == 11);
    const double best = *res.entries[res.chosen_index.at(Selector::oracle)].exact_value;
    for (const auto& e : res.entries) CHECK(*e.exact_value <= best);
    CHECK(*res.entries[res.chosen_index.at(Selector::minsup)].exact_value >= best - 0.02);
}

TEST_CASE("sweep: MinSup selection stays near the oracle across seeds") {
    experiment::ExperimentConfig cfg;
    cfg.gen.temperature = 5.0;
    cfg.reward_offset = -1.0;
    cfg.methods = {experiment::Method::policy_restriction};
    int close = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = experiment::run_seed(cfg, seed, 5.0);
        if (r.selected_value.at(Selector::minsup) >= r.selected_value.at(Selector::oracle) - 0.02) ++close;
        CHECK(r.selected_value.at(Selector::minsup) <= r.selected_value.at(Selector::oracle));
    }
    CHECK(close >= 4);
}
