#include <doctest.h>

#include "bandex/core.hpp"
#include "bandex/fixtures.hpp"
#include "bandex/oracle.hpp"
#include "bandex/rng.hpp"

#include <cmath>

using namespace bandex;

namespace {

// Policy whose probabilities at the single one-hot context equal `probs`.
SoftmaxPolicy policy_with_probs(std::initializer_list<double> probs) {
    SoftmaxPolicy p = SoftmaxPolicy::zeros(1, static_cast<int>(probs.size()));
    int a = 0;
    for (double v : probs) p.weights(0, a++) = std::log(v);
    return p;
}

const ContextTable one_context{Vector::Ones(1)};

}  // namespace

TEST_CASE("policy_probs: zero weights give the uniform distribution") {
    const auto p = SoftmaxPolicy::zeros(2, 3);
    const Vector pi = policy_probs(p, Vector::Ones(2));
    for (int a = 0; a < 3; ++a) CHECK(pi[a] == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("policy_probs: scores (ln 2, 0) give (2/3, 1/3)") {
    SoftmaxPolicy p = SoftmaxPolicy::zeros(1, 2);
    p.weights(0, 0) = std::log(2.0);
    const Vector pi = policy_probs(p, Vector::Ones(1));
    CHECK(std::abs(pi[0] - 2.0 / 3) < 1e-15);
    CHECK(std::abs(pi[1] - 1.0 / 3) < 1e-15);
}

TEST_CASE("policy_probs: masked actions get exact zeros") {
    SoftmaxPolicy p = SoftmaxPolicy::zeros(1, 2);
    p.weights(0, 0) = std::log(2.0);
    MaskMatrix keep_second(1, 2);
    keep_second << false, true;
    p.support_mask = keep_second;
    Vector pi = policy_probs(p, Vector::Ones(1), 0);
    CHECK(pi[0] == 0.0);
    CHECK(pi[1] == 1.0);

    MaskMatrix keep_first(1, 2);
    keep_first << true, false;
    p.support_mask = keep_first;
    pi = policy_probs(p, Vector::Ones(1), 0);
    CHECK(pi[0] == 1.0);
    CHECK(pi[1] == 0.0);
}

TEST_CASE("policy_probs: errors") {
    SoftmaxPolicy p = SoftmaxPolicy::zeros(2, 3);
    CHECK_THROWS_AS(policy_probs(p, Vector::Ones(3)), ContractError);

    p.support_mask = MaskMatrix::Constant(1, 3, false);
    CHECK_THROWS_AS(policy_probs(p, Vector::Ones(2), 0), InvalidPolicyError);
    CHECK_THROWS_AS(policy_probs(p, Vector::Ones(2)), ContractError);
}

TEST_CASE("policy_probs: overflow safety with huge scores") {
    SoftmaxPolicy p = SoftmaxPolicy::zeros(1, 3);
    p.weights << 1000.0, 999.0, -1000.0;
    const Vector pi = policy_probs(p, Vector::Ones(1));
    CHECK(pi.allFinite());
    CHECK(std::abs(pi.sum() - 1.0) < 1e-12);
    CHECK(pi[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("policy_probs: valid distributions for random weights (1000 seeds)") {
    for (std::uint64_t s = 0; s < 1000; ++s) {
        Rng rng(s);
        SoftmaxPolicy p = SoftmaxPolicy::zeros(4, 5, 0.1 + 5.0 * rng.uniform());
        for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = 3.0 * rng.normal();
        Vector x(4);
        for (int i = 0; i < 4; ++i) x[i] = rng.normal();
        const Vector pi = policy_probs(p, x);
        REQUIRE((pi.array() >= 0.0).all());
        REQUIRE(std::abs(pi.sum() - 1.0) <= 1e-12);
    }
}

TEST_CASE("policy_probs: invariant to a constant score shift") {
    Rng rng(7);
    for (int t = 0; t < 200; ++t) {
        SoftmaxPolicy p = SoftmaxPolicy::zeros(3, 4);
        for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = rng.normal();
        // One-hot context: column shift of its row adds a constant to all scores there.
        const Vector x = Vector::Unit(3, 1);
        SoftmaxPolicy q = p;
        q.weights.row(1).array() += 10.0 * rng.normal();
        CHECK((policy_probs(p, x) - policy_probs(q, x)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("clip_support examples") {
    SUBCASE("small entry zeroed and survivors renormalized") {
        const auto clipped = clip_support(policy_with_probs({0.005, 0.495, 0.5}), one_context, 0.01);
        const Vector pi = policy_probs(clipped, one_context[0], 0);
        CHECK(pi[0] == 0.0);
        CHECK(pi[1] == doctest::Approx(0.495 / 0.995).epsilon(1e-12));
        CHECK(pi[2] == doctest::Approx(0.5 / 0.995).epsilon(1e-12));
        CHECK(std::abs(pi[1] - 0.4975) < 1e-4);
        CHECK(std::abs(pi[2] - 0.5025) < 1e-4);
    }
    SUBCASE("nothing below threshold leaves the distribution unchanged") {
        const auto clipped = clip_support(policy_with_probs({0.5, 0.5}), one_context, 0.01);
        const Vector pi = policy_probs(clipped, one_context[0], 0);
        CHECK(pi[0] == doctest::Approx(0.5));
        CHECK(pi[1] == doctest::Approx(0.5));
    }
    SUBCASE("every action clipped is an invalid policy") {
        const auto p = SoftmaxPolicy::zeros(1, 10);
        CHECK_THROWS_AS(clip_support(p, one_context, 0.2), InvalidPolicyError);
    }
    SUBCASE("threshold outside (0, 1)") {
        const auto p = SoftmaxPolicy::zeros(1, 2);
        CHECK_THROWS_AS(clip_support(p, one_context, 0.0), ContractError);
        CHECK_THROWS_AS(clip_support(p, one_context, 1.0), ContractError);
    }
}

TEST_CASE("clip_support is idempotent") {
    Rng rng(11);
    ContextTable contexts;
    for (int c = 0; c < 6; ++c) {
        Vector x(3);
        for (int i = 0; i < 3; ++i) x[i] = rng.normal();
        contexts.push_back(x);
    }
    for (int t = 0; t < 100; ++t) {
        SoftmaxPolicy p = SoftmaxPolicy::zeros(3, 6, 2.0);
        for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = rng.normal();
        const auto once = clip_support(p, contexts, 0.05);
        const auto twice = clip_support(once, contexts, 0.05);
        CHECK(tabulate(once, contexts).probs == tabulate(twice, contexts).probs);
    }
}

TEST_CASE("unsupported_set examples") {
    SUBCASE("plain softmax has full support") {
        SyntheticProblem prob;
        prob.contexts = {Vector::Unit(2, 0), Vector::Unit(2, 1)};
        prob.context_weights = {0.5, 0.5};
        prob.n_actions = 3;
        prob.mean_reward = Matrix::Zero(2, 3);
        SoftmaxPolicy p = SoftmaxPolicy::zeros(2, 3);
        p.weights << 5.0, -5.0, 0.0, 1.0, 2.0, 3.0;
        CHECK(unsupported_set(p, prob).all_empty());
    }
    SUBCASE("explicit zeros") {
        const auto f = fixtures::reference_instance();
        const auto u = unsupported_set(f.logging);
        CHECK(u.at(0) == std::vector<int>{2});
        CHECK(u.at(1) == std::vector<int>{1, 2});
        CHECK(u.contains(1, 2));
        CHECK_FALSE(u.contains(0, 0));
    }
}

TEST_CASE("action_restrict examples") {
    const Vector target = (Vector(3) << 0.2, 0.3, 0.5).finished();
    const std::vector<int> u{2};
    const Vector r = action_restrict(target, u);
    CHECK(r[0] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(r[1] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(r[2] == 0.0);

    CHECK(action_restrict(target, std::vector<int>{}) == target);

    const Vector all_on_u = (Vector(3) << 0.0, 0.0, 1.0).finished();
    CHECK_THROWS_AS(action_restrict(all_on_u, u), DegenerateRestrictionError);
}

TEST_CASE("action_restrict has zero divergence against the logging policy") {
    Rng rng(5);
    for (int t = 0; t < 300; ++t) {
        const auto f = fixtures::random_instance(rng, 5, 6);
        const auto res = action_restrict(f.target, unsupported_set(f.logging));
        CHECK(oracle::exact_support_divergence(f.problem, f.logging, res) == 0.0);
        for (std::size_t c = 0; c < res.n_contexts(); ++c) CHECK(std::abs(res.row(c).sum() - 1.0) <= 1e-12);
    }
}

TEST_CASE("problem and dataset validation") {
    auto f = fixtures::reference_instance();
    CHECK_NOTHROW(f.problem.validate());
    auto bad = f.problem;
    bad.context_weights = {0.5, 0.6};
    CHECK_THROWS_AS(bad.validate(), ContractError);
    bad = f.problem;
    bad.mean_reward(0, 0) = 1.5;
    CHECK_THROWS_AS(bad.validate(), ContractError);

    LoggedDataset d;
    d.contexts = f.problem.contexts;
    d.n_actions = 3;
    d.records = {{0, 1, 0.0, 0.5}};
    CHECK_NOTHROW(d.validate());
    d.records[0].propensity = 0.0;
    CHECK_THROWS_AS(d.validate(), CorruptDataError);
    d.records[0] = {0, 3, 0.0, 0.5};
    CHECK_THROWS_AS(d.validate(), CorruptDataError);
    d.records[0] = {0, 1, 2.0, 0.5};
    CHECK_THROWS_AS(d.validate(), CorruptDataError);
}
