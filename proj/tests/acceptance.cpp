// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "bandex/datagen.hpp"
#include "bandex/estimators.hpp"
#include "bandex/experiment.hpp"
#include "bandex/fixtures.hpp"
#include "bandex/learning.hpp"
#include "bandex/oracle.hpp"
#include "bandex/selection.hpp"
#include "support/convert.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace bandex;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::vector<double> ips_terms(const LoggedDataset& d, const PolicyTable& target) {
    std::vector<double> v;
    for (const auto& r : d.records) v.push_back(target(r.ctx, r.action) / r.propensity * r.reward);
    return v;
}

fixtures::Instance dense_instance(Rng& rng) {
    auto f = fixtures::random_instance(rng, 4, 4);
    for (auto& x : f.problem.contexts) {
        x = Vector(3);
        for (int i = 0; i < 3; ++i) x[i] = rng.normal();
    }
    return f;
}

Outcome criterion1() {
    Rng rng(1001);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const auto f = fixtures::random_instance(rng, 3, 4);
        const auto rep = oracle::exact_ips_bias(f.problem, f.logging, f.target);
        // Enumeration on the test side, independent of the library oracle.
        const auto r = to_ref(f.problem, f.logging);
        const auto tgt = to_ref(f.target.probs);
        const double enumerated = ref::expected_ips(r, tgt, 2) - ref::value(r, tgt);
        worst = std::max({worst, std::abs(rep.closed_form_bias - enumerated), std::abs(rep.closed_form_bias - rep.bias)});
    }
    return {worst <= 1e-12, "max |closed form - enumerated| " + fmt(worst)};
}

Outcome criterion2() {
    Rng rng(1002);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const auto f = fixtures::random_instance(rng, 3, 4);
        const RewardTable rhat = fixtures::random_rewards(rng, f.problem.n_contexts(), f.problem.n_actions, {-1.0, 2.0});
        const auto r = to_ref(f.problem, f.logging);
        const auto tgt = to_ref(f.target.probs);
        const double enumerated = ref::dataset_expectation(r, 2, [&](std::size_t x, std::size_t y) {
            double v = tgt[x][y] / r.logging[x][y] * r.delta[x][y];
            for (std::size_t a = 0; a < tgt[x].size(); ++a)
                if (r.logging[x][a] == 0.0) v += tgt[x][a] * rhat(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a));
            return v;
        }) - ref::value(r, tgt);
        worst = std::max(worst, std::abs(oracle::exact_augmented_bias(f.problem, f.logging, f.target, rhat) - enumerated));
    }
    const auto f = fixtures::reference_instance();
    const RewardTable zero = constant_rewards(2, 3, 0.0);
    const double closed = oracle::exact_augmented_bias(f.problem, f.logging, f.target, zero);
    const auto d = datagen::log_interactions(f.problem, f.logging, 100000, 2002);
    const auto s = sample_stats(ips_terms(d, f.target));  // conservative imputation adds zero
    const double est = estimators::augmented_ips(d, f.target, f.logging, zero).value;
    const double mc_bias = est - oracle::exact_policy_value(f.problem, f.target);
    const double z = std::abs(mc_bias - (-0.265)) / s.se;
    const bool ok = worst <= 1e-12 && std::abs(closed + 0.265) <= 1e-12 && z <= 3.0;
    return {ok, "enumeration error " + fmt(worst) + ", closed form " + fmt(closed) + ", MC bias " + fmt(mc_bias) +
                    " (|z| " + fmt(z) + ")"};
}

Outcome criterion3() {
    const auto f = fixtures::reference_instance();
    PolicyTable on_u{Matrix(2, 3)};
    on_u.probs << 0.0, 0.0, 1.0, 0.0, 0.5, 0.5;
    const std::vector<PolicyTable> list{f.logging, f.target, on_u};
    const auto res = oracle::adversarial_construction(f.problem, f.logging, list);
    return {res.max_divergence == 1.0 && res.gap >= 1.0,
            "gap " + fmt(res.gap) + " at max divergence " + fmt(res.max_divergence)};
}

Outcome criterion4() {
    Rng rng(1004);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const auto f = fixtures::random_instance(rng, 3, 4);
        const auto r = to_ref(f.problem, f.logging);
        const auto tgt = to_ref(f.target.probs);
        worst = std::max({worst,
                          std::abs(oracle::expected_weight_sum(f.problem, f.logging, f.target) +
                                   oracle::exact_support_divergence(f.problem, f.logging, f.target) - 1.0),
                          std::abs(ref::expected_weight_sum(r, tgt, 2) + ref::divergence(r, tgt) - 1.0)});
    }
    const auto f = fixtures::reference_instance();
    const double div = oracle::exact_support_divergence(f.problem, f.logging, f.target);
    std::vector<double> sds;
    double worst_z = 0.0;
    std::string detail;
    for (std::size_t n : {std::size_t{100}, std::size_t{1000}, std::size_t{10000}}) {
        std::vector<double> v;
        for (int rep = 0; rep < 300; ++rep) {
            const auto d = datagen::log_interactions(f.problem, f.logging, n, derive_seed(1004 + n, rep));
            v.push_back(estimators::ips(d, f.target).weight_sum + div);
        }
        const auto s = sample_stats(v);
        worst_z = std::max(worst_z, std::abs(s.mean - 1.0) / s.se);
        sds.push_back(s.sd);
        detail += "n=" + std::to_string(n) + " std " + fmt(s.sd) + "; ";
    }
    const bool ok = worst <= 1e-12 && worst_z <= 3.0 && sds[0] > sds[1] && sds[1] > sds[2];
    return {ok, "identity error " + fmt(worst) + ", " + detail + "max |z| " + fmt(worst_z)};
}

Outcome criterion5() {
    SyntheticProblem p;
    p.contexts = {Vector::Ones(1)};
    p.context_weights = {1.0};
    p.n_actions = 3;
    p.mean_reward = Matrix::Constant(1, 3, 0.5);
    PolicyTable logging{Matrix(1, 3)};
    logging.probs << 0.1, 0.9, 0.0;
    PolicyTable target{Matrix(1, 3)};
    target.probs << 0.5, 0.2, 0.3;
    const double div = oracle::exact_support_divergence(p, logging, target);
    const double kappa = 0.29, eps = 0.1;
    const std::size_t n = 5000;
    int violations = 0;
    double bound = 1.0;
    for (int rep = 0; rep < 2000; ++rep) {
        const auto d = datagen::log_interactions(p, logging, n, derive_seed(1005, rep));
        const auto chk = selection::check_kappa(estimators::ips(d, target).weight_sum, kappa, eps, n, 0.1);
        bound = chk.failure_prob_bound;
        if (chk.satisfied && div > kappa) ++violations;
    }
    const double freq = violations / 2000.0;

    Rng rng(1105);
    bool monotone = true;
    for (int t = 0; t < 1000; ++t) {
        const double k = 0.1 + 0.8 * rng.uniform();
        const double e = (0.05 + 0.4 * rng.uniform()) * k;
        const std::size_t m = 1 + rng.index(10000);
        const double pm = 0.01 + 0.98 * rng.uniform();
        const double b = selection::check_kappa(0.5, k, e, m, pm).failure_prob_bound;
        monotone = monotone && selection::check_kappa(0.5, k, e, m + 1, pm).failure_prob_bound <= b &&
                   selection::check_kappa(0.5, k, std::min(1.1 * e, 0.49 * k), m, pm).failure_prob_bound <= b &&
                   selection::check_kappa(0.5, k, e, m, std::min(1.0, 1.1 * pm)).failure_prob_bound <= b;
    }
    const bool ok = freq <= bound && std::abs(bound - 2.0 * std::exp(-1.0)) < 1e-15 && monotone;
    return {ok, "violation frequency " + fmt(freq) + " vs bound " + fmt(bound) +
                    (monotone ? ", bound monotone" : ", bound NOT monotone")};
}

Outcome criterion6() {
    const auto f = fixtures::reference_instance();
    double worst = 0.0;
    for (const RewardTable& rhat : {RewardTable(f.problem.mean_reward), constant_rewards(2, 3, 0.0),
                                    RewardTable((f.problem.mean_reward.array() + 0.1).matrix())}) {
        const double eq7 = oracle::expected_augmented_ips(f.problem, f.logging, f.target, rhat);
        for (int replay : {1, 5})
            worst = std::max(worst, std::abs(oracle::exact_sampled_objective_expectation(f.problem, f.logging, f.target,
                                                                                         rhat, replay) -
                                             eq7));
    }
    return {worst <= 1e-12, "max error " + fmt(worst)};
}

Outcome criterion7() {
    Rng rng(1007);
    double worst = 0.0;
    double worst_ips = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const auto f = fixtures::random_instance(rng, 4, 5);
        const auto d = datagen::log_interactions(f.problem, f.logging, 20, rng.engine()());
        const RewardTable rhat = fixtures::random_rewards(rng, f.problem.n_contexts(), f.problem.n_actions, {-2, 2});
        worst = std::max(worst, estimators::dr(d, f.target, rhat, f.logging).diagnostics.at("decomposition_gap"));
        const RewardTable zero = constant_rewards(f.problem.n_contexts(), f.problem.n_actions, 0.0);
        worst_ips = std::max(worst_ips, std::abs(estimators::dr(d, f.target, zero).value - estimators::ips(d, f.target).value));
    }
    return {worst <= 1e-10 && worst_ips == 0.0, "form gap " + fmt(worst) + ", |DR(0) - IPS| " + fmt(worst_ips)};
}

Outcome criterion8() {
    Rng rng(1008);
    double worst = 0.0;
    using learning::Objective;
    for (int t = 0; t < 50; ++t) {
        const auto f = dense_instance(rng);
        const auto d = datagen::log_interactions(f.problem, f.logging, 25, rng.engine()());
        const RewardTable rhat = fixtures::random_rewards(rng, f.problem.n_contexts(), f.problem.n_actions, {0, 1});
        const auto aug = learning::augment_dataset(d, f.logging, rhat, 2, rng.engine()());
        SoftmaxPolicy policy = SoftmaxPolicy::zeros(3, f.problem.n_actions, 0.5 + rng.uniform());
        for (Eigen::Index i = 0; i < policy.weights.size(); ++i) policy.weights.data()[i] = rng.normal();
        const MaskMatrix mask = support_mask(f.logging);
        learning::ObjectiveAux aux;
        aux.shift_k = 2.0 * rng.uniform() - 1.0;
        aux.support = &mask;
        for (auto obj : {Objective::naive_ips, Objective::action_restricted, Objective::augmented, Objective::shifted}) {
            const auto batch = obj == Objective::augmented ? learning::full_batch(aug) : learning::full_batch(d);
            const Matrix g = learning::objective_value_and_gradient(policy, batch, obj, aux).gradient;
            Matrix fd(g.rows(), g.cols());
            for (Eigen::Index i = 0; i < g.size(); ++i) {
                SoftmaxPolicy up = policy, down = policy;
                up.weights.data()[i] += 1e-5;
                down.weights.data()[i] -= 1e-5;
                fd.data()[i] = (learning::objective_value_and_gradient(up, batch, obj, aux).value -
                                learning::objective_value_and_gradient(down, batch, obj, aux).value) /
                               2e-5;
            }
            worst = std::max(worst, (g - fd).norm() / std::max({g.norm(), fd.norm(), 1e-8}));
        }
    }
    return {worst < 1e-4, "max relative error " + fmt(worst)};
}

// Shared run for the learning criteria: multiclass 20x10, rewards in [-1, 0], high deficiency.
struct LearningRuns {
    std::vector<experiment::SeedResult> results;
    std::string error;
};

const LearningRuns& learning_runs() {
    static const LearningRuns runs = [] {
        LearningRuns out;
        experiment::ExperimentConfig cfg;
        cfg.gen.temperature = 5.0;
        cfg.reward_offset = -1.0;
        try {
            for (std::uint64_t seed : cfg.seeds) out.results.push_back(experiment::run_seed(cfg, seed, 5.0));
        } catch (const Error& e) {
            out.error = e.what();
        }
        return out;
    }();
    return runs;
}

Outcome criterion9() {
    const auto& runs = learning_runs();
    if (!runs.error.empty()) return {false, runs.error};
    using experiment::Method;
    int wins = 0;
    double min_unsupported = 1.0;
    std::string detail;
    for (const auto& r : runs.results) {
        min_unsupported = std::min(min_unsupported, r.unsupported_fraction);
        const double pr = r.methods.at(Method::policy_restriction).exact_value;
        const double nv = r.methods.at(Method::naive_ips).exact_value;
        if (pr > nv) ++wins;
        detail += fmt(pr) + ">" + fmt(nv) + (pr > nv ? " " : "(no) ");
    }
    return {wins >= 4 && min_unsupported >= 0.6,
            std::to_string(wins) + "/5 seeds, min unsupported " + fmt(min_unsupported) + "; " + detail};
}

Outcome criterion10() {
    const auto& runs = learning_runs();
    if (!runs.error.empty()) return {false, runs.error};
    using experiment::Method;
    bool zero_div = true, within = true;
    int trailing = 0;
    double worst_excess = -1.0;
    for (const auto& r : runs.results) {
        const auto& res = r.methods.at(Method::action_restriction);
        zero_div = zero_div && res.support_divergence == 0.0;
        const double best = std::max({r.methods.at(Method::conservative).exact_value,
                                      r.methods.at(Method::regression).exact_value,
                                      r.methods.at(Method::policy_restriction).exact_value});
        worst_excess = std::max(worst_excess, res.exact_value - best);
        within = within && res.exact_value <= best + 0.02;
        if (res.exact_value < best) ++trailing;
    }
    return {zero_div && within && trailing >= 3,
            std::string(zero_div ? "zero divergence on every seed" : "nonzero divergence") + ", max excess over best " +
                fmt(worst_excess) + ", trails in " + std::to_string(trailing) + "/5"};
}

Outcome criterion11() {
    Rng rng(1011);
    double worst_mass = 0.0, worst_ratio = 0.0;
    bool support_ok = true, bound_ok = true;
    for (int t = 0; t < 1000; ++t) {
        const auto f = fixtures::random_instance(rng, 4, 10);
        Matrix p = f.logging.probs.array().pow(1.0 + 8.0 * rng.uniform());
        for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
        const auto ms = estimators::build_minsup(PolicyTable{p});
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            worst_mass = std::max(worst_mass, std::abs(ms.table.probs.row(i).sum() - 1.0));
            for (Eigen::Index a = 0; a < p.cols(); ++a) {
                const double q = ms.table.probs(i, a);
                if (q < 0.0) support_ok = false;
                if (q <= 0.0) continue;
                if (p(i, a) == 0.0) {
                    support_ok = false;
                    continue;
                }
                worst_ratio = std::max(worst_ratio, q / p(i, a));
                if (q > 100.0 * p(i, a)) bound_ok = false;
            }
        }
    }
    const auto f = fixtures::reference_instance();
    const auto ms = estimators::build_minsup(f.logging);
    const auto d = datagen::log_interactions(f.problem, f.logging, 100000, 1011);
    const auto s = sample_stats(ips_terms(d, ms.table));
    const double z = std::abs(s.mean - oracle::exact_policy_value(f.problem, ms.table)) / s.se;
    const bool ok = support_ok && bound_ok && worst_mass <= 1e-12 && z <= 3.0;
    return {ok, "max weight " + fmt(worst_ratio) + ", mass error " + fmt(worst_mass) + ", IPS |z| " + fmt(z)};
}

Outcome criterion12() {
    const auto& runs = learning_runs();
    if (!runs.error.empty()) return {false, runs.error};
    using selection::Selector;
    int wins = 0;
    std::string detail;
    for (const auto& r : runs.results) {
        const double ms = r.selected_value.at(Selector::minsup);
        const double cons = r.selected_value.at(Selector::conservative);
        if (ms >= cons) ++wins;
        detail += fmt(ms) + (ms >= cons ? ">=" : "<") + fmt(cons) + " ";
    }
    return {wins >= 4, std::to_string(wins) + "/5 seeds; " + detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 ips bias closed form", criterion1},
        {"2 augmented bias closed form and Monte Carlo", criterion2},
        {"3 adversarial gap", criterion3},
        {"4 weight sum identity and convergence", criterion4},
        {"5 kappa check failure bound", criterion5},
        {"6 sampled augmentation expectation", criterion6},
        {"7 doubly robust identity", criterion7},
        {"8 objective gradients", criterion8},
        {"9 policy restriction beats naive IPS", criterion9},
        {"10 action restriction zero divergence and ordering", criterion10},
        {"11 MinSup invariants", criterion11},
        {"12 MinSup selection vs conservative selection", criterion12},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (out.passed ? "PASS " : "FAIL ") << name << " | " << out.detail << " | " << fmt(secs) << " s"
                  << std::endl;
        if (!out.passed) ++failed;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
