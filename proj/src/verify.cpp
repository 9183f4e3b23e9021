#include "bandex/verify.hpp"

#include "bandex/datagen.hpp"
#include "bandex/estimators.hpp"
#include "bandex/fixtures.hpp"
#include "bandex/io.hpp"
#include "bandex/learning.hpp"
#include "bandex/oracle.hpp"
#include "bandex/selection.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace bandex::verify {

Level level_from_string(const std::string& name) {
    if (name == "fast") return Level::fast;
    if (name == "full") return Level::full;
    throw ContractError("unknown verify level '" + name + "'");
}

bool all_passed(const std::vector<Entry>& entries) {
    for (const auto& e : entries)
        if (!e.passed) return false;
    return true;
}

namespace {

using fixtures::Instance;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

Entry tolerance_entry(std::string name, double statistic, double tol) {
    return {std::move(name), statistic <= tol, statistic, "max abs error " + fmt(statistic) + " (tol " + fmt(tol) + ")"};
}

/// Monte Carlo mean and standard error.
struct Moments {
    double mean = 0.0;
    double se = 0.0;
    double sd = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    m.se = m.sd / std::sqrt(static_cast<double>(v.size()));
    return m;
}

Entry three_sigma_entry(std::string name, const Moments& m, double expected) {
    const double z = std::abs(m.mean - expected) / m.se;
    return {std::move(name), z <= 3.0, z,
            "mean " + fmt(m.mean) + " vs " + fmt(expected) + ", |z| = " + fmt(z)};
}

// Per-record IPS terms; their sample mean is the estimator.
std::vector<double> ips_terms(const LoggedDataset& d, const PolicyTable& target) {
    std::vector<double> v;
    v.reserve(d.size());
    for (const auto& r : d.records) v.push_back(target(r.ctx, r.action) / r.propensity * r.reward);
    return v;
}

std::vector<double> augmented_terms(const LoggedDataset& d, const PolicyTable& target, const PolicyTable& logging,
                                    const RewardTable& rhat) {
    const auto u = unsupported_set(logging);
    std::vector<double> v;
    v.reserve(d.size());
    for (const auto& r : d.records) {
        double t = target(r.ctx, r.action) / r.propensity * r.reward;
        for (int y : u.at(r.ctx)) t += target(r.ctx, y) * rhat(static_cast<Eigen::Index>(r.ctx), y);
        v.push_back(t);
    }
    return v;
}

// --- exact checks ---------------------------------------------------------------

Entry weight_sum_identity(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 100));
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const Instance f = fixtures::random_instance(rng);
        const double s = oracle::expected_weight_sum(f.problem, f.logging, f.target);
        const double d = oracle::exact_support_divergence(f.problem, f.logging, f.target);
        worst = std::max(worst, std::abs(s + d - 1.0));
    }
    return tolerance_entry("weight_sum_identity", worst, 1e-12);
}

Entry ips_bias_closed_form(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 101));
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const Instance f = fixtures::random_instance(rng);
        const auto rep = oracle::exact_ips_bias(f.problem, f.logging, f.target);
        worst = std::max(worst, std::abs(rep.closed_form_bias - rep.bias));
    }
    return tolerance_entry("ips_bias_closed_form", worst, 1e-12);
}

Entry augmented_bias_closed_form(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 102));
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const Instance f = fixtures::random_instance(rng);
        const RewardTable rhat = fixtures::random_rewards(rng, f.problem.n_contexts(), f.problem.n_actions, f.problem.bounds);
        const double enumerated = oracle::expected_augmented_ips(f.problem, f.logging, f.target, rhat) -
                                  oracle::exact_policy_value(f.problem, f.target);
        worst = std::max(worst, std::abs(enumerated - oracle::exact_augmented_bias(f.problem, f.logging, f.target, rhat)));
    }
    return tolerance_entry("augmented_bias_closed_form", worst, 1e-12);
}

Entry dr_identity(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 103));
    double worst_gap = 0.0;
    double worst_ips = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const Instance f = fixtures::random_instance(rng);
        const auto data = datagen::log_interactions(f.problem, f.logging, 20, rng.engine()());
        const RewardTable rhat = fixtures::random_rewards(rng, f.problem.n_contexts(), f.problem.n_actions, f.problem.bounds);
        const auto rep = estimators::dr(data, f.target, rhat, f.logging);
        worst_gap = std::max(worst_gap, rep.diagnostics.at("decomposition_gap"));
        const RewardTable zero = constant_rewards(f.problem.n_contexts(), f.problem.n_actions, 0.0);
        worst_ips = std::max(worst_ips, std::abs(estimators::dr(data, f.target, zero).value -
                                                 estimators::ips(data, f.target).value));
    }
    Entry e{"dr_identity", worst_gap <= 1e-10 && worst_ips == 0.0, worst_gap,
            "decomposition gap " + fmt(worst_gap) + ", |DR(0) - IPS| " + fmt(worst_ips)};
    return e;
}

/// Random instance with Gaussian features, for gradient and objective checks.
Instance feature_instance(Rng& rng) {
    Instance f = fixtures::random_instance(rng, 4, 4);
    const auto dim = 3;
    for (auto& c : f.problem.contexts) {
        c = Vector(dim);
        for (int i = 0; i < dim; ++i) c(i) = rng.normal();
    }
    return f;
}

SoftmaxPolicy random_policy(Rng& rng, std::size_t dim, int k) {
    SoftmaxPolicy p = SoftmaxPolicy::zeros(dim, k, 0.5 + rng.uniform());
    for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = rng.normal();
    return p;
}

Entry shift_identity(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 104));
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const Instance f = feature_instance(rng);
        const auto data = datagen::log_interactions(f.problem, f.logging, 30, rng.engine()());
        const auto policy = random_policy(rng, f.problem.context_dim(), f.problem.n_actions);
        const auto batch = learning::full_batch(data);
        learning::ObjectiveAux aux;
        aux.shift_k = 4.0 * rng.uniform() - 2.0;
        const auto naive = learning::objective_value_and_gradient(policy, batch, learning::Objective::naive_ips, aux);
        const auto shifted = learning::objective_value_and_gradient(policy, batch, learning::Objective::shifted, aux);
        worst = std::max(worst, std::abs(shifted.value - naive.value - aux.shift_k * naive.weight_sum));
    }
    return tolerance_entry("shift_identity", worst, 1e-12);
}

Entry augmentation_expectation() {
    const Instance f = fixtures::reference_instance();
    double worst = 0.0;
    for (const RewardTable& rhat : {RewardTable(f.problem.mean_reward), constant_rewards(2, 3, 0.0)}) {
        const double target = oracle::expected_augmented_ips(f.problem, f.logging, f.target, rhat);
        for (int replay : {1, 5})
            worst = std::max(worst, std::abs(oracle::exact_sampled_objective_expectation(f.problem, f.logging, f.target,
                                                                                         rhat, replay) -
                                             target));
    }
    return tolerance_entry("augmentation_expectation", worst, 1e-12);
}

Entry adversarial_gap() {
    const Instance f = fixtures::reference_instance();
    PolicyTable unsupported{Matrix(2, 3)};
    unsupported.probs << 0.0, 0.0, 1.0,
                         0.0, 0.5, 0.5;
    const std::vector<PolicyTable> policies{f.logging, f.target, unsupported};
    const auto res = oracle::adversarial_construction(f.problem, f.logging, policies);
    const bool ok = res.max_divergence == 1.0 && res.gap >= 1.0;
    return {"adversarial_gap", ok, res.gap,
            "gap " + fmt(res.gap) + ", bound " + fmt(res.lower_bound) + ", max divergence " + fmt(res.max_divergence)};
}

Entry gradient_check(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 105));
    double worst = 0.0;
    const learning::Objective objectives[] = {learning::Objective::naive_ips, learning::Objective::action_restricted,
                                              learning::Objective::augmented, learning::Objective::shifted};
    for (int t = 0; t < 50; ++t) {
        const Instance f = feature_instance(rng);
        const auto data = datagen::log_interactions(f.problem, f.logging, 25, rng.engine()());
        const RewardTable rhat = fixtures::random_rewards(rng, f.problem.n_contexts(), f.problem.n_actions, f.problem.bounds);
        const auto aug = learning::augment_dataset(data, f.logging, rhat, 2, rng.engine()());
        const auto policy = random_policy(rng, f.problem.context_dim(), f.problem.n_actions);
        const MaskMatrix mask = support_mask(f.logging);
        learning::ObjectiveAux aux;
        aux.shift_k = rng.uniform() - 0.5;
        aux.support = &mask;
        for (auto obj : objectives) {
            const auto batch = obj == learning::Objective::augmented ? learning::full_batch(aug) : learning::full_batch(data);
            const auto g = learning::objective_value_and_gradient(policy, batch, obj, aux).gradient;
            Matrix fd(g.rows(), g.cols());
            const double h = 1e-5;
            for (Eigen::Index i = 0; i < g.size(); ++i) {
                SoftmaxPolicy up = policy, down = policy;
                up.weights.data()[i] += h;
                down.weights.data()[i] -= h;
                fd.data()[i] = (learning::objective_value_and_gradient(up, batch, obj, aux).value -
                                learning::objective_value_and_gradient(down, batch, obj, aux).value) /
                               (2.0 * h);
            }
            const double scale = std::max({g.norm(), fd.norm(), 1e-8});
            worst = std::max(worst, (g - fd).norm() / scale);
        }
    }
    return {"gradient_check", worst < 1e-4, worst, "max relative error " + fmt(worst) + " (tol 1e-4)"};
}

Entry minsup_invariants(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 106));
    double worst_ratio = 0.0;
    double worst_mass = 0.0;
    bool support_ok = true;
    bool bound_ok = true;
    for (int t = 0; t < 1000; ++t) {
        const Instance f = fixtures::random_instance(rng, 4, 8);
        // Sharpen the logger so small propensities occur.
        Matrix p = f.logging.probs.array().pow(1.0 + 6.0 * rng.uniform());
        for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
        const auto ms = estimators::build_minsup(PolicyTable{p});
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            worst_mass = std::max(worst_mass, std::abs(ms.table.probs.row(i).sum() - 1.0));
            for (Eigen::Index a = 0; a < p.cols(); ++a) {
                const double q = ms.table.probs(i, a);
                if (q <= 0.0) continue;
                if (p(i, a) == 0.0) support_ok = false;
                else {
                    worst_ratio = std::max(worst_ratio, q / p(i, a));
                    if (q > 100.0 * p(i, a)) bound_ok = false;
                }
            }
        }
    }
    const bool ok = support_ok && bound_ok && worst_mass <= 1e-12;
    return {"minsup_invariants", ok, worst_ratio,
            "max weight " + fmt(worst_ratio) + ", max mass error " + fmt(worst_mass) +
                (support_ok ? "" : ", support escapes the logger")};
}

Entry kappa_bound_formula() {
    const auto r = selection::check_kappa(0.8, 0.5, 0.1, 5000, 0.1);
    const double err = std::abs(r.failure_prob_bound - 2.0 * std::exp(-1.0));
    return tolerance_entry("kappa_bound_formula", err, 1e-15);
}

// --- Monte Carlo checks -----------------------------------------------------------

Entry ips_fixture_mc(std::uint64_t seed) {
    const Instance f = fixtures::reference_instance();
    const auto d = datagen::log_interactions(f.problem, f.logging, 100000, derive_seed(seed, 200));
    return three_sigma_entry("ips_fixture_mc", moments(ips_terms(d, f.target)), 0.16);
}

Entry augmented_fixture_mc(std::uint64_t seed) {
    const Instance f = fixtures::reference_instance();
    const auto d = datagen::log_interactions(f.problem, f.logging, 100000, derive_seed(seed, 201));
    const auto m0 = moments(augmented_terms(d, f.target, f.logging, constant_rewards(2, 3, 0.0)));
    const auto m1 = moments(augmented_terms(d, f.target, f.logging, f.problem.mean_reward));
    const double z0 = std::abs(m0.mean - 0.425 + 0.265) / m0.se;
    const double z1 = std::abs(m1.mean - 0.425) / m1.se;
    return {"augmented_fixture_mc", z0 <= 3.0 && z1 <= 3.0, std::max(z0, z1),
            "conservative bias " + fmt(m0.mean - 0.425) + " (|z| " + fmt(z0) + "), exact model value " + fmt(m1.mean) +
                " (|z| " + fmt(z1) + ")"};
}

Entry weight_sum_convergence(std::uint64_t seed) {
    const Instance f = fixtures::reference_instance();
    const double d = oracle::exact_support_divergence(f.problem, f.logging, f.target);
    const int reps = 300;
    std::vector<double> sds;
    double worst_z = 0.0;
    std::ostringstream detail;
    for (std::size_t n : {std::size_t{100}, std::size_t{1000}, std::size_t{10000}}) {
        std::vector<double> s;
        for (int r = 0; r < reps; ++r) {
            const auto data = datagen::log_interactions(f.problem, f.logging, n, derive_seed(seed, 300 + n * 1000 + r));
            s.push_back(estimators::ips(data, f.target).weight_sum + d);
        }
        const auto m = moments(s);
        worst_z = std::max(worst_z, std::abs(m.mean - 1.0) / m.se);
        sds.push_back(m.sd);
        detail << "n=" << n << " mean " << fmt(m.mean) << " std " << fmt(m.sd) << "; ";
    }
    const bool decreasing = sds[0] > sds[1] && sds[1] > sds[2];
    return {"weight_sum_convergence", decreasing && worst_z <= 3.0, worst_z, detail.str() + "max |z| " + fmt(worst_z)};
}

Entry kappa_violation_frequency(std::uint64_t seed) {
    // One context, p_min = 0.1 on the supported set.
    SyntheticProblem p;
    p.contexts = {Vector::Ones(1)};
    p.context_weights = {1.0};
    p.n_actions = 3;
    p.mean_reward = Matrix::Constant(1, 3, 0.5);
    PolicyTable logging{Matrix(1, 3)};
    logging.probs << 0.1, 0.9, 0.0;
    PolicyTable target{Matrix(1, 3)};
    target.probs << 0.5, 0.2, 0.3;
    const double d = oracle::exact_support_divergence(p, logging, target);
    const double kappa = 0.29, eps = 0.1;
    const std::size_t n = 5000;
    int violations = 0;
    const int reps = 2000;
    double bound = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto data = datagen::log_interactions(p, logging, n, derive_seed(seed, 400 + r));
        const auto chk = selection::check_kappa(estimators::ips(data, target).weight_sum, kappa, eps, n, 0.1);
        bound = chk.failure_prob_bound;
        if (chk.satisfied && (d > kappa || d < 0.0)) ++violations;
    }
    const double freq = static_cast<double>(violations) / reps;
    return {"kappa_violation_frequency", freq <= bound, freq, "frequency " + fmt(freq) + " vs bound " + fmt(bound)};
}

Entry logging_fidelity(std::uint64_t seed) {
    const Instance f = fixtures::reference_instance();
    const std::size_t n = 100000;
    const auto d = datagen::log_interactions(f.problem, f.logging, n, derive_seed(seed, 500));
    std::vector<double> r;
    Matrix counts = Matrix::Zero(2, 3);
    Vector visits = Vector::Zero(2);
    bool exact_p0 = true;
    for (const auto& rec : d.records) {
        r.push_back(rec.reward);
        counts(static_cast<Eigen::Index>(rec.ctx), rec.action) += 1.0;
        visits(static_cast<Eigen::Index>(rec.ctx)) += 1.0;
        if (rec.propensity != f.logging(rec.ctx, rec.action)) exact_p0 = false;
    }
    double worst_z = 0.0;
    for (Eigen::Index c = 0; c < 2; ++c)
        for (Eigen::Index a = 0; a < 3; ++a) {
            const double p = f.logging.probs(c, a);
            const double freq = counts(c, a) / visits(c);
            if (p == 0.0 || p == 1.0) {
                if (freq != p) worst_z = std::numeric_limits<double>::infinity();
                continue;
            }
            worst_z = std::max(worst_z, std::abs(freq - p) / std::sqrt(p * (1 - p) / visits(c)));
        }
    const auto m = moments(r);
    const double zr = std::abs(m.mean - oracle::exact_policy_value(f.problem, f.logging)) / m.se;
    return {"logging_fidelity", exact_p0 && worst_z <= 3.0 && zr <= 3.0, std::max(worst_z, zr),
            "action |z| " + fmt(worst_z) + ", reward |z| " + fmt(zr) + (exact_p0 ? "" : ", propensity mismatch")};
}

Entry minsup_ips_mc(std::uint64_t seed) {
    const Instance f = fixtures::reference_instance();
    const auto ms = estimators::build_minsup(f.logging);
    const auto d = datagen::log_interactions(f.problem, f.logging, 100000, derive_seed(seed, 600));
    return three_sigma_entry("minsup_ips_mc", moments(ips_terms(d, ms.table)),
                             oracle::exact_policy_value(f.problem, ms.table));
}

Entry data_file_check(const Options& opt) {
    const auto& path = *opt.data_file;
    LoggedDataset data;
    if (opt.problem_file) {
        const auto problem = io::problem_from_json(io::read_json_file(*opt.problem_file));
        data = io::read_dataset_file(path, problem);
    } else {
        std::ifstream in(path);
        if (!in) throw ContractError("cannot open " + path.string());
        const double inf = std::numeric_limits<double>::infinity();
        data = io::read_dataset_jsonl(in, {}, std::numeric_limits<int>::max(), {-inf, inf});
    }
    return {"data_file", true, static_cast<double>(data.size()), std::to_string(data.size()) + " valid records"};
}

}  // namespace

std::vector<Entry> run(const Options& opt) {
    std::vector<std::pair<std::string, std::function<Entry()>>> checks = {
        {"weight_sum_identity", [&] { return weight_sum_identity(opt.seed); }},
        {"ips_bias_closed_form", [&] { return ips_bias_closed_form(opt.seed); }},
        {"augmented_bias_closed_form", [&] { return augmented_bias_closed_form(opt.seed); }},
        {"dr_identity", [&] { return dr_identity(opt.seed); }},
        {"shift_identity", [&] { return shift_identity(opt.seed); }},
        {"augmentation_expectation", [] { return augmentation_expectation(); }},
        {"adversarial_gap", [] { return adversarial_gap(); }},
        {"gradient_check", [&] { return gradient_check(opt.seed); }},
        {"minsup_invariants", [&] { return minsup_invariants(opt.seed); }},
        {"kappa_bound_formula", [] { return kappa_bound_formula(); }},
    };
    if (opt.level == Level::full) {
        checks.insert(checks.end(), {
            {"ips_fixture_mc", [&] { return ips_fixture_mc(opt.seed); }},
            {"augmented_fixture_mc", [&] { return augmented_fixture_mc(opt.seed); }},
            {"weight_sum_convergence", [&] { return weight_sum_convergence(opt.seed); }},
            {"kappa_violation_frequency", [&] { return kappa_violation_frequency(opt.seed); }},
            {"logging_fidelity", [&] { return logging_fidelity(opt.seed); }},
            {"minsup_ips_mc", [&] { return minsup_ips_mc(opt.seed); }},
        });
    }
    if (opt.data_file) checks.emplace_back("data_file", [&] { return data_file_check(opt); });

    std::vector<Entry> out;
    for (auto& [name, check] : checks) {
        try {
            out.push_back(check());
        } catch (const std::exception& e) {
            out.push_back({name, false, std::numeric_limits<double>::quiet_NaN(), e.what()});
        }
    }
    return out;
}

}  // namespace bandex::verify
