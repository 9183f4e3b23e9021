#include "bandex/datagen.hpp"
#include "bandex/estimators.hpp"
#include "bandex/experiment.hpp"
#include "bandex/io.hpp"
#include "bandex/oracle.hpp"
#include "bandex/rng.hpp"
#include "bandex/selection.hpp"
#include "bandex/verify.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace bandex;

namespace {

using IndexArray = Eigen::Matrix<long long, Eigen::Dynamic, 1>;

SyntheticProblem make_problem(const std::vector<double>& weights, const Matrix& delta, double r_min, double r_max) {
    SyntheticProblem p;
    const auto n = static_cast<Eigen::Index>(weights.size());
    for (Eigen::Index c = 0; c < n; ++c) p.contexts.push_back(Vector::Unit(n, c));
    p.context_weights = weights;
    p.n_actions = static_cast<int>(delta.cols());
    p.mean_reward = delta;
    p.bounds = {r_min, r_max};
    p.validate();
    return p;
}

LoggedDataset make_dataset(const IndexArray& ctx, const IndexArray& action, const Vector& reward, const Vector& propensity,
                           std::size_t n_contexts, int n_actions, double r_min, double r_max) {
    const auto n = ctx.size();
    if (action.size() != n || reward.size() != n || propensity.size() != n)
        throw ContractError("dataset arrays must have equal length");
    LoggedDataset d;
    for (std::size_t c = 0; c < n_contexts; ++c)
        d.contexts.push_back(Vector::Unit(static_cast<Eigen::Index>(n_contexts), static_cast<Eigen::Index>(c)));
    d.n_actions = n_actions;
    d.bounds = {r_min, r_max};
    for (Eigen::Index i = 0; i < n; ++i) {
        if (ctx[i] < 0) throw CorruptDataError("record " + std::to_string(i) + " has a negative context index");
        d.records.push_back({static_cast<std::size_t>(ctx[i]), static_cast<int>(action[i]), reward[i], propensity[i]});
    }
    d.validate();
    return d;
}

py::dict report_dict(const estimators::EstimatorReport& r) {
    py::dict out;
    out["value"] = r.value;
    out["weight_sum"] = r.weight_sum;
    out["n"] = r.n;
    out["diagnostics"] = r.diagnostics;
    return out;
}

#define DATASET_ARGS                                                                                              \
    const IndexArray &ctx, const IndexArray &action, const Vector &reward, const Vector &propensity,          \
        std::size_t n_contexts, int n_actions, double r_min, double r_max
#define DATASET_PASS ctx, action, reward, propensity, n_contexts, n_actions, r_min, r_max
#define DATASET_PY                                                                                                \
    py::arg("ctx"), py::arg("action"), py::arg("reward"), py::arg("propensity"), py::arg("n_contexts"),          \
        py::arg("n_actions"), py::arg("r_min"), py::arg("r_max")

}  // namespace

PYBIND11_MODULE(_bandex, m) {
    m.doc() = "Native core of the bandex package";

    auto base = py::register_exception<Error>(m, "BandexError", PyExc_RuntimeError);
    py::register_exception<ContractError>(m, "ContractError", base.ptr());
    py::register_exception<CorruptDataError>(m, "CorruptDataError", base.ptr());
    py::register_exception<InvalidPolicyError>(m, "InvalidPolicyError", base.ptr());
    py::register_exception<DegenerateRestrictionError>(m, "DegenerateRestrictionError", base.ptr());
    py::register_exception<StageError>(m, "StageError", base.ptr());

    m.def(
        "exact_report",
        [](const std::vector<double>& w, const Matrix& delta, const Matrix& logging, const Matrix& target, double r_min,
           double r_max) {
            const auto rep = oracle::exact_ips_bias(make_problem(w, delta, r_min, r_max), PolicyTable{logging},
                                                    PolicyTable{target});
            return io::exact_report_to_json(rep).dump();
        },
        py::arg("context_weights"), py::arg("delta"), py::arg("logging"), py::arg("target"), py::arg("r_min") = 0.0,
        py::arg("r_max") = 1.0);

    m.def(
        "augmented_bias",
        [](const std::vector<double>& w, const Matrix& delta, const Matrix& logging, const Matrix& target,
           const Matrix& reward_model, double r_min, double r_max) {
            return oracle::exact_augmented_bias(make_problem(w, delta, r_min, r_max), PolicyTable{logging},
                                                PolicyTable{target}, reward_model);
        },
        py::arg("context_weights"), py::arg("delta"), py::arg("logging"), py::arg("target"), py::arg("reward_model"),
        py::arg("r_min") = 0.0, py::arg("r_max") = 1.0);

    m.def(
        "generate",
        [](const std::string& config_json, std::size_t n, double reward_offset) {
            const auto cfg = io::gen_config_from_json(nlohmann::json::parse(config_json));
            auto problem = datagen::make_problem(cfg);
            if (reward_offset != 0.0) problem = datagen::translate_rewards(problem, reward_offset);
            const auto logger =
                datagen::make_logging_policy(problem, cfg.temperature, cfg.clip_threshold, derive_seed(cfg.seed, 3));
            const auto table = tabulate(logger, problem.contexts);
            const auto data = datagen::log_interactions(problem, table, n, derive_seed(cfg.seed, 4));
            IndexArray ctx(static_cast<Eigen::Index>(n)), action(static_cast<Eigen::Index>(n));
            Vector reward(static_cast<Eigen::Index>(n)), prop(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) {
                const auto j = static_cast<Eigen::Index>(i);
                ctx[j] = static_cast<long long>(data.records[i].ctx);
                action[j] = data.records[i].action;
                reward[j] = data.records[i].reward;
                prop[j] = data.records[i].propensity;
            }
            py::dict out;
            out["context_weights"] = problem.context_weights;
            out["delta"] = Matrix(problem.mean_reward);
            out["r_min"] = problem.bounds.min;
            out["r_max"] = problem.bounds.max;
            out["logging"] = Matrix(table.probs);
            out["ctx"] = ctx;
            out["action"] = action;
            out["reward"] = reward;
            out["propensity"] = prop;
            return out;
        },
        py::arg("config_json"), py::arg("n"), py::arg("reward_offset") = 0.0);

    m.def(
        "ips", [](DATASET_ARGS, const Matrix& target) {
            return report_dict(estimators::ips(make_dataset(DATASET_PASS), PolicyTable{target}));
        },
        DATASET_PY, py::arg("target"));

    m.def(
        "augmented_ips",
        [](DATASET_ARGS, const Matrix& target, const Matrix& logging, const Matrix& reward_model, std::uint64_t seed) {
            estimators::AugmentOptions opt;
            opt.seed = seed;
            return report_dict(estimators::augmented_ips(make_dataset(DATASET_PASS), PolicyTable{target},
                                                         PolicyTable{logging}, reward_model, opt));
        },
        DATASET_PY, py::arg("target"), py::arg("logging"), py::arg("reward_model"), py::arg("seed") = 0);

    m.def(
        "dr",
        [](DATASET_ARGS, const Matrix& target, const Matrix& reward_model, const Matrix& logging) {
            return report_dict(
                estimators::dr(make_dataset(DATASET_PASS), PolicyTable{target}, reward_model, PolicyTable{logging}));
        },
        DATASET_PY, py::arg("target"), py::arg("reward_model"), py::arg("logging"));

    m.def(
        "dm", [](DATASET_ARGS, const Matrix& target, const Matrix& reward_model) {
            return estimators::dm(make_dataset(DATASET_PASS), PolicyTable{target}, reward_model);
        },
        DATASET_PY, py::arg("target"), py::arg("reward_model"));

    m.def(
        "build_minsup", [](const Matrix& logging, double bound) {
            return Matrix(estimators::build_minsup(PolicyTable{logging}, bound).table.probs);
        },
        py::arg("logging"), py::arg("weight_bound") = 100.0);

    m.def(
        "minsup_estimate",
        [](DATASET_ARGS, const Matrix& target, const Matrix& logging, double bound, bool holdout) {
            const auto ms = estimators::build_minsup(PolicyTable{logging}, bound);
            return estimators::minsup_estimate(make_dataset(DATASET_PASS), PolicyTable{target}, ms,
                                               holdout ? estimators::MinSupData::holdout : estimators::MinSupData::same);
        },
        DATASET_PY, py::arg("target"), py::arg("logging"), py::arg("weight_bound") = 100.0, py::arg("holdout") = false);

    m.def(
        "check_kappa",
        [](double weight_sum, double kappa, double epsilon, std::size_t n, double p_min) {
            const auto r = selection::check_kappa(weight_sum, kappa, epsilon, n, p_min);
            return py::make_tuple(r.satisfied, r.failure_prob_bound);
        },
        py::arg("weight_sum"), py::arg("kappa"), py::arg("epsilon"), py::arg("n"), py::arg("p_min"));

    m.def(
        "run_experiment",
        [](const std::string& config_json) {
            const auto cfg = experiment::config_from_json(nlohmann::json::parse(config_json));
            py::gil_scoped_release release;
            return experiment::run(cfg).aggregate.dump();
        },
        py::arg("config_json"));

    m.def(
        "verify",
        [](const std::string& level, std::uint64_t seed) {
            verify::Options opt;
            opt.level = verify::level_from_string(level);
            opt.seed = seed;
            std::vector<std::tuple<std::string, bool, double, std::string>> out;
            for (const auto& e : verify::run(opt)) out.emplace_back(e.name, e.passed, e.statistic, e.detail);
            return out;
        },
        py::arg("level") = "fast", py::arg("seed") = 0);
}
