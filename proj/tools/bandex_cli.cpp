#include "bandex/datagen.hpp"
#include "bandex/estimators.hpp"
#include "bandex/experiment.hpp"
#include "bandex/io.hpp"
#include "bandex/learning.hpp"
#include "bandex/oracle.hpp"
#include "bandex/rng.hpp"
#include "bandex/selection.hpp"
#include "bandex/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace bandex;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
};

SyntheticProblem load_problem(const std::string& path) {
    if (!fs::exists(path)) throw StageError("gen", "missing problem file " + path + " (run `bandex gen` first)");
    return io::problem_from_json(io::read_json_file(path));
}

LoggedDataset load_data(const std::string& path, const SyntheticProblem& problem, const char* producer) {
    if (!fs::exists(path)) throw StageError(producer, "missing dataset file " + path);
    return io::read_dataset_file(path, problem);
}

PolicyTable load_logging(const std::string& path, const SyntheticProblem& problem) {
    if (!fs::exists(path)) throw StageError("gen", "missing logging policy file " + path);
    return tabulate(io::policy_from_json(io::read_json_file(path)), problem.contexts);
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    return io::read_json_file(path);
}

void write_text(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write " + path.string());
    body(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Off-policy bandit learning under support-deficient logging"};
    app.require_subcommand(1);
    Common c;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", c.config, "JSON configuration file");
        sub->add_option("--seed", c.seed, "Seed override");
        sub->add_option("--out", c.out, "Output directory");
    };

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a problem, a logging policy, and a logged dataset");
    add_common(gen);
    std::size_t gen_n = 1000;
    gen->add_option("--n", gen_n, "Number of logged records (overrides config n_records)");

    // log
    auto* log = app.add_subcommand("log", "Log interactions from a problem under a logging policy");
    add_common(log);
    std::string problem_path = "problem.json", policy_path = "logging_policy.json";
    std::size_t log_n = 1000;
    log->add_option("--problem", problem_path, "Problem JSON")->capture_default_str();
    log->add_option("--policy", policy_path, "Logging policy JSON")->capture_default_str();
    log->add_option("--n", log_n, "Number of records")->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "Train a policy on logged data");
    add_common(train);
    std::string data_path = "dataset.jsonl", logging_path = "logging_policy.json", extrapolation = "regression";
    train->add_option("--problem", problem_path, "Problem JSON (context table)")->capture_default_str();
    train->add_option("--data", data_path, "Training dataset JSONL")->capture_default_str();
    train->add_option("--logging", logging_path, "Logging policy JSON")->capture_default_str();
    train->add_option("--extrapolation", extrapolation, "Reward model for the augmented objective")
        ->check(CLI::IsMember({"regression", "conservative"}))
        ->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "Estimate a policy's value and compute its exact report");
    add_common(eval);
    std::string target_path = "policy.json";
    eval->add_option("--problem", problem_path, "Problem JSON")->capture_default_str();
    eval->add_option("--policy", target_path, "Target policy JSON")->capture_default_str();
    eval->add_option("--logging", logging_path, "Logging policy JSON")->capture_default_str();
    eval->add_option("--data", data_path, "Dataset JSONL")->capture_default_str();

    // sweep-k
    auto* sweep = app.add_subcommand("sweep-k", "Grid search over the reward shift k");
    add_common(sweep);
    std::string val_path = "val.jsonl";
    std::vector<std::string> selectors{"minsup", "dm", "conservative", "oracle"};
    int grid_points = 21;
    sweep->add_option("--problem", problem_path, "Problem JSON")->capture_default_str();
    sweep->add_option("--data", data_path, "Training dataset JSONL")->capture_default_str();
    sweep->add_option("--val", val_path, "Validation dataset JSONL")->capture_default_str();
    sweep->add_option("--logging", logging_path, "Logging policy JSON")->capture_default_str();
    sweep->add_option("--selectors", selectors, "Selectors to evaluate");
    sweep->add_option("--grid-points", grid_points, "Number of k values")->capture_default_str();

    // run
    auto* run = app.add_subcommand("run", "Run the full experiment protocol over seeds");
    add_common(run);

    // verify
    auto* ver = app.add_subcommand("verify", "Run the built-in property checks");
    add_common(ver);
    std::string level = "fast";
    std::string verify_data, verify_problem;
    ver->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}))->capture_default_str();
    ver->add_option("--data", verify_data, "Also validate this dataset file");
    ver->add_option("--problem", verify_problem, "Problem the dataset refers to");

    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path out = c.out;
        if (*gen) {
            json cfg = load_config(c.config);
            const std::size_t n = gen->count("--n") ? gen_n : cfg.value("n_records", gen_n);
            const double offset = cfg.value("reward_offset", 0.0);
            cfg.erase("n_records");
            cfg.erase("reward_offset");
            auto g = io::gen_config_from_json(cfg);
            if (c.seed) g.seed = *c.seed;
            auto problem = datagen::make_problem(g);
            if (offset != 0.0) problem = datagen::translate_rewards(problem, offset);
            const auto logger =
                datagen::make_logging_policy(problem, g.temperature, g.clip_threshold, derive_seed(g.seed, 3));
            const auto data = datagen::log_interactions(problem, logger, n, derive_seed(g.seed, 4));
            io::write_json_file(out / "problem.json", io::problem_to_json(problem));
            io::write_json_file(out / "logging_policy.json", io::policy_to_json(logger));
            io::write_dataset_file(out / "dataset.jsonl", data);
            std::cout << "unsupported_fraction " << datagen::unsupported_fraction(tabulate(logger, problem.contexts))
                      << "\nwrote " << (out / "problem.json").string() << ", " << (out / "logging_policy.json").string()
                      << ", " << (out / "dataset.jsonl").string() << '\n';
        } else if (*log) {
            const auto problem = load_problem(problem_path);
            const auto logging = load_logging(policy_path, problem);
            const auto data = datagen::log_interactions(problem, logging, log_n, c.seed.value_or(0));
            io::write_dataset_file(out / "dataset.jsonl", data);
            std::cout << "wrote " << data.size() << " records to " << (out / "dataset.jsonl").string() << '\n';
        } else if (*train) {
            auto cfg = io::train_config_from_json(load_config(c.config));
            if (c.seed) cfg.seed = *c.seed;
            const auto problem = load_problem(problem_path);
            const auto data = load_data(data_path, problem, "log");
            std::optional<PolicyTable> logging;
            std::optional<RewardTable> rhat;
            if (cfg.objective == learning::Objective::action_restricted ||
                cfg.objective == learning::Objective::augmented)
                logging = load_logging(logging_path, problem);
            if (cfg.objective == learning::Objective::augmented)
                rhat = extrapolation == "conservative"
                           ? estimators::conservative_model(problem.bounds, problem.n_contexts(), problem.n_actions)
                           : learning::train_reward_model(data, {}).tabulate(data.contexts);
            const auto res = learning::train_erm(data, cfg, logging ? &*logging : nullptr, rhat ? &*rhat : nullptr);
            io::write_json_file(out / "policy.json", io::policy_to_json(res.policy));
            write_text(out / "trace.csv", [&](std::ostream& os) { io::write_trace_csv(os, res.trace); });
            std::cout << "final objective " << res.trace.back().objective << ", weight_sum "
                      << res.trace.back().weight_sum << '\n';
        } else if (*eval) {
            const auto problem = load_problem(problem_path);
            const auto logging = load_logging(logging_path, problem);
            const auto target = tabulate(io::policy_from_json(io::read_json_file(target_path)), problem.contexts);
            const auto data = load_data(data_path, problem, "log");
            const auto rm = learning::train_reward_model(data, {}).tabulate(data.contexts);
            const auto cons = estimators::conservative_model(problem.bounds, problem.n_contexts(), problem.n_actions);
            json report = {
                {"exact", io::exact_report_to_json(oracle::exact_ips_bias(problem, logging, target))},
                {"ips", io::estimator_report_to_json(estimators::ips(data, target))},
                {"conservative", io::estimator_report_to_json(estimators::augmented_ips(data, target, logging, cons))},
                {"regression", io::estimator_report_to_json(estimators::augmented_ips(data, target, logging, rm))},
                {"dr", io::estimator_report_to_json(estimators::dr(data, target, rm, logging))},
                {"dm", estimators::dm(data, target, rm)},
                {"minsup", estimators::minsup_estimate(data, target, estimators::build_minsup(logging))},
            };
            io::write_json_file(out / "eval.json", report);
            std::cout << report.dump(2) << '\n';
        } else if (*sweep) {
            auto cfg = io::train_config_from_json(load_config(c.config));
            if (c.seed) cfg.seed = *c.seed;
            const auto problem = load_problem(problem_path);
            const auto logging = load_logging(logging_path, problem);
            const auto data = load_data(data_path, problem, "log");
            const auto val = load_data(val_path, problem, "log");
            const auto rm = learning::train_reward_model(data, {}).tabulate(data.contexts);
            selection::SweepInputs in;
            in.train = &data;
            in.val = &val;
            in.grid = selection::default_grid(problem.bounds, grid_points);
            in.train_config = cfg;
            for (const auto& s : selectors) in.selectors.push_back(selection::selector_from_string(s));
            in.logging = &logging;
            in.reward_model = &rm;
            in.problem = &problem;
            const auto res = selection::sweep_k(in);
            io::write_json_file(out / "sweep.json", io::sweep_to_json(res));
            write_text(out / "sweep.csv", [&](std::ostream& os) { io::write_sweep_csv(os, res); });
            for (const auto& [s, k] : res.chosen_k) std::cout << selection::to_string(s) << " k=" << k << '\n';
        } else if (*run) {
            auto cfg = experiment::config_from_json(load_config(c.config));
            if (run->count("--out")) cfg.output_dir = c.out;
            if (c.seed) cfg.seeds = {*c.seed};
            const auto report = experiment::run(cfg);
            std::cout << "wrote " << report.results.size() << " results to " << cfg.output_dir.string() << '\n';
            for (const auto& f : report.failures) std::cerr << "stage failure: " << f << '\n';
            return report.failures.empty() ? 0 : 1;
        } else if (*ver) {
            verify::Options opt;
            opt.level = verify::level_from_string(level);
            opt.seed = c.seed.value_or(0);
            if (!verify_data.empty()) opt.data_file = verify_data;
            if (!verify_problem.empty()) opt.problem_file = verify_problem;
            const auto entries = verify::run(opt);
            json j = json::array();
            for (const auto& e : entries) {
                std::cout << (e.passed ? "PASS " : "FAIL ") << std::left << std::setw(28) << e.name << ' ' << e.detail
                          << '\n';
                j.push_back({{"name", e.name}, {"passed", e.passed}, {"statistic", e.statistic}, {"detail", e.detail}});
            }
            if (ver->count("--out")) io::write_json_file(out / "verify.json", j);
            return verify::all_passed(entries) ? 0 : 1;
        }
    } catch (const StageError& e) {
        std::cerr << "stage " << e.stage() << " failed: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
