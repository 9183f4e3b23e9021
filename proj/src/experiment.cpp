#include "bandex/experiment.hpp"

#include "bandex/io.hpp"
#include "bandex/oracle.hpp"
#include "bandex/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bandex::experiment {

using nlohmann::json;

std::string to_string(Method method) {
    switch (method) {
        case Method::naive_ips: return "naive_ips";
        case Method::action_restriction: return "action_restriction";
        case Method::conservative: return "conservative";
        case Method::regression: return "regression";
        case Method::policy_restriction: return "policy_restriction";
        case Method::direct: return "direct";
    }
    return "unknown";
}

Method method_from_string(const std::string& name) {
    for (Method m : {Method::naive_ips, Method::action_restriction, Method::conservative, Method::regression,
                     Method::policy_restriction, Method::direct})
        if (to_string(m) == name) return m;
    throw ContractError("unknown method '" + name + "'");
}

void ExperimentConfig::validate() const {
    gen.validate();
    train.validate();
    if (seeds.empty()) throw ContractError("seeds must be nonempty");
    if (methods.empty()) throw ContractError("methods must be nonempty");
    if (n_train == 0 || n_val == 0) throw ContractError("n_train and n_val must be positive");
    if (grid_points < 1) throw ContractError("grid_points must be positive");
    for (double t : temperatures)
        if (!(t > 0.0)) throw ContractError("temperatures must be positive");
    for (Method m : methods)
        if (m == Method::policy_restriction &&
            std::find(selectors.begin(), selectors.end(), selection::Selector::minsup) == selectors.end())
            throw ContractError("policy_restriction needs the minsup selector");
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("gen")) c.gen = io::gen_config_from_json(j["gen"]);
        if (j.contains("train")) c.train = io::train_config_from_json(j["train"]);
        if (j.contains("regression")) {
            const auto& r = j["regression"];
            c.regression.learn_rate = r.value("learn_rate", c.regression.learn_rate);
            c.regression.epochs = r.value("epochs", c.regression.epochs);
            c.regression.l2 = r.value("l2", c.regression.l2);
            c.regression.feature_subset = r.value("feature_subset", c.regression.feature_subset);
        }
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j["methods"]) c.methods.push_back(method_from_string(m.get<std::string>()));
        }
        if (j.contains("selectors")) {
            c.selectors.clear();
            for (const auto& s : j["selectors"])
                c.selectors.push_back(selection::selector_from_string(s.get<std::string>()));
        }
        c.seeds = j.value("seeds", c.seeds);
        c.temperatures = j.value("temperatures", c.temperatures);
        c.n_train = j.value("n_train", c.n_train);
        c.n_val = j.value("n_val", c.n_val);
        c.reward_offset = j.value("reward_offset", c.reward_offset);
        c.grid_points = j.value("grid_points", c.grid_points);
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    } catch (const json::exception& e) {
        throw ContractError(std::string("malformed experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json methods = json::array();
    for (Method m : c.methods) methods.push_back(to_string(m));
    json selectors = json::array();
    for (auto s : c.selectors) selectors.push_back(selection::to_string(s));
    return {
        {"gen", io::gen_config_to_json(c.gen)},
        {"train", io::train_config_to_json(c.train)},
        {"regression",
         {{"learn_rate", c.regression.learn_rate},
          {"epochs", c.regression.epochs},
          {"l2", c.regression.l2},
          {"feature_subset", c.regression.feature_subset}}},
        {"methods", methods},
        {"selectors", selectors},
        {"seeds", c.seeds},
        {"temperatures", c.temperatures},
        {"n_train", c.n_train},
        {"n_val", c.n_val},
        {"reward_offset", c.reward_offset},
        {"grid_points", c.grid_points},
        {"output_dir", c.output_dir.string()},
    };
}

namespace {

template <class F>
auto stage(const char* name, std::uint64_t seed, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, "seed " + std::to_string(seed) + ": " + e.what());
    }
}

PolicyTable greedy_table(const RewardTable& rewards) {
    PolicyTable t{Matrix::Zero(rewards.rows(), rewards.cols())};
    for (Eigen::Index i = 0; i < rewards.rows(); ++i) {
        Eigen::Index best = 0;
        rewards.row(i).maxCoeff(&best);
        t.probs(i, best) = 1.0;
    }
    return t;
}

std::string tau_label(double t) {
    std::ostringstream os;
    os << t;
    return os.str();
}

}  // namespace

SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed, double temperature) {
    SeedResult out;
    out.seed = seed;
    out.temperature = temperature;

    auto gen = config.gen;
    gen.seed = seed;
    gen.temperature = temperature;
    const SyntheticProblem problem = stage("gen", seed, [&] {
        auto p = datagen::make_problem(gen);
        return config.reward_offset != 0.0 ? datagen::translate_rewards(p, config.reward_offset) : p;
    });
    const PolicyTable logging = stage("gen", seed, [&] {
        return tabulate(datagen::make_logging_policy(problem, temperature, gen.clip_threshold, derive_seed(seed, 3)),
                        problem.contexts);
    });
    out.unsupported_fraction = datagen::unsupported_fraction(logging);
    out.logging_value = oracle::exact_policy_value(problem, logging);
    out.optimal_value = oracle::exact_policy_value(problem, greedy_table(problem.mean_reward));

    const LoggedDataset train = stage("log", seed, [&] {
        return datagen::log_interactions(problem, logging, config.n_train, derive_seed(seed, 4));
    });
    const LoggedDataset val = stage("log", seed, [&] {
        return datagen::log_interactions(problem, logging, config.n_val, derive_seed(seed, 5));
    });

    const RewardTable regression = stage("train", seed, [&] {
        return learning::train_reward_model(train, config.regression).tabulate(problem.contexts);
    });
    const RewardTable conservative =
        estimators::conservative_model(problem.bounds, problem.n_contexts(), problem.n_actions);

    auto train_cfg = config.train;
    train_cfg.seed = derive_seed(seed, 6);

    auto record = [&](Method m, const PolicyTable& table, std::optional<double> k = std::nullopt) {
        MethodResult r;
        r.exact_value = oracle::exact_policy_value(problem, table);
        r.support_divergence = oracle::exact_support_divergence(problem, logging, table);
        r.val_weight_sum = estimators::ips(val, table).weight_sum;
        r.chosen_k = k;
        out.methods[m] = r;
    };

    for (Method m : config.methods) {
        if (m == Method::policy_restriction) continue;
        const PolicyTable table = stage("train", seed, [&]() -> PolicyTable {
            auto cfg = train_cfg;
            switch (m) {
                case Method::naive_ips:
                    cfg.objective = learning::Objective::naive_ips;
                    return tabulate(learning::train_erm(train, cfg).policy, problem.contexts);
                case Method::action_restriction:
                    cfg.objective = learning::Objective::action_restricted;
                    return tabulate(learning::train_erm(train, cfg, &logging).policy, problem.contexts);
                case Method::conservative:
                    cfg.objective = learning::Objective::augmented;
                    return tabulate(learning::train_erm(train, cfg, &logging, &conservative).policy,
                                    problem.contexts);
                case Method::regression:
                    cfg.objective = learning::Objective::augmented;
                    return tabulate(learning::train_erm(train, cfg, &logging, &regression).policy, problem.contexts);
                case Method::direct: return greedy_table(regression);
                case Method::policy_restriction: break;
            }
            throw ContractError("unreachable method");
        });
        stage("eval", seed, [&] {
            record(m, table);
            return 0;
        });
    }

    if (!config.selectors.empty()) {
        out.sweep = stage("sweep", seed, [&] {
            selection::SweepInputs in;
            in.train = &train;
            in.val = &val;
            in.grid = selection::default_grid(problem.bounds, config.grid_points);
            in.train_config = train_cfg;
            in.selectors = config.selectors;
            in.logging = &logging;
            in.reward_model = &regression;
            in.problem = &problem;
            return selection::sweep_k(in);
        });
        for (const auto& [s, idx] : out.sweep.chosen_index) out.selected_value[s] = *out.sweep.entries[idx].exact_value;
        const bool wanted = std::find(config.methods.begin(), config.methods.end(), Method::policy_restriction) !=
                            config.methods.end();
        if (wanted) {
            const auto it = out.sweep.chosen_index.find(selection::Selector::minsup);
            if (it == out.sweep.chosen_index.end())
                throw StageError("sweep", "seed " + std::to_string(seed) + ": every grid point failed");
            const auto& entry = out.sweep.entries[it->second];
            stage("eval", seed, [&] {
                record(Method::policy_restriction, tabulate(entry.policy, problem.contexts), entry.k);
                return 0;
            });
        }
    }
    return out;
}

json seed_result_to_json(const SeedResult& r) {
    json methods = json::object();
    for (const auto& [m, v] : r.methods) {
        json e = {{"exact_value", v.exact_value},
                  {"support_divergence", v.support_divergence},
                  {"val_weight_sum", v.val_weight_sum}};
        e["chosen_k"] = v.chosen_k ? json(*v.chosen_k) : json(nullptr);
        methods[to_string(m)] = std::move(e);
    }
    json selected = json::object();
    for (const auto& [s, v] : r.selected_value) selected[selection::to_string(s)] = v;
    json sweep = io::sweep_to_json(r.sweep);
    return {
        {"seed", r.seed},
        {"temperature", r.temperature},
        {"unsupported_fraction", r.unsupported_fraction},
        {"logging_value", r.logging_value},
        {"optimal_value", r.optimal_value},
        {"methods", std::move(methods)},
        {"selected_value", std::move(selected)},
        {"sweep", std::move(sweep)},
    };
}

RunReport run(const ExperimentConfig& config) {
    config.validate();
    const std::vector<double> temps = config.temperatures.empty() ? std::vector<double>{config.gen.temperature}
                                                                   : config.temperatures;
    struct Job {
        std::uint64_t seed;
        double temperature;
    };
    std::vector<Job> jobs;
    for (double t : temps)
        for (auto s : config.seeds) jobs.push_back({s, t});

    std::vector<std::optional<SeedResult>> slots(jobs.size());
    std::vector<std::string> errors(jobs.size());
    // Each job fans its sweep out to the pool, so jobs themselves run in order.
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        try {
            slots[i] = run_seed(config, jobs[i].seed, jobs[i].temperature);
        } catch (const StageError& e) {
            errors[i] = e.what();
        }
    }

    RunReport report;
    const auto& dir = config.output_dir;
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!errors[i].empty()) {
            report.failures.push_back(errors[i]);
            continue;
        }
        const auto name = "seed_" + std::to_string(jobs[i].seed) + "_tau_" + tau_label(jobs[i].temperature) + ".json";
        io::write_json_file(dir / name, seed_result_to_json(*slots[i]));
        report.results.push_back(std::move(*slots[i]));
    }

    // Mean and sample std per (temperature, method).
    json levels = json::array();
    std::ofstream csv(dir / "plot.csv");
    csv << std::setprecision(17);
    csv << "temperature,unsupported_fraction,method,mean_exact_value,std_exact_value,n_seeds\n";
    for (double t : temps) {
        std::vector<const SeedResult*> rs;
        for (const auto& r : report.results)
            if (r.temperature == t) rs.push_back(&r);
        if (rs.empty()) continue;
        double frac = 0.0;
        for (auto* r : rs) frac += r->unsupported_fraction;
        frac /= static_cast<double>(rs.size());

        auto summarize = [](const std::vector<double>& v) {
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
            return json{{"mean", mean}, {"std", sd}, {"n", v.size()}, {"values", v}};
        };

        json methods = json::object();
        for (Method m : config.methods) {
            std::vector<double> vals;
            for (auto* r : rs)
                if (auto it = r->methods.find(m); it != r->methods.end()) vals.push_back(it->second.exact_value);
            if (vals.empty()) continue;
            json s = summarize(vals);
            csv << t << ',' << frac << ',' << to_string(m) << ',' << s["mean"].get<double>() << ','
                << s["std"].get<double>() << ',' << vals.size() << '\n';
            methods[to_string(m)] = std::move(s);
        }
        json selected = json::object();
        for (auto sel : config.selectors) {
            std::vector<double> vals;
            for (auto* r : rs)
                if (auto it = r->selected_value.find(sel); it != r->selected_value.end()) vals.push_back(it->second);
            if (!vals.empty()) selected[selection::to_string(sel)] = summarize(vals);
        }
        levels.push_back({{"temperature", t},
                          {"unsupported_fraction", frac},
                          {"methods", std::move(methods)},
                          {"selected_value", std::move(selected)}});
    }
    report.aggregate = {{"levels", std::move(levels)}, {"failures", report.failures}};
    io::write_json_file(dir / "aggregate.json", report.aggregate);
    return report;
}

}  // namespace bandex::experiment
