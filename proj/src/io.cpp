#include "bandex/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace bandex::io {

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ContractError(std::string(what) + " must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ContractError(std::string(what) + " rows must have equal length");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const json& j) {
    if (!j.is_array()) throw ContractError("expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

const char* scheme_name(datagen::Scheme s) {
    return s == datagen::Scheme::multiclass ? "multiclass" : "feature_split";
}

datagen::Scheme scheme_from_string(const std::string& s) {
    if (s == "multiclass") return datagen::Scheme::multiclass;
    if (s == "feature_split") return datagen::Scheme::feature_split;
    throw ContractError("unknown scheme '" + s + "'");
}

std::string csv_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

json policy_to_json(const SoftmaxPolicy& policy) {
    json j;
    j["weights"] = matrix_to_json(policy.weights);
    j["temperature"] = policy.temperature;
    if (policy.support_mask) {
        json rows = json::array();
        const auto& m = *policy.support_mask;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
            rows.push_back(std::move(row));
        }
        j["mask"] = std::move(rows);
    } else {
        j["mask"] = nullptr;
    }
    return j;
}

SoftmaxPolicy policy_from_json(const json& j) {
    try {
        SoftmaxPolicy p;
        p.weights = matrix_from_json(j.at("weights"), "weights");
        p.temperature = j.value("temperature", 1.0);
        if (j.contains("mask") && !j["mask"].is_null()) {
            const auto& rows = j["mask"];
            const auto n = static_cast<Eigen::Index>(rows.size());
            MaskMatrix m(n, p.weights.cols());
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& row = rows[static_cast<std::size_t>(i)];
                if (static_cast<Eigen::Index>(row.size()) != p.weights.cols())
                    throw ContractError("mask width must equal the number of actions");
                for (Eigen::Index c = 0; c < m.cols(); ++c) {
                    const auto& v = row[static_cast<std::size_t>(c)];
                    m(i, c) = v.is_boolean() ? v.get<bool>() : v.get<double>() != 0.0;
                }
            }
            p.support_mask = std::move(m);
        }
        return p;
    } catch (const json::exception& e) {
        throw ContractError(std::string("malformed policy: ") + e.what());
    }
}

json table_to_json(const PolicyTable& table) { return {{"probs", matrix_to_json(table.probs)}}; }

PolicyTable table_from_json(const json& j) {
    try {
        PolicyTable t{matrix_from_json(j.at("probs"), "probs")};
        t.validate(1e-9);
        return t;
    } catch (const json::exception& e) {
        throw ContractError(std::string("malformed policy table: ") + e.what());
    }
}

json problem_to_json(const SyntheticProblem& problem) {
    json ctx = json::array();
    for (const auto& c : problem.contexts) ctx.push_back(vector_to_json(c));
    return {
        {"contexts", std::move(ctx)},
        {"context_weights", problem.context_weights},
        {"n_actions", problem.n_actions},
        {"mean_reward", matrix_to_json(problem.mean_reward)},
        {"reward_bounds", {problem.bounds.min, problem.bounds.max}},
        {"reward_noise", problem.noise == RewardNoise::bernoulli ? "bernoulli" : "deterministic"},
    };
}

SyntheticProblem problem_from_json(const json& j) {
    try {
        SyntheticProblem p;
        for (const auto& c : j.at("contexts")) p.contexts.push_back(vector_from_json(c));
        p.context_weights = j.at("context_weights").get<std::vector<double>>();
        p.n_actions = j.at("n_actions").get<int>();
        p.mean_reward = matrix_from_json(j.at("mean_reward"), "mean_reward");
        const auto b = j.at("reward_bounds").get<std::vector<double>>();
        if (b.size() != 2) throw ContractError("reward_bounds must have two entries");
        p.bounds = {b[0], b[1]};
        const auto noise = j.value("reward_noise", std::string("deterministic"));
        if (noise == "bernoulli") p.noise = RewardNoise::bernoulli;
        else if (noise == "deterministic") p.noise = RewardNoise::deterministic;
        else throw ContractError("unknown reward_noise '" + noise + "'");
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw ContractError(std::string("malformed problem: ") + e.what());
    }
}

json gen_config_to_json(const datagen::GenConfig& c) {
    json j = {
        {"scheme", scheme_name(c.scheme)},
        {"n_contexts", c.n_contexts},
        {"context_dim", c.context_dim},
        {"n_actions", c.n_actions},
        {"seed", c.seed},
        {"temperature", c.temperature},
        {"clip_threshold", c.clip_threshold},
    };
    j["context_weights"] = c.context_weights ? json(*c.context_weights) : json(nullptr);
    return j;
}

datagen::GenConfig gen_config_from_json(const json& j) {
    try {
        datagen::GenConfig c;
        if (j.contains("scheme")) c.scheme = scheme_from_string(j["scheme"].get<std::string>());
        c.n_contexts = j.value("n_contexts", c.n_contexts);
        c.context_dim = j.value("context_dim", c.context_dim);
        c.n_actions = j.value("n_actions", c.n_actions);
        c.seed = j.value("seed", c.seed);
        c.temperature = j.value("temperature", c.temperature);
        c.clip_threshold = j.value("clip_threshold", c.clip_threshold);
        if (j.contains("context_weights") && !j["context_weights"].is_null())
            c.context_weights = j["context_weights"].get<std::vector<double>>();
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ContractError(std::string("malformed generator config: ") + e.what());
    }
}

json train_config_to_json(const learning::TrainConfig& c) {
    return {
        {"objective", learning::to_string(c.objective)},
        {"shift_k", c.shift_k},
        {"replay_count", c.replay_count},
        {"learn_rate", c.learn_rate},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"l2", c.l2},
        {"seed", c.seed},
    };
}

learning::TrainConfig train_config_from_json(const json& j) {
    try {
        learning::TrainConfig c;
        if (j.contains("objective")) c.objective = learning::objective_from_string(j["objective"].get<std::string>());
        c.shift_k = j.value("shift_k", c.shift_k);
        c.replay_count = j.value("replay_count", c.replay_count);
        c.learn_rate = j.value("learn_rate", c.learn_rate);
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.l2 = j.value("l2", c.l2);
        c.seed = j.value("seed", c.seed);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ContractError(std::string("malformed training config: ") + e.what());
    }
}

json reward_model_to_json(const learning::RewardModel& m) {
    return {{"weights", matrix_to_json(m.weights)}, {"features", m.features}, {"loss_trace", m.loss_trace}};
}

learning::RewardModel reward_model_from_json(const json& j) {
    try {
        learning::RewardModel m;
        m.weights = matrix_from_json(j.at("weights"), "weights");
        m.features = j.value("features", std::vector<int>{});
        m.loss_trace = j.value("loss_trace", std::vector<double>{});
        return m;
    } catch (const json::exception& e) {
        throw ContractError(std::string("malformed reward model: ") + e.what());
    }
}

json exact_report_to_json(const oracle::ExactReport& r) {
    return {
        {"true_value", r.true_value},
        {"estimator_expectation", r.estimator_expectation},
        {"bias", r.bias},
        {"closed_form_bias", r.closed_form_bias},
        {"support_divergence", r.support_divergence},
        {"expected_weight_sum", r.expected_weight_sum},
    };
}

json estimator_report_to_json(const estimators::EstimatorReport& r) {
    return {{"value", r.value}, {"weight_sum", r.weight_sum}, {"n", r.n}, {"diagnostics", r.diagnostics}};
}

json sweep_to_json(const selection::SweepResult& sweep) {
    json entries = json::array();
    for (const auto& e : sweep.entries) {
        json est = json::object();
        for (const auto& [s, v] : e.estimates) est[selection::to_string(s)] = v;
        json row = {
            {"k", e.k},
            {"failed", e.failed},
            {"estimates", std::move(est)},
            {"val_weight_sum", e.val_weight_sum},
            {"unsupported_mass", e.unsupported_mass},
        };
        row["exact_value"] = e.exact_value ? json(*e.exact_value) : json(nullptr);
        if (e.failed) row["error"] = e.error;
        entries.push_back(std::move(row));
    }
    json chosen = json::object();
    for (const auto& [s, k] : sweep.chosen_k) chosen[selection::to_string(s)] = k;
    return {{"entries", std::move(entries)}, {"chosen_k", std::move(chosen)}};
}

void write_dataset_jsonl(std::ostream& out, const LoggedDataset& data, bool inline_features) {
    for (const auto& r : data.records) {
        json j;
        if (inline_features) j["x"] = vector_to_json(data.contexts.at(r.ctx));
        else j["x"] = {{"ctx", r.ctx}};
        j["y"] = r.action;
        j["r"] = r.reward;
        j["p0"] = r.propensity;
        out << j.dump() << '\n';
    }
}

LoggedDataset read_dataset_jsonl(std::istream& in, const ContextTable& contexts, int n_actions,
                                 const RewardBounds& bounds) {
    LoggedDataset data;
    data.contexts = contexts;
    data.n_actions = n_actions;
    data.bounds = bounds;
    const std::size_t known = contexts.size();

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "line " + std::to_string(lineno) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw CorruptDataError(where + "invalid JSON (" + e.what() + ")");
        }
        try {
            LogRecord rec;
            const auto& x = j.at("x");
            if (x.is_object()) {
                const auto c = x.at("ctx").get<long long>();
                if (c < 0 || static_cast<std::size_t>(c) >= known)
                    throw CorruptDataError(where + "context index " + std::to_string(c) + " out of range");
                rec.ctx = static_cast<std::size_t>(c);
            } else {
                const Vector v = vector_from_json(x);
                std::size_t idx = data.contexts.size();
                for (std::size_t i = 0; i < data.contexts.size(); ++i) {
                    if (data.contexts[i].size() == v.size() && data.contexts[i] == v) {
                        idx = i;
                        break;
                    }
                }
                if (idx == data.contexts.size()) data.contexts.push_back(v);
                rec.ctx = idx;
            }
            rec.action = j.at("y").get<int>();
            rec.reward = j.at("r").get<double>();
            rec.propensity = j.at("p0").get<double>();
            if (rec.action < 0 || rec.action >= n_actions)
                throw CorruptDataError(where + "action " + std::to_string(rec.action) + " out of range");
            if (!(rec.propensity > 0.0 && rec.propensity <= 1.0))
                throw CorruptDataError(where + "propensity must lie in (0, 1]");
            if (!std::isfinite(rec.reward) || rec.reward < bounds.min - 1e-12 || rec.reward > bounds.max + 1e-12)
                throw CorruptDataError(where + "reward outside bounds");
            data.records.push_back(rec);
        } catch (const json::exception& e) {
            throw CorruptDataError(where + "malformed record (" + e.what() + ")");
        } catch (const ContractError& e) {
            throw CorruptDataError(where + e.what());
        }
    }
    return data;
}

void write_trace_csv(std::ostream& out, const std::vector<learning::TraceRow>& trace) {
    out << "epoch,objective,weight_sum\n";
    for (const auto& r : trace) out << r.epoch << ',' << csv_number(r.objective) << ',' << csv_number(r.weight_sum) << '\n';
}

void write_sweep_csv(std::ostream& out, const selection::SweepResult& sweep) {
    std::vector<selection::Selector> cols;
    for (const auto& e : sweep.entries) {
        if (e.failed) continue;
        for (const auto& [s, v] : e.estimates) cols.push_back(s);
        break;
    }
    out << "k";
    for (auto s : cols) out << ',' << selection::to_string(s);
    out << ",val_weight_sum,exact_value\n";
    for (const auto& e : sweep.entries) {
        out << csv_number(e.k);
        for (auto s : cols) {
            out << ',';
            if (!e.failed) out << csv_number(e.estimates.at(s));
        }
        out << ',';
        if (!e.failed) out << csv_number(e.val_weight_sum);
        out << ',';
        if (e.exact_value) out << csv_number(*e.exact_value);
        out << '\n';
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ContractError(path.string() + ": invalid JSON (" + e.what() + ")");
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

LoggedDataset read_dataset_file(const std::filesystem::path& path, const SyntheticProblem& problem) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open " + path.string());
    try {
        return read_dataset_jsonl(in, problem.contexts, problem.n_actions, problem.bounds);
    } catch (const CorruptDataError& e) {
        throw CorruptDataError(path.string() + ": " + e.what());
    }
}

void write_dataset_file(const std::filesystem::path& path, const LoggedDataset& data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write " + path.string());
    write_dataset_jsonl(out, data);
}

}  // namespace bandex::io
