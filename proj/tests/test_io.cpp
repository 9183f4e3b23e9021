#include <doctest.h>

#include "bandex/datagen.hpp"
#include "bandex/fixtures.hpp"
#include "bandex/io.hpp"

#include <sstream>

using namespace bandex;

TEST_CASE("policy JSON round trip keeps weights and mask") {
    auto p = SoftmaxPolicy::zeros(2, 3, 1.5);
    p.weights << 0.1, -0.2, 0.3, 1e-17, 4.0, -5.5;
    MaskMatrix m(2, 3);
    m << true, false, true, true, true, false;
    p.support_mask = m;
    const auto q = io::policy_from_json(io::policy_to_json(p));
    CHECK(q.weights == p.weights);
    CHECK(q.temperature == 1.5);
    REQUIRE(q.support_mask.has_value());
    CHECK(*q.support_mask == m);
    const auto plain = io::policy_from_json(io::policy_to_json(SoftmaxPolicy::zeros(1, 2)));
    CHECK_FALSE(plain.support_mask.has_value());
}

TEST_CASE("problem JSON round trip") {
    datagen::GenConfig g;
    g.seed = 3;
    const auto p = datagen::translate_rewards(datagen::make_problem(g), -1.0);
    const auto q = io::problem_from_json(io::problem_to_json(p));
    CHECK(q.mean_reward == p.mean_reward);
    CHECK(q.context_weights == p.context_weights);
    CHECK(q.bounds.min == -1.0);
    for (std::size_t c = 0; c < p.n_contexts(); ++c) CHECK(q.contexts[c] == p.contexts[c]);
}

TEST_CASE("config JSON round trips") {
    datagen::GenConfig g;
    g.scheme = datagen::Scheme::feature_split;
    g.temperature = 7.5;
    const auto g2 = io::gen_config_from_json(io::gen_config_to_json(g));
    CHECK(g2.scheme == g.scheme);
    CHECK(g2.temperature == 7.5);
    learning::TrainConfig t;
    t.objective = learning::Objective::shifted;
    t.shift_k = -0.4;
    const auto t2 = io::train_config_from_json(io::train_config_to_json(t));
    CHECK(t2.objective == learning::Objective::shifted);
    CHECK(t2.shift_k == -0.4);
}

TEST_CASE("dataset JSONL round trip with both context forms") {
    const auto f = fixtures::reference_instance();
    const auto d = datagen::log_interactions(f.problem, f.logging, 200, 3);
    for (bool inline_x : {false, true}) {
        std::stringstream ss;
        io::write_dataset_jsonl(ss, d, inline_x);
        const auto back = io::read_dataset_jsonl(ss, f.problem.contexts, 3, f.problem.bounds);
        REQUIRE(back.size() == d.size());
        CHECK(back.contexts.size() == d.contexts.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            CHECK(back.records[i].ctx == d.records[i].ctx);
            CHECK(back.records[i].action == d.records[i].action);
            CHECK(back.records[i].reward == d.records[i].reward);
            CHECK(back.records[i].propensity == d.records[i].propensity);
        }
    }
}

TEST_CASE("inline contexts unknown to the table are appended") {
    std::stringstream ss("{\"x\":[0.5,0.5],\"y\":0,\"r\":1,\"p0\":0.5}\n{\"x\":[0.5,0.5],\"y\":1,\"r\":0,\"p0\":0.5}\n");
    const auto d = io::read_dataset_jsonl(ss, {}, 2, {0, 1});
    CHECK(d.contexts.size() == 1);
    CHECK(d.records[1].ctx == 0);
}

TEST_CASE("corrupt lines are reported with their line number") {
    const auto f = fixtures::reference_instance();
    const std::string good = "{\"x\":{\"ctx\":0},\"y\":0,\"r\":1,\"p0\":0.5}\n";
    const std::vector<std::string> bad{
        "{\"x\":{\"ctx\":0},\"y\":0,\"r\":1,\"p0\":0}",
        "{\"x\":{\"ctx\":0},\"y\":0,\"r\":1,\"p0\":1.5}",
        "{\"x\":{\"ctx\":9},\"y\":0,\"r\":1,\"p0\":0.5}",
        "{\"x\":{\"ctx\":0},\"y\":3,\"r\":1,\"p0\":0.5}",
        "{\"x\":{\"ctx\":0},\"y\":0,\"r\":2,\"p0\":0.5}",
        "{\"x\":{\"ctx\":0},\"y\":0,\"r\":1}",
        "not json",
    };
    for (const auto& line : bad) {
        std::stringstream ss(good + line + "\n");
        try {
            io::read_dataset_jsonl(ss, f.problem.contexts, 3, f.problem.bounds);
            FAIL("accepted: " << line);
        } catch (const CorruptDataError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
}

TEST_CASE("trace CSV") {
    std::stringstream ss;
    io::write_trace_csv(ss, {{0, 0.5, 1.0}, {1, 0.25, 0.75}});
    std::string header;
    std::getline(ss, header);
    CHECK(header == "epoch,objective,weight_sum");
    int rows = 0;
    for (std::string line; std::getline(ss, line);) ++rows;
    CHECK(rows == 2);
}
