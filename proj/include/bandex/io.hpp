#pragma once

#include "bandex/core.hpp"
#include "bandex/datagen.hpp"
#include "bandex/estimators.hpp"
#include "bandex/learning.hpp"
#include "bandex/oracle.hpp"
#include "bandex/selection.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace bandex::io {

using json = nlohmann::json;

// Policies: {"weights": [[...]], "temperature": t, "mask": [[...]] | null}.
// weights is context_dim rows by n_actions columns; mask is contexts by actions.
json policy_to_json(const SoftmaxPolicy& policy);
SoftmaxPolicy policy_from_json(const json& j);

// {"probs": [[...]]}
json table_to_json(const PolicyTable& table);
PolicyTable table_from_json(const json& j);

json problem_to_json(const SyntheticProblem& problem);
SyntheticProblem problem_from_json(const json& j);

json gen_config_to_json(const datagen::GenConfig& config);
datagen::GenConfig gen_config_from_json(const json& j);

json train_config_to_json(const learning::TrainConfig& config);
learning::TrainConfig train_config_from_json(const json& j);

json reward_model_to_json(const learning::RewardModel& model);
learning::RewardModel reward_model_from_json(const json& j);

json exact_report_to_json(const oracle::ExactReport& report);
json estimator_report_to_json(const estimators::EstimatorReport& report);
json sweep_to_json(const selection::SweepResult& sweep);

/// One record per line: {"x": {"ctx": i} | [floats], "y": int, "r": float, "p0": float}.
void write_dataset_jsonl(std::ostream& out, const LoggedDataset& data, bool inline_features = false);

/// Reads JSON Lines records against a known context table. Records with inline
/// feature vectors are matched exactly against the table and appended to it
/// when new. Throws CorruptDataError naming the offending line.
LoggedDataset read_dataset_jsonl(std::istream& in, const ContextTable& contexts, int n_actions,
                                 const RewardBounds& bounds);

/// CSV with header epoch,objective,weight_sum.
void write_trace_csv(std::ostream& out, const std::vector<learning::TraceRow>& trace);

/// CSV with header k,<selector estimates...>,val_weight_sum,exact_value.
void write_sweep_csv(std::ostream& out, const selection::SweepResult& sweep);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);
LoggedDataset read_dataset_file(const std::filesystem::path& path, const SyntheticProblem& problem);
void write_dataset_file(const std::filesystem::path& path, const LoggedDataset& data);

}  // namespace bandex::io
