#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bandex::verify {

enum class Level { fast, full };

Level level_from_string(const std::string& name);

struct Entry {
    std::string name;
    bool passed = false;
    double statistic = 0.0;  // the measured quantity compared against the tolerance
    std::string detail;
};

struct Options {
    Level level = Level::fast;
    std::uint64_t seed = 0;
    /// Optional JSON Lines dataset to validate alongside the built-in checks.
    std::optional<std::filesystem::path> data_file;
    /// Problem the data file refers to; without it records must carry inline features.
    std::optional<std::filesystem::path> problem_file;
};

/// Runs the named checks. A check that throws becomes a failed entry; the rest still run.
std::vector<Entry> run(const Options& options);

bool all_passed(const std::vector<Entry>& entries);

}  // namespace bandex::verify
