#pragma once

#include "bandex/core.hpp"
#include "reference.hpp"

inline ref::Table to_ref(const bandex::Matrix& m) {
    ref::Table t(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) t[i][j] = m(i, j);
    return t;
}

inline ref::Problem to_ref(const bandex::SyntheticProblem& p, const bandex::PolicyTable& logging) {
    return {p.context_weights, to_ref(p.mean_reward), to_ref(logging.probs)};
}

/// Standard-error band check: |mean - expected| <= 3 * sd / sqrt(n).
struct Sample {
    double mean = 0.0, sd = 0.0, se = 0.0;
};

inline Sample sample_stats(const std::vector<double>& v) {
    Sample s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(v.size()));
    return s;
}
