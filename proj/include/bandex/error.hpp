#pragma once

#include <stdexcept>
#include <string>

namespace bandex {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on argument shapes or parameter domains was violated.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A policy cannot produce a distribution for some context (e.g. every action masked).
class InvalidPolicyError : public Error {
public:
    using Error::Error;
};

/// Action restriction of a policy that places all of its mass on unsupported actions.
class DegenerateRestrictionError : public Error {
public:
    using Error::Error;
};

/// Logged data violates its invariants (nonpositive propensity, bad action index, ...).
class CorruptDataError : public Error {
public:
    using Error::Error;
};

/// Gradient-based training produced a non-finite loss.
class TrainingFailure : public Error {
public:
    TrainingFailure(const std::string& what, long step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    long step() const noexcept { return step_; }

private:
    long step_;
};

/// A pipeline stage failed; carries the stage name so reports can point at it.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace bandex
