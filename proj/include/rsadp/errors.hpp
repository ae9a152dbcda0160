#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rsadp {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller broke a documented precondition (shape mismatch, asymmetric input, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

class SingularInputError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A state or input left its admissible set. `index` names the offending
/// barrier or input channel; `step` is set by the simulator (-1 elsewhere).
class ConstraintViolationError : public Error {
public:
    ConstraintViolationError(const std::string& what, std::size_t index, long step = -1)
        : Error(what), index_(index), step_(step) {}

    [[nodiscard]] std::size_t index() const noexcept { return index_; }
    [[nodiscard]] long step() const noexcept { return step_; }

private:
    std::size_t index_;
    long step_;
};

class IntegrationDivergedError : public Error {
public:
    IntegrationDivergedError(const std::string& what, double t, int stage)
        : Error(what), t_(t), stage_(stage) {}

    [[nodiscard]] double time() const noexcept { return t_; }
    [[nodiscard]] int stage() const noexcept { return stage_; }

private:
    double t_;
    int stage_;
};

class LearningDivergedError : public Error {
public:
    LearningDivergedError(const std::string& what, long step = -1) : Error(what), step_(step) {}

    [[nodiscard]] long step() const noexcept { return step_; }

private:
    long step_;
};

}  // namespace rsadp
