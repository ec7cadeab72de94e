#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace omrouter {

/// A user-supplied parameter violates its domain. `field()` names the offender.
class InvalidParameter : public std::invalid_argument {
public:
    InvalidParameter(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A caller broke an operation precondition that is not a single bad field.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Root finding, quadrature or evaluation failed to produce a trustworthy number.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The operating point sits on or beyond the instability boundary.
class UnstableOperatingPoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace omrouter
