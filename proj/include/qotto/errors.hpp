// errors.hpp: exception types shared by the qotto modules

#pragma once

#include <stdexcept>
#include <string>

namespace qotto {

// Invalid physical or numerical input (negative temperature, bad dimension, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// |u| too close to 1: the Fock truncation cannot represent the collapsing spectrum.
class SpectralCollapseError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

// Lowest eigenvalues moved by more than the tolerance when the Fock space was enlarged.
class TruncationError : public std::runtime_error {
public:
    TruncationError(const std::string& what, double shift)
        : std::runtime_error(what), shift_(shift) {}
    double shift() const noexcept { return shift_; }

private:
    double shift_;
};

// Heat/work signs that no cycle between two baths can produce (first or second law broken).
class ThermodynamicsViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Time propagation left the physical state space (positivity, unitarity, trace).
class PropagationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qotto
