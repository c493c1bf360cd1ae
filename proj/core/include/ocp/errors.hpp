#pragma once

#include <stdexcept>
#include <string>

namespace ocp {

/// A value lies outside the domain of a physical formula (B <= 0, n <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An Ewald or integrator configuration violates its invariants.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (files, series, mixed system shapes).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace ocp
