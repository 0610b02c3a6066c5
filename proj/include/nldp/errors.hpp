#pragma once

#include <stdexcept>
#include <string>

namespace nldp {

// Raised for precondition violations on public operations.
struct invalid_argument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised when a computation leaves its valid numerical domain.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct aliasing_error : numerical_error {
    using numerical_error::numerical_error;
};

struct domain_error : numerical_error {
    using numerical_error::numerical_error;
};

struct degenerate_fit : numerical_error {
    using numerical_error::numerical_error;
};

// Malformed or inconsistent scenario configuration.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace nldp
