#pragma once

#include <stdexcept>

namespace ald {

// Validation failures (bad configuration, bad parameters, violated
// preconditions) derive from std::invalid_argument or std::domain_error so the
// CLI can map them to exit status 2. Everything else is a runtime failure.

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ald
