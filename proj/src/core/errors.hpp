#pragma once

#include <stdexcept>
#include <string>

namespace mtra {

/// Bad input: malformed arguments, out-of-range labels, shape mismatches,
/// invalid configuration. Maps to exit status 1 / MTRA_ERR_VALIDATION.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure while doing otherwise valid work: missing files, I/O, divergence.
/// Maps to exit status 2 / MTRA_ERR_RUNTIME.
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mtra
