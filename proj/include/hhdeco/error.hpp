#pragma once

#include <stdexcept>
#include <string>

namespace hhdeco {

// Precondition violations are reported with std::invalid_argument. The types
// below carry the failure classes the command-line tool maps to exit codes.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or schema-violating configuration (exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// A numerical procedure failed to produce a trustworthy result (exit code 3).
struct NumericalError : Error {
    using Error::Error;
};

/// HEOM hierarchy blew up; the message recommends a deeper hierarchy or smaller dt.
struct TruncationError : NumericalError {
    using NumericalError::NumericalError;
};

/// Eigenstate continuation could not resolve a branch.
struct ContinuationError : NumericalError {
    using NumericalError::NumericalError;
};

/// Quadrature did not reach its tolerance.
struct QuadratureError : NumericalError {
    using NumericalError::NumericalError;
};

/// A hard invariant check failed (exit code 4).
struct InvariantError : Error {
    using Error::Error;
};

} // namespace hhdeco
