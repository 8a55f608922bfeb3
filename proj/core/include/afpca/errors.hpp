#pragma once

#include <stdexcept>

namespace afpca {

// Error categories; the CLI maps them onto exit codes 1/2/3.

/// Invalid configuration or misuse of an interface.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input data violates a precondition (schema, domain, rank, finiteness).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numerical routine failed beyond recovery.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace afpca
