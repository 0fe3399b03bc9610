#pragma once

#include <stdexcept>
#include <string>

namespace causalkit {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input: broken invariants, unknown names, bad files, exceeded caps.
// The CLI maps this to exit code 1.
struct ValidationError : Error {
    using Error::Error;
};

// A well-formed request the operation refuses to answer: wrong provenance,
// inadmissible adjustment set, zero-probability evidence, absolute-continuity
// violations, failed theorem preconditions. The CLI maps this to exit code 2.
struct PreconditionError : Error {
    using Error::Error;
};

}  // namespace causalkit
