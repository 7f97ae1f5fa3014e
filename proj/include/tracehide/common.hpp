#pragma once

#include <stdexcept>
#include <string>

namespace tracehide {

inline constexpr const char* version_string = "0.1.0";

// Error taxonomy. The CLI maps each class to a distinct exit code,
// so keep the set small and stable.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Values outside their stated domain: bad coordinates, unsorted
// timestamps, empty inputs, non-finite numbers passed where finite
// ones are required.
struct input_error : error {
    using error::error;
};

// Malformed files. Message carries the offending line number when known.
struct parse_error : error {
    using error::error;
};

// Inconsistent or invalid configuration: weights off the simplex,
// missing importance scores, empty sets where a method needs data.
struct config_error : error {
    using error::error;
};

// Numerical failure during computation (non-finite loss, etc).
struct numeric_error : error {
    using error::error;
};

}  // namespace tracehide
