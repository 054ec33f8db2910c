#pragma once

#include <stdexcept>

namespace fluor {

// Error taxonomy mirrored in the CLI exit codes: config 2, numeric 3, io 4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fluor
