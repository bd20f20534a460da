#pragma once

#include <stdexcept>
#include <string>

namespace orl {

// Error taxonomy. The CLI maps these onto process exit codes:
// ConfigError -> 1, DataError -> 2, IoError -> 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A broken internal invariant; indicates a bug, not bad input.
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

// Shortest decimal form that round-trips an IEEE-754 double (17 significant
// digits), locale-independent. Used for every floating-point value we emit.
std::string fmt_g17(double value);

}  // namespace orl
