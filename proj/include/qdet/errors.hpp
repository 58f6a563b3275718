#pragma once

#include <stdexcept>
#include <string>

namespace qdet {

// Invalid user configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A solver failed to converge or produced an unusable result (CLI exit code 3).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qdet
