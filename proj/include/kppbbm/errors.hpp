#pragma once

#include <stdexcept>
#include <string>

namespace kppbbm {

// Numeric failure: non-convergence, spurious branch, domain too narrow.
// Maps to exit code 1 in the CLI.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Bad input: malformed profile spec, violated precondition, bad config.
// Maps to exit code 2 in the CLI.
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace kppbbm
