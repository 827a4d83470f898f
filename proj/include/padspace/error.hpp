#pragma once

#include <stdexcept>
#include <string>

namespace padspace {

/// Raised for bad inputs: malformed files, unknown labels, violated
/// preconditions. The CLI maps this to exit code 2; anything else is an
/// internal error (exit code 1).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace padspace
