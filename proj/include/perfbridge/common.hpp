#pragma once

#include <stdexcept>
#include <string>

namespace perfbridge {

/// Base class for all errors raised by the toolkit.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input: bad files, invalid samples, broken
/// model definitions. Maps to exit code 2 at the CLI boundary.
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(msg) {}
};

}  // namespace perfbridge
