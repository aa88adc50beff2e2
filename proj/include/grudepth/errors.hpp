#pragma once

#include <stdexcept>
#include <string>

namespace grudepth {

// Shape/dimension contract violations (axis named in the message).
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration values (divisibility, ranges, bad keys).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// File format / filesystem problems, message carries the path.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, failed gradient checks, diverged training.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace grudepth
