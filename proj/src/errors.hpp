#pragma once

// Error categories thrown by the core, so the C boundary can map them onto
// status codes without parsing messages. std::invalid_argument is used
// directly for bad values and shapes; these cover the rest.

#include <stdexcept>
#include <string>

namespace karst {

// File problems: open/read/write failures, bad magic, truncation.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown at runtime, e.g. a diverged training loss.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace karst
