#pragma once

#include <stdexcept>
#include <string>

namespace idcnn {

// Error categories map 1:1 onto CLI exit codes (io -> 2, numeric -> 3,
// incompatible -> 4); everything else surfaces as usage (1).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IncompatibleError : std::runtime_error {
    explicit IncompatibleError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace idcnn
