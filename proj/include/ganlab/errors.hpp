#pragma once

#include <stdexcept>
#include <string>

namespace ganlab {

// Contract violations: a caller broke a documented precondition.
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Shape mismatch between operands; message names the op and both shapes.
struct ShapeError : ContractError {
    explicit ShapeError(const std::string& msg) : ContractError(msg) {}
};

// A computation produced NaN/Inf or failed to converge.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (dataset loaders, config).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ganlab
