#pragma once

#include <stdexcept>
#include <string>

namespace ganinf {

/// Shape or length disagreement between operands.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// NaN/Inf produced somewhere, or parameters left the divergence bound.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Trace on disk does not match what the reader expects.
class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration value or bad user input.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace ganinf
