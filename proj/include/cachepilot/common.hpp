#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cachepilot {

/// Malformed or truncated input file (trace, model, CSV, config).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation attempted on an object in the wrong state (e.g. predicting
/// with an untrained model).
class StateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure (non-positive-definite kernel matrix, divergence).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Key-value sizing assumption: 4-byte keys, 100 KB values, so one GB of
/// tenant data maps to 10,240 unique keys.
inline constexpr double kKeysPerGb = 10240.0;

enum class Family : std::uint8_t {
    Uniform = 0,
    Gaussian = 1,
    Exponential = 2,
    Zipf = 3,
};

const char* family_name(Family f);
Family family_from_name(const std::string& name);
Family family_from_code(std::uint8_t code);

}  // namespace cachepilot
