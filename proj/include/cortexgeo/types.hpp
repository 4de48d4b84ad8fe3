#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cortexgeo {

using Vec3 = Eigen::Vector3d;
using Index = std::int32_t;

// Thrown for malformed inputs, bad arguments, and schema violations.
// The CLI maps this to exit code 1.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a computation fails at runtime (NaN in a loss, non-convergence
// where convergence is required, numeric overflow). CLI exit code 2.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cortexgeo
