#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lossav {

// Version tag written into every emitted CSV/JSON artifact. Bump on any
// schema change.
inline constexpr const char* kFormatVersion = "1";

// Thrown when an iterative routine fails to meet its tolerance (quadrature,
// root finding, optimizer restarts exhausted, tail-regime evaluations).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lossav
