// errors.hpp — exception types shared across the library.

#pragma once

#include <stdexcept>
#include <string>

namespace agp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Grid too coarse (or basis too small) for the requested synthesis/analysis.
struct AliasError : Error { using Error::Error; };
// Value array length does not match the grid.
struct ShapeError : Error { using Error::Error; };
// Operation requires a specific spatial dimension.
struct DimensionError : Error { using Error::Error; };
// Renormalization mode not available in this dimension.
struct ModeError : Error { using Error::Error; };
// Operator representation incompatible with the dimension.
struct RepresentationError : Error { using Error::Error; };
// Fields live on different bases.
struct BasisMismatch : Error { using Error::Error; };
// Functional undefined at u = 0.
struct ZeroFieldError : Error { using Error::Error; };
// Quadratic part non-positive where a positive value is required.
struct SignError : Error { using Error::Error; };
// gamma != 2/dim where criticality is required.
struct CriticalityError : Error { using Error::Error; };
// omega at or below -mu0.
struct FrequencyError : Error { using Error::Error; };
// Iterative solver hit its cap before reaching tolerance.
struct ConvergenceError : Error { using Error::Error; };
// Constrained energy detected as unbounded below along the flow.
struct DivergenceError : Error { using Error::Error; };
// Not enough usable nodes for a fit.
struct InsufficientNodes : Error { using Error::Error; };
// Bad configuration file.
struct ValidationError : Error { using Error::Error; };

} // namespace agp
