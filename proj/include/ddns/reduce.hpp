#pragma once

#include <cstddef>
#include <span>

namespace ddns {

/// Order-independent sum of doubles.
///
/// Every addend is converted to a 128-bit fixed-point integer whose unit is
/// 2^(e_max - 72), e_max being the largest binary exponent present. Integer
/// addition is associative, so the result does not depend on traversal order,
/// partitioning, or worker count. Throws NumericalError on non-finite input.
double sum(std::span<const double> values);

/// cell_volume * sum(values): midpoint quadrature on the uniform torus grid.
double integrate(std::span<const double> values, double cell_volume);

}  // namespace ddns
