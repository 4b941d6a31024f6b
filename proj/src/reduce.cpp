#include "ddns/reduce.hpp"

#include <climits>
#include <cmath>

#include "ddns/errors.hpp"

namespace ddns {

namespace {
// Fraction bits kept below the leading exponent. 127 - 72 leaves headroom
// for 2^55 addends.
constexpr int kGuardBits = 72;
}  // namespace

double sum(std::span<const double> values) {
  int emax = INT_MIN;
  for (double x : values) {
    if (!std::isfinite(x)) throw NumericalError("non-finite value in reduction");
    if (x != 0.0) {
      int e = 0;
      std::frexp(x, &e);
      if (e > emax) emax = e;
    }
  }
  if (emax == INT_MIN) return 0.0;

  __int128 acc = 0;
  const int shift = kGuardBits - emax;
  for (double x : values) acc += static_cast<__int128>(std::ldexp(x, shift));
  return std::ldexp(static_cast<double>(acc), -shift);
}

double integrate(std::span<const double> values, double cell_volume) {
  return cell_volume * sum(values);
}

}  // namespace ddns
