#pragma once

#include <span>

#include "ddns/spectral.hpp"

namespace ddns::detail {

/// out = N^-d * DFT(in), negative exponent.
void forward_fft(const TorusGrid& grid, std::span<const double> in, std::span<cplx> out);
/// out = inverse DFT(in), positive exponent, unscaled.
void inverse_fft(const TorusGrid& grid, std::span<const cplx> in, std::span<cplx> out);

}  // namespace ddns::detail
