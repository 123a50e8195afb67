#pragma once

#include <complex>
#include <span>

namespace vbsde::detail {

enum class FftDirection { forward, backward };

/// Unnormalized in-place 2D DFT of an n x n row-major array. Forward uses
/// exp(-2 pi i ...), backward exp(+2 pi i ...). Thread-safe.
void fft2d(std::span<std::complex<double>> data, int n, FftDirection direction);

}  // namespace vbsde::detail
