#pragma once

#include <complex>
#include <span>
#include <vector>

namespace levydecon::detail {

/// Evaluates X_j = sum_k a_k exp(sign * i * s_j * t_k) for t_k = t0 + k h and
/// s_j = t0 + j h (j, k < a.size()) by Bluestein's chirp-z algorithm.
std::vector<std::complex<double>>
chirp_transform(std::span<const std::complex<double>> a, double t0, double h, int sign);

} // namespace levydecon::detail
