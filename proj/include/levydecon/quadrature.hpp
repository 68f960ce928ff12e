#pragma once

#include <complex>
#include <functional>

namespace levydecon::quad {

using RealFn = std::function<double(double)>;

/// Adaptive 61-point Gauss-Kronrod on [a, b].
double integrate(const RealFn& f, double a, double b, double rel_tol = 1e-12);

/// Integral over [a, inf): pieces of doubling length are added until a piece
/// contributes less than rel_tol of the running total. Throws
/// QuadratureDivergence when the tail does not settle.
double integrate_to_infinity(const RealFn& f, double a, double rel_tol = 1e-12);

/// Integral over (0, inf) for integrands with at most an |x|^{-1/2}-type
/// singularity at the origin (x = s^2 substitution on (0, 1]).
double integrate_half_line(const RealFn& f, double rel_tol = 1e-12);

} // namespace levydecon::quad
