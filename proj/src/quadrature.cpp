#include "levydecon/quadrature.hpp"

#include "levydecon/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <string>

namespace levydecon::quad {

double integrate(const RealFn& f, double a, double b, double rel_tol)
{
  if (a == b)
    return 0.0;
  double err = 0.0;
  const double v =
    boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, rel_tol, &err);
  if (!std::isfinite(v))
    throw QuadratureDivergence("integrate: non-finite value on [" + std::to_string(a) + ", " +
                               std::to_string(b) + "]");
  return v;
}

double integrate_to_infinity(const RealFn& f, double a, double rel_tol)
{
  double total = 0.0;
  double lo = a;
  double width = 1.0;
  int quiet = 0;
  for (int piece = 0; piece < 80; ++piece) {
    const double hi = lo + width;
    const double part = integrate(f, lo, hi, rel_tol);
    total += part;
    if (std::abs(part) <= rel_tol * std::abs(total) || (part == 0.0 && total == 0.0 && piece > 8)) {
      if (++quiet >= 2)
        return total;
    } else {
      quiet = 0;
    }
    lo = hi;
    width *= 2.0;
  }
  throw QuadratureDivergence("integrate_to_infinity: tail did not settle from a = " + std::to_string(a));
}

double integrate_half_line(const RealFn& f, double rel_tol)
{
  const double head = integrate([&](double s) { return 2.0 * s * f(s * s); }, 0.0, 1.0, rel_tol);
  return head + integrate_to_infinity(f, 1.0, rel_tol);
}

} // namespace levydecon::quad
