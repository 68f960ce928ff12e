#include "levydecon/levy_model.hpp"

#include "levydecon/errors.hpp"
#include "levydecon/quadrature.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace levydecon {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

template<class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};

void require_positive(double v, const char* what)
{
  if (!(v > 0.0) || !std::isfinite(v))
    throw DomainError(std::string("KernelSpec: ") + what + " must be positive and finite");
}

std::string fmt(double v)
{
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

} // namespace

// ---------------------------------------------------------------- kernels

KernelSpec KernelSpec::exp_trunc1d(double theta)
{
  require_positive(theta, "theta");
  return KernelSpec(ExpTrunc1d{ theta });
}

KernelSpec KernelSpec::exp1d(double theta)
{
  require_positive(theta, "theta");
  return KernelSpec(Exp1d{ theta });
}

KernelSpec KernelSpec::power1d(double theta)
{
  require_positive(theta, "theta");
  return KernelSpec(Power1d{ theta });
}

KernelSpec KernelSpec::epanechnikov2d(double tau, double kappa)
{
  require_positive(tau, "tau");
  require_positive(kappa, "kappa");
  return KernelSpec(Epanechnikov2d{ tau, kappa });
}

KernelSpec KernelSpec::simple(std::vector<SimpleStep> steps)
{
  if (steps.empty())
    throw DomainError("KernelSpec: simple kernel needs at least one step");
  std::set<double> seen;
  for (const auto& s : steps) {
    if (s.value == 0.0 || !std::isfinite(s.value))
      throw DomainError("KernelSpec: simple step values must be finite and nonzero");
    require_positive(s.measure, "step measure");
    if (!seen.insert(s.value).second)
      throw DomainError("KernelSpec: simple step values must be pairwise distinct");
  }
  return KernelSpec(Simple{ std::move(steps) });
}

KernelSpec KernelSpec::sampled(int dimension, std::vector<double> points, std::vector<double> values,
                               std::vector<double> weights)
{
  if (dimension != 1 && dimension != 2)
    throw DomainError("KernelSpec: dimension must be 1 or 2");
  if (points.size() != values.size() * static_cast<std::size_t>(dimension) || weights.size() != values.size())
    throw DomainError("KernelSpec: sampled kernel arrays have inconsistent lengths");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || !(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw DomainError("KernelSpec: sampled kernel needs finite values and nonnegative weights");
  }
  return KernelSpec(Sampled{ dimension, std::move(points), std::move(values), std::move(weights) });
}

int KernelSpec::dimension() const
{
  return std::visit(overloaded{ [](const Epanechnikov2d&) { return 2; },
                                [](const Sampled& s) { return s.dimension; },
                                [](const auto&) { return 1; } },
                    v_);
}

std::string KernelSpec::name() const
{
  return std::visit(overloaded{
                      [](const ExpTrunc1d& k) { return "exp_trunc1d(theta=" + fmt(k.theta) + ")"; },
                      [](const Exp1d& k) { return "exp1d(theta=" + fmt(k.theta) + ")"; },
                      [](const Power1d& k) { return "power1d(theta=" + fmt(k.theta) + ")"; },
                      [](const Epanechnikov2d& k) {
                        return "epanechnikov2d(tau=" + fmt(k.tau) + ",kappa=" + fmt(k.kappa) + ")";
                      },
                      [](const Simple& k) { return "simple(" + std::to_string(k.steps.size()) + " steps)"; },
                      [](const Sampled& k) { return "sampled(" + std::to_string(k.values.size()) + " points)"; } },
                    v_);
}

double KernelSpec::operator()(std::span<const double> s) const
{
  if (s.size() != static_cast<std::size_t>(dimension()))
    throw DomainError("KernelSpec: point has wrong dimension");
  return std::visit(overloaded{
                      [&](const ExpTrunc1d& k) { return (s[0] >= 0.0 && s[0] <= k.theta) ? std::exp(-s[0]) : 0.0; },
                      [&](const Exp1d& k) { return std::exp(-k.theta * std::abs(s[0])); },
                      [&](const Power1d& k) { return std::pow(1.0 + std::abs(s[0]), -k.theta); },
                      [&](const Epanechnikov2d& k) {
                        return k.tau * std::max(0.0, k.kappa * k.kappa - s[0] * s[0] - s[1] * s[1]);
                      },
                      [&](const Simple& k) {
                        double lo = 0.0;
                        for (const auto& st : k.steps) {
                          if (s[0] >= lo && s[0] < lo + st.measure)
                            return st.value;
                          lo += st.measure;
                        }
                        return 0.0;
                      },
                      [&](const Sampled&) -> double {
                        throw UnsupportedKernel("KernelSpec: sampled kernels cannot be evaluated pointwise");
                      } },
                    v_);
}

double KernelSpec::support_measure() const
{
  return std::visit(overloaded{ [](const ExpTrunc1d& k) { return k.theta; },
                                [](const Exp1d&) { return inf; },
                                [](const Power1d&) { return inf; },
                                [](const Epanechnikov2d& k) { return pi * k.kappa * k.kappa; },
                                [](const Simple& k) {
                                  double m = 0.0;
                                  for (const auto& s : k.steps)
                                    m += s.measure;
                                  return m;
                                },
                                [](const Sampled& k) {
                                  double m = 0.0;
                                  for (std::size_t i = 0; i < k.values.size(); ++i)
                                    if (k.values[i] != 0.0)
                                      m += k.weights[i];
                                  return m;
                                } },
                    v_);
}

SupportBox KernelSpec::support_box(std::optional<double> truncation_radius) const
{
  auto truncated = [&](const char* what) -> SupportBox {
    if (!truncation_radius)
      throw UnboundedKernel(std::string("KernelSpec: ") + what + " has unbounded support; set a truncation radius");
    require_positive(*truncation_radius, "truncation radius");
    return { { -*truncation_radius, *truncation_radius } };
  };
  return std::visit(overloaded{ [](const ExpTrunc1d& k) { return SupportBox{ { 0.0, k.theta } }; },
                                [&](const Exp1d&) { return truncated("exp1d"); },
                                [&](const Power1d&) { return truncated("power1d"); },
                                [](const Epanechnikov2d& k) {
                                  return SupportBox{ { -k.kappa, k.kappa }, { -k.kappa, k.kappa } };
                                },
                                [this](const Simple&) { return SupportBox{ { 0.0, support_measure() } }; },
                                [](const Sampled&) -> SupportBox {
                                  throw UnsupportedKernel("KernelSpec: sampled kernels carry no support geometry");
                                } },
                    v_);
}

bool KernelSpec::nonnegative() const
{
  return std::visit(overloaded{ [](const Simple& k) {
                                 return std::all_of(k.steps.begin(), k.steps.end(),
                                                    [](const SimpleStep& s) { return s.value > 0.0; });
                               },
                                [](const Sampled& k) {
                                  return std::all_of(k.values.begin(), k.values.end(),
                                                     [](double v) { return v >= 0.0; });
                                },
                                [](const auto&) { return true; } },
                    v_);
}

double KernelSpec::pushforward_integral(const std::function<double(double)>& phi) const
{
  auto safe = [&](double f) { return f == 0.0 ? 0.0 : phi(f); };
  return std::visit(
    overloaded{
      [&](const ExpTrunc1d& k) { return quad::integrate([&](double s) { return safe(std::exp(-s)); }, 0.0, k.theta); },
      [&](const Exp1d& k) {
        return 2.0 * quad::integrate_to_infinity([&](double s) { return safe(std::exp(-k.theta * s)); }, 0.0);
      },
      [&](const Power1d& k) {
        // s = e^v - 1 turns the algebraic tail into an exponential one.
        return 2.0 * quad::integrate_to_infinity(
                       [&](double v) {
                         const double f = std::exp(-k.theta * v);
                         if (f == 0.0)
                           return 0.0;
                         const double r = phi(f) * std::exp(v);
                         return std::isfinite(r) ? r : 0.0;
                       },
                       0.0);
      },
      [&](const Epanechnikov2d& k) {
        // Polar coordinates and w = kappa^2 - r^2.
        return pi * quad::integrate([&](double w) { return safe(k.tau * w); }, 0.0, k.kappa * k.kappa);
      },
      [&](const Simple& k) {
        double s = 0.0;
        for (const auto& st : k.steps)
          s += st.measure * phi(st.value);
        return s;
      },
      [&](const Sampled& k) {
        double s = 0.0;
        for (std::size_t i = 0; i < k.values.size(); ++i)
          s += k.weights[i] * safe(k.values[i]);
        return s;
      } },
    v_);
}

std::complex<double> KernelSpec::pushforward_integral_complex(
  const std::function<std::complex<double>(double)>& phi) const
{
  const double re = pushforward_integral([&](double f) { return phi(f).real(); });
  const double im = pushforward_integral([&](double f) { return phi(f).imag(); });
  return { re, im };
}

// ---------------------------------------------------------- Levy densities

LevyDensity LevyDensity::tempered_halfgauss()
{
  return LevyDensity(TemperedHalfGauss{});
}

LevyDensity LevyDensity::v1_exp_trunc(double theta)
{
  require_positive(theta, "theta");
  return LevyDensity(V1ExpTrunc{ theta });
}

LevyDensity LevyDensity::v1_epanechnikov(double tau, double kappa)
{
  require_positive(tau, "tau");
  require_positive(kappa, "kappa");
  return LevyDensity(V1Epanechnikov{ tau, kappa });
}

LevyDensity LevyDensity::tabulated(SignedGridFunction values, std::string provenance)
{
  const LogGrid& g = values.grid();
  double moment = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    for (cplx z : { values.pos()[k], values.neg()[k] }) {
      if (z.real() < 0.0)
        throw DomainError("LevyDensity: tabulated density must be nonnegative");
    }
    const double x = g.magnitude(k);
    moment += std::min(1.0, x * x) * x * g.trapezoid_weight(k) * (values.pos()[k].real() + values.neg()[k].real());
  }
  if (!std::isfinite(moment))
    throw DomainError("LevyDensity: int min(1, x^2) v(x) dx is not finite");
  return LevyDensity(Tabulated{ values.real_part(), std::move(provenance) });
}

LevyDensity LevyDensity::custom(std::function<double(double)> fn, std::string label)
{
  return LevyDensity(CustomDensity{ std::move(fn), std::move(label) });
}

LevyDensity LevyDensity::zero()
{
  return custom([](double) { return 0.0; }, "zero");
}

std::string LevyDensity::name() const
{
  return std::visit(overloaded{ [](const TemperedHalfGauss&) { return std::string("tempered_halfgauss"); },
                                [](const V1ExpTrunc& d) { return "v1_exp_trunc(theta=" + fmt(d.theta) + ")"; },
                                [](const V1Epanechnikov& d) {
                                  return "v1_epanechnikov(tau=" + fmt(d.tau) + ",kappa=" + fmt(d.kappa) + ")";
                                },
                                [](const Tabulated& d) { return d.provenance; },
                                [](const CustomDensity& d) { return d.label; } },
                    v_);
}

namespace {

double v1_exp_trunc_value(double theta, double x)
{
  if (x <= 0.0)
    return 0.0;
  if (x < 1e-8)
    return 2.0 / std::sqrt(pi) * std::expm1(0.5 * theta) / std::sqrt(x);
  const double a = std::sqrt(x);
  const double b = std::sqrt(x * std::exp(theta));
  // erf difference for small arguments, erfc difference in the tail.
  if (x < 1.0)
    return (boost::math::erf(b) - boost::math::erf(a)) / x;
  return (boost::math::erfc(a) - boost::math::erfc(b)) / x;
}

double v1_epanechnikov_value(double tau, double kappa, double x)
{
  if (x <= 0.0)
    return 0.0;
  const double y = x / (tau * kappa * kappa);
  const double ry = std::sqrt(y);
  // Gamma(-1/2, y) = 2 e^{-y} / sqrt(y) - 2 sqrt(pi) erfc(sqrt(y)).
  const double g = 2.0 * std::exp(-y) / ry - 2.0 * std::sqrt(pi) * boost::math::erfc(ry);
  return std::sqrt(pi) / tau * std::max(0.0, g);
}

double tabulated_value(const SignedGridFunction& v, double x)
{
  if (x == 0.0)
    return 0.0;
  const LogGrid& g = v.grid();
  const double t = std::log(std::abs(x));
  if (t < g.t_min() || t > g.t_max())
    return 0.0;
  const auto branch = v.branch(x > 0 ? Branch::positive : Branch::negative);
  const double pos = (t - g.t_min()) / g.spacing();
  const std::size_t k = std::min(static_cast<std::size_t>(pos), g.size() - 2);
  const double frac = pos - static_cast<double>(k);
  return (1.0 - frac) * branch[k].real() + frac * branch[k + 1].real();
}

} // namespace

double LevyDensity::operator()(double x) const
{
  return std::visit(overloaded{ [&](const TemperedHalfGauss&) {
                                 return x > 0.0 ? std::exp(-x) / std::sqrt(pi * x) : 0.0;
                               },
                                [&](const V1ExpTrunc& d) { return v1_exp_trunc_value(d.theta, x); },
                                [&](const V1Epanechnikov& d) { return v1_epanechnikov_value(d.tau, d.kappa, x); },
                                [&](const Tabulated& d) { return tabulated_value(d.values, x); },
                                [&](const CustomDensity& d) { return x == 0.0 ? 0.0 : d.fn(x); } },
                    v_);
}

double LevyDensity::integrate(const std::function<double(double)>& phi) const
{
  if (const auto* tab = std::get_if<Tabulated>(&v_)) {
    // Trapezoid in log coordinates, dx = |x| dt.
    const LogGrid& g = tab->values.grid();
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double x = g.magnitude(k);
      const double vp = tab->values.pos()[k].real();
      const double vn = tab->values.neg()[k].real();
      double term = 0.0;
      if (vp != 0.0)
        term += phi(x) * vp;
      if (vn != 0.0)
        term += phi(-x) * vn;
      s += term * x * g.trapezoid_weight(k);
    }
    return s;
  }
  const auto& self = *this;
  double s = quad::integrate_half_line([&](double x) {
    const double v = self(x);
    return v == 0.0 ? 0.0 : phi(x) * v;
  });
  if (std::holds_alternative<CustomDensity>(v_)) {
    s += quad::integrate_half_line([&](double x) {
      const double v = self(-x);
      return v == 0.0 ? 0.0 : phi(-x) * v;
    });
  }
  return s;
}

std::complex<double> LevyDensity::integrate_complex(const std::function<std::complex<double>(double)>& phi) const
{
  return { integrate([&](double x) { return phi(x).real(); }), integrate([&](double x) { return phi(x).imag(); }) };
}

SignedGridFunction LevyDensity::sample(const LogGrid& grid) const
{
  if (const auto* tab = std::get_if<Tabulated>(&v_); tab && tab->values.grid() == grid)
    return tab->values;
  const auto& self = *this;
  return SignedGridFunction::sample(grid, [&](double x) -> cplx { return self(x); });
}

// ------------------------------------------------------------ forward map

double halfgauss_drift()
{
  return incomplete_gamma(1.5, 0.0, 1.0) / std::sqrt(pi);
}

double v1_value(const LevyDensity& v0, const KernelSpec& kernel, double x)
{
  return kernel.pushforward_integral([&](double f) { return v0(x / f) / std::abs(f); });
}

std::optional<LevyDensity> v1_closed_form(const LevyDensity& v0, const KernelSpec& kernel)
{
  if (!std::holds_alternative<TemperedHalfGauss>(v0.variant()))
    return std::nullopt;
  if (const auto* k = std::get_if<ExpTrunc1d>(&kernel.variant()))
    return LevyDensity::v1_exp_trunc(k->theta);
  if (const auto* k = std::get_if<Epanechnikov2d>(&kernel.variant()))
    return LevyDensity::v1_epanechnikov(k->tau, k->kappa);
  return std::nullopt;
}

LevyDensity v1_from_v0(const LevyDensity& v0, const KernelSpec& kernel, const LogGrid& grid)
{
  const std::size_t n = grid.size();
  std::vector<cplx> p(n), q(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = grid.magnitude(k);
    p[k] = v1_value(v0, kernel, x);
    q[k] = v1_value(v0, kernel, -x);
  }
  std::string prov = "quadrature: " + v0.name() + " under " + kernel.name();
  if (auto cf = v1_closed_form(v0, kernel))
    prov += "; closed form " + cf->name();
  return LevyDensity::tabulated(SignedGridFunction(grid, std::move(p), std::move(q)), prov);
}

LevyTriplet triplet_pushforward(const LevyTriplet& t0, const KernelSpec& kernel, const LogGrid& grid)
{
  if (t0.b < 0.0)
    throw DomainError("triplet_pushforward: b0 must be nonnegative");
  const LevyDensity& v0 = t0.v;
  auto odd_part = [&](double x) { return x * (v0(x) - v0(-x)); };
  // int x [1_{|ux| <= 1} - 1_{|x| <= 1}] v0(x) dx, which depends on r = |u| only.
  auto indicator_gap = [&](double r) {
    if (r == 1.0)
      return 0.0;
    if (r < 1.0)
      return quad::integrate(odd_part, 1.0, 1.0 / r);
    return -quad::integrate(odd_part, 1.0 / r, 1.0);
  };
  LevyTriplet t1;
  t1.a = kernel.pushforward_integral([&](double f) { return f * (t0.a + indicator_gap(std::abs(f))); });
  t1.b = t0.b == 0.0 ? 0.0 : t0.b * kernel.pushforward_integral([](double f) { return f * f; });
  if (auto cf = v1_closed_form(v0, kernel))
    t1.v = *cf;
  else
    t1.v = v1_from_v0(v0, kernel, grid);
  return t1;
}

std::complex<double> characteristic_exponent(const LevyTriplet& t, double y)
{
  if (y == 0.0)
    return 0.0;
  const std::complex<double> jumps = t.v.integrate_complex([y](double x) {
    const double c = std::abs(x) <= 1.0 ? y * x : 0.0;
    return std::complex<double>(std::cos(y * x) - 1.0, std::sin(y * x) - c);
  });
  return std::complex<double>(-0.5 * y * y * t.b, y * t.a) + jumps;
}

double incomplete_gamma(double a, double y, double z)
{
  if (!(a > 0.0) || !std::isfinite(a))
    throw DomainError("incomplete_gamma: a must be positive");
  if (!(y >= 0.0) || !std::isfinite(y))
    throw DomainError("incomplete_gamma: y must be finite and >= 0");
  if (!(z >= y))
    throw DomainError("incomplete_gamma: need z >= y");
  if (z == y)
    return 0.0;
  if (z == inf)
    return boost::math::tgamma(a, y);
  if (y > 0.0 && z - y < 0.25 * y) {
    // Short interval: direct quadrature avoids cancellation.
    return quad::integrate([a](double s) { return std::pow(s, a - 1.0) * std::exp(-s); }, y, z, 1e-14);
  }
  if (y >= a)
    return boost::math::tgamma(a, y) - boost::math::tgamma(a, z);
  return boost::math::tgamma_lower(a, z) - boost::math::tgamma_lower(a, y);
}

} // namespace levydecon
