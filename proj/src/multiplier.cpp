#include "levydecon/multiplier.hpp"

#include "levydecon/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace levydecon {

namespace {

constexpr double pi = std::numbers::pi;
// e^{-41.5} < 1e-18: truncation point for exponentially decaying parametrizations.
constexpr double tail_exponent = 41.5;

double q_of(MultiplicativeWeight u, WeightExponent c)
{
  return u.beta + 0.5 * (c.c - 1.0);
}

// (1 - e^{-theta z}) / z with a series near z = 0.
cplx one_minus_exp_over(cplx z, double theta)
{
  const cplx a = theta * z;
  if (std::abs(a) < 1e-3)
    return theta * (1.0 - a / 2.0 + a * a / 6.0 - a * a * a / 24.0);
  return (1.0 - std::exp(-a)) / z;
}

} // namespace

double MultiplicativeWeight::operator()(double x) const
{
  const double m = std::pow(std::abs(x), beta);
  return (sign && x < 0.0) ? -m : m;
}

MultiplierFunction::MultiplierFunction(Fn plus, Fn minus, MultiplierProvenance provenance,
                                       double integrability_constant, std::optional<double> tail_limit,
                                       std::optional<double> analytic_gamma)
  : plus_(std::move(plus))
  , minus_(std::move(minus))
  , provenance_(provenance)
  , c_(integrability_constant)
  , tail_(tail_limit)
  , gamma_(analytic_gamma)
{
}

cplx MultiplierFunction::mu(double y) const
{
  if (y == 0.0)
    throw DomainError("mu: y must be nonzero");
  const double t = std::log(std::abs(y));
  return y > 0.0 ? plus_(t) : minus_(t);
}

SignedGridFunction MultiplierFunction::on_grid(const LogGrid& grid) const
{
  std::vector<cplx> p(grid.size()), q(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.log_coord(k);
    p[k] = plus_(t);
    q[k] = minus_(t);
  }
  return SignedGridFunction(grid, std::move(p), std::move(q));
}

MultiplierFunction multiplier_closed_form(const KernelSpec& kernel, MultiplicativeWeight u, WeightExponent c)
{
  const double q = q_of(u, c);
  const auto& v = kernel.variant();
  auto same = [](MultiplierFunction::Fn f) { return std::make_pair(f, f); };

  if (const auto* k = std::get_if<ExpTrunc1d>(&v)) {
    const double theta = k->theta;
    auto f = [=](double x) { return one_minus_exp_over(cplx(q, -x), theta); };
    const double C = std::abs(f(0.0));
    auto [p, m] = same(f);
    return MultiplierFunction(p, m, MultiplierProvenance::closed_form, C, 0.0);
  }
  if (const auto* k = std::get_if<Exp1d>(&v)) {
    if (!(q > 0.0))
      throw IntegrabilityViolation("exp1d multiplier needs beta + (c-1)/2 > 0");
    const double theta = k->theta;
    auto f = [=](double x) { return 2.0 / (theta * cplx(q, -x)); };
    auto [p, m] = same(f);
    return MultiplierFunction(p, m, MultiplierProvenance::closed_form, 2.0 / (theta * q), 0.0,
                              2.0 / theta / std::sqrt(1.0 + q * q));
  }
  if (const auto* k = std::get_if<Power1d>(&v)) {
    const double theta = k->theta;
    if (!(theta * q > 1.0))
      throw IntegrabilityViolation("power1d multiplier needs theta (beta + (c-1)/2) > 1");
    auto f = [=](double x) { return 2.0 / (theta * cplx(q, -x) - 1.0); };
    auto [p, m] = same(f);
    const double d = 1.0 / theta - q;
    return MultiplierFunction(p, m, MultiplierProvenance::closed_form, 2.0 / (theta * q - 1.0), 0.0,
                              2.0 / theta / std::sqrt(1.0 + d * d));
  }
  if (const auto* k = std::get_if<Epanechnikov2d>(&v)) {
    if (!(q + 1.0 > 0.0))
      throw IntegrabilityViolation("epanechnikov2d multiplier needs 1 + beta + (c-1)/2 > 0");
    const double lt = std::log(k->tau), lk = std::log(k->kappa);
    auto f = [=](double x) {
      const cplx z(q, -x);
      return pi * std::exp(z * lt + 2.0 * (z + 1.0) * lk) / (z + 1.0);
    };
    auto [p, m] = same(f);
    const double gamma =
      pi * std::pow(k->kappa, 2.0 * q + 2.0) * std::pow(k->tau, q) / std::sqrt(1.0 + (1.0 + q) * (1.0 + q));
    return MultiplierFunction(p, m, MultiplierProvenance::closed_form, std::abs(f(0.0)), 0.0, gamma);
  }
  if (const auto* k = std::get_if<Simple>(&v)) {
    // m_+-(x) = sum_j u(f_j) |f_j|^{(c-1)/2} e^{-ix log|f_j|} nu_j (times sgn f_j for m_-).
    std::vector<double> amp, sgn, logf;
    double C = 0.0;
    for (const auto& st : k->steps) {
      const double a = u(st.value) * std::pow(std::abs(st.value), 0.5 * (c.c - 1.0)) * st.measure;
      amp.push_back(a);
      sgn.push_back(st.value > 0.0 ? 1.0 : -1.0);
      logf.push_back(std::log(std::abs(st.value)));
      C += std::abs(a);
    }
    auto sum = [=](double x, bool minus) {
      cplx s = 0.0;
      for (std::size_t j = 0; j < amp.size(); ++j)
        s += amp[j] * (minus ? sgn[j] : 1.0) * std::polar(1.0, -x * logf[j]);
      return s;
    };
    return MultiplierFunction([=](double x) { return sum(x, false); }, [=](double x) { return sum(x, true); },
                              MultiplierProvenance::closed_form, C);
  }
  throw UnsupportedKernel("multiplier_closed_form: no closed form for " + kernel.name());
}

KernelSamples sample_kernel(const KernelSpec& kernel, MultiplicativeWeight u, WeightExponent c, std::size_t n)
{
  const double q = q_of(u, c);
  KernelSamples out;
  auto push = [&](double f, double w) {
    if (f == 0.0 || w == 0.0)
      return;
    out.g.push_back(u(f) / std::abs(f));
    out.h.push_back(1.0 / f);
    out.weights.push_back(w);
  };

  // Composite Gauss-Legendre on [0, b] for the parametrization v -> (f(v), ds/dv).
  auto composite = [&](double b, auto&& f_of, auto&& jac) {
    using GL = boost::math::quadrature::gauss<double, 10>;
    const auto& xa = GL::abscissa();
    const auto& wa = GL::weights();
    const std::size_t panels = std::max<std::size_t>(1, n / 10);
    const double hw = 0.5 * b / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      const double mid = (2.0 * static_cast<double>(p) + 1.0) * hw;
      for (std::size_t i = 0; i < xa.size(); ++i) {
        for (double sgn : { -1.0, 1.0 }) {
          const double v = mid + sgn * xa[i] * hw;
          push(f_of(v), wa[i] * hw * jac(v));
        }
      }
    }
  };

  const auto& var = kernel.variant();
  if (const auto* k = std::get_if<ExpTrunc1d>(&var)) {
    composite(k->theta, [](double s) { return std::exp(-s); }, [](double) { return 1.0; });
  } else if (const auto* k = std::get_if<Exp1d>(&var)) {
    if (!(q > 0.0))
      throw IntegrabilityViolation("exp1d: int |f|^{beta + (c-1)/2} diverges");
    composite(tail_exponent / (k->theta * q), [&](double s) { return std::exp(-k->theta * s); },
              [](double) { return 2.0; });
  } else if (const auto* k = std::get_if<Power1d>(&var)) {
    if (!(k->theta * q > 1.0))
      throw IntegrabilityViolation("power1d: int |f|^{beta + (c-1)/2} diverges");
    // s = e^v - 1
    composite(tail_exponent / (k->theta * q - 1.0), [&](double v) { return std::exp(-k->theta * v); },
              [](double v) { return 2.0 * std::exp(v); });
  } else if (const auto* k = std::get_if<Epanechnikov2d>(&var)) {
    if (!(q + 1.0 > 0.0))
      throw IntegrabilityViolation("epanechnikov2d: int |f|^{beta + (c-1)/2} diverges");
    // kappa^2 - r^2 = kappa^2 e^{-v}, ds = pi kappa^2 e^{-v} dv
    const double k2 = k->kappa * k->kappa;
    composite(tail_exponent / (q + 1.0), [&](double v) { return k->tau * k2 * std::exp(-v); },
              [&](double v) { return pi * k2 * std::exp(-v); });
  } else if (const auto* k = std::get_if<Simple>(&var)) {
    for (const auto& st : k->steps)
      push(st.value, st.measure);
  } else if (const auto* k = std::get_if<Sampled>(&var)) {
    for (std::size_t i = 0; i < k->values.size(); ++i)
      push(k->values[i], k->weights[i]);
  }
  return out;
}

namespace {

double samples_constant(const KernelSamples& s, WeightExponent c)
{
  double C = 0.0;
  for (std::size_t i = 0; i < s.g.size(); ++i)
    C += s.weights[i] * std::abs(s.g[i]) * std::pow(std::abs(s.h[i]), -0.5 * (c.c + 1.0));
  return C;
}

} // namespace

MultiplierFunction multiplier_quadrature(const KernelSamples& samples, WeightExponent c, const KernelSamples* refined)
{
  const std::size_t n = samples.g.size();
  if (samples.h.size() != n || samples.weights.size() != n)
    throw DomainError("multiplier_quadrature: g, h and weights must have equal length");
  const double C = samples_constant(samples, c);
  if (!std::isfinite(C))
    throw IntegrabilityViolation("multiplier_quadrature: integrability constant is not finite");
  if (refined) {
    const double Cr = samples_constant(*refined, c);
    if (!std::isfinite(Cr) || Cr > 1.1 * C)
      throw IntegrabilityViolation("multiplier_quadrature: integrability constant grows under refinement (" +
                                   std::to_string(C) + " -> " + std::to_string(Cr) + ")");
  }
  // m_+(x) = sum w g |h|^{-(c+1)/2} e^{ix log|h|}
  std::vector<double> amp, sgn, logh;
  amp.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (samples.h[i] == 0.0 || samples.g[i] == 0.0)
      continue;
    amp.push_back(samples.weights[i] * samples.g[i] * std::pow(std::abs(samples.h[i]), -0.5 * (c.c + 1.0)));
    sgn.push_back(samples.h[i] > 0.0 ? 1.0 : -1.0);
    logh.push_back(std::log(std::abs(samples.h[i])));
  }
  auto sum = [amp, sgn, logh](double x, bool minus) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < amp.size(); ++j)
      s += amp[j] * (minus ? sgn[j] : 1.0) * std::polar(1.0, x * logh[j]);
    return s;
  };
  return MultiplierFunction([sum](double x) { return sum(x, false); }, [sum](double x) { return sum(x, true); },
                            MultiplierProvenance::quadrature, C);
}

MultiplierFunction make_multiplier(const KernelSpec& kernel, MultiplicativeWeight u, WeightExponent c)
{
  if (std::holds_alternative<Sampled>(kernel.variant()))
    return multiplier_quadrature(sample_kernel(kernel, u, c, 0), c);
  return multiplier_closed_form(kernel, u, c);
}

namespace {

struct Scan
{
  std::vector<double> x;
  std::vector<double> plus;
  std::vector<double> minus;
  double sup = 0.0;
};

Scan scan(const MultiplierFunction& m, const ProbeGrid& probe)
{
  if (probe.n < 2 || !(probe.lo < probe.hi))
    throw DomainError("ProbeGrid: need n >= 2 and lo < hi");
  Scan s;
  s.x.resize(probe.n);
  s.plus.resize(probe.n);
  s.minus.resize(probe.n);
  for (std::size_t i = 0; i < probe.n; ++i) {
    s.x[i] = probe.at(i);
    s.plus[i] = std::abs(m.m_plus(s.x[i]));
    s.minus[i] = std::abs(m.m_minus(s.x[i]));
    s.sup = std::max({ s.sup, s.plus[i], s.minus[i] });
  }
  return s;
}

// Interior local minima of a sampled modulus, refined by Brent's method.
std::vector<std::pair<double, double>> local_minima(const std::vector<double>& x, const std::vector<double>& a,
                                                    const std::function<double(double)>& mod)
{
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 1; i + 1 < a.size(); ++i) {
    if (a[i] <= a[i - 1] && a[i] < a[i + 1]) {
      const auto r = boost::math::tools::brent_find_minima(mod, x[i - 1], x[i + 1], 52);
      out.emplace_back(r.first, std::min(r.second, a[i]));
    }
  }
  return out;
}

} // namespace

InjectivityReport check_injectivity(const MultiplierFunction& m, const ProbeGrid& probe)
{
  const Scan s = scan(m, probe);
  InjectivityReport rep{ true, s.sup, {}, true };
  for (const auto* a : { &s.plus, &s.minus }) {
    for (std::size_t i = 0; i < a->size(); ++i) {
      rep.min_abs = std::min(rep.min_abs, (*a)[i]);
      if (i > 0 && (*a)[i] < 1e-10 && (*a)[i - 1] < 1e-10)
        rep.ae_nonvanishing = false;
    }
  }
  if (s.sup == 0.0)
    return rep;
  const double tol = 1e-3 * s.sup;
  for (bool minus : { false, true }) {
    auto mod = [&](double x) { return std::abs(minus ? m.m_minus(x) : m.m_plus(x)); };
    for (const auto& [x, v] : local_minima(s.x, minus ? s.minus : s.plus, mod)) {
      rep.min_abs = std::min(rep.min_abs, v);
      if (v >= tol)
        continue;
      const double dx = (probe.hi - probe.lo) / static_cast<double>(probe.n - 1);
      const bool dup = std::any_of(rep.zero_locations.begin(), rep.zero_locations.end(),
                                   [&](double z) { return std::abs(z - x) < 2 * dx; });
      if (!dup)
        rep.zero_locations.push_back(x);
    }
  }
  std::sort(rep.zero_locations.begin(), rep.zero_locations.end());
  return rep;
}

UniformBoundReport check_uniform_bound(const MultiplierFunction& m, const ProbeGrid& probe)
{
  const Scan s = scan(m, probe);
  double inf = s.sup;
  for (std::size_t i = 0; i < s.x.size(); ++i)
    inf = std::min({ inf, s.plus[i], s.minus[i] });
  for (bool minus : { false, true }) {
    auto mod = [&](double x) { return std::abs(minus ? m.m_minus(x) : m.m_plus(x)); };
    for (const auto& [x, v] : local_minima(s.x, minus ? s.minus : s.plus, mod))
      inf = std::min(inf, v);
  }
  if (m.tail_limit())
    inf = std::min(inf, *m.tail_limit());
  return { s.sup > 0.0 && inf > 1e-3 * s.sup, inf, s.sup, m.tail_limit() };
}

SimpleConditionReport check_simple_condition(std::span<const double> values, std::span<const double> measures,
                                             MultiplicativeWeight u, WeightExponent c, std::size_t pivot)
{
  if (values.size() != measures.size() || values.empty() || pivot >= values.size())
    throw DomainError("check_simple_condition: need matching nonempty arrays and a valid pivot");
  const double q = q_of(u, c);
  double lhs = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j] == 0.0 || !(measures[j] > 0.0))
      throw DomainError("check_simple_condition: values must be nonzero and measures positive");
    if (j == pivot)
      continue;
    lhs += std::pow(std::abs(values[j]) / std::abs(values[pivot]), q) * measures[j] / measures[pivot];
  }
  return { lhs < 1.0, lhs };
}

LowerBoundCertificate fit_lower_bound(const MultiplierFunction& m, double alpha1, const ProbeGrid& probe)
{
  if (!(alpha1 >= 0.0))
    throw DomainError("fit_lower_bound: alpha1 must be >= 0");
  double gamma = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < probe.n; ++i) {
    const double x = probe.at(i);
    const double w = 1.0 + std::pow(std::abs(x), alpha1);
    gamma = std::min({ gamma, std::abs(m.m_plus(x)) * w, std::abs(m.m_minus(x)) * w });
  }
  if (!(gamma > 1e-14))
    throw DegenerateBound("fit_lower_bound: gamma = " + std::to_string(gamma) + " carries no information");
  std::optional<double> analytic;
  if (alpha1 == 1.0)
    analytic = m.analytic_gamma();
  return { gamma, alpha1, LowerBoundCertificate::Kind::fitted, analytic };
}

} // namespace levydecon
