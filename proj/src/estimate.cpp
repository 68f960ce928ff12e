#include "levydecon/estimate.hpp"

#include "levydecon/errors.hpp"
#include "levydecon/io.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace levydecon {

namespace {

constexpr double pi = std::numbers::pi;
constexpr cplx I{ 0.0, 1.0 };

// Filon panel moments: A(w) = int_0^1 (1 - s) e^{-iws} ds, B(w) = int_0^1 s e^{-iws} ds.
void filon_moments(double w, cplx& A, cplx& B)
{
  if (std::abs(w) < 0.5) {
    // A = sum (-iw)^n / (n! (n+1)(n+2)), B = sum (-iw)^n / (n! (n+2)).
    cplx term = 1.0, a = 0.0, b = 0.0;
    for (int n = 0; n < 30; ++n) {
      a += term / static_cast<double>((n + 1) * (n + 2));
      b += term / static_cast<double>(n + 2);
      term *= -I * w / static_cast<double>(n + 1);
    }
    A = a;
    B = b;
    return;
  }
  const cplx e = std::exp(-I * w);
  B = (e * (1.0 + I * w) - 1.0) / (w * w);
  A = I * (e - 1.0) / w - B;
}

// int_0^{r0} phi(r) (1 - cos Xr) dr with phi extended below the grid as the
// power law through the first two nodes (exponent clamped to > -1).
double head_integral(double r0, double p0, double r1, double p1, double X)
{
  if (p0 == 0.0)
    return 0.0;
  double p = 0.0;
  if (p1 != 0.0 && (p0 > 0.0) == (p1 > 0.0))
    p = std::log(p1 / p0) / std::log(r1 / r0);
  p = std::max(p, -0.999);
  const double z = X * r0;
  if (z > 10.0) // cosine part averages out
    return p0 * r0 / (p + 1.0);
  // 1 - cos z r/r0 = sum_j (-1)^{j+1} (z r/r0)^{2j} / (2j)!
  double sum = 0.0, term = 1.0;
  for (int j = 1; j < 60; ++j) {
    term *= z * z / static_cast<double>((2 * j - 1) * (2 * j));
    const double add = term / (2.0 * j + 1.0 + p);
    sum += (j % 2 == 1) ? add : -add;
    if (add < 1e-17 * std::abs(sum))
      break;
  }
  return p0 * r0 * sum;
}

void check_same_grid(const SignedGridFunction& a, const SignedGridFunction& b, const char* op)
{
  if (!(a.grid() == b.grid()))
    throw GridMismatch(std::string(op) + ": functions live on different grids");
}

} // namespace

EcfSample ecf(std::span<const double> data, std::vector<double> y_grid)
{
  if (data.empty())
    throw DomainError("ecf: empty sample");
  EcfSample e;
  e.n = data.size();
  e.psi_hat.resize(y_grid.size());
  e.theta_hat.resize(y_grid.size());
  const double inv_n = 1.0 / static_cast<double>(e.n);
  double mean = 0.0;
  for (double v : data)
    mean += v;
  mean *= inv_n;
  for (std::size_t m = 0; m < y_grid.size(); ++m) {
    const double y = y_grid[m];
    if (y == 0.0) {
      e.psi_hat[m] = 1.0;
      e.theta_hat[m] = mean;
      continue;
    }
    // cos is even and sin odd in y, so the values at -y are exact conjugates.
    const double ay = std::abs(y);
    double pc = 0.0, ps = 0.0, tc = 0.0, ts = 0.0;
    for (double v : data) {
      const double c = std::cos(ay * v), s = std::sin(ay * v);
      pc += c;
      ps += s;
      tc += v * c;
      ts += v * s;
    }
    const double sg = y > 0.0 ? 1.0 : -1.0;
    cplx psi(pc * inv_n, sg * ps * inv_n);
    if (std::abs(psi) > 1.0)
      psi /= std::abs(psi);
    e.psi_hat[m] = psi;
    e.theta_hat[m] = cplx(tc * inv_n, sg * ts * inv_n);
  }
  e.y_grid = std::move(y_grid);
  return e;
}

std::vector<double> frequency_grid(int l, std::size_t nodes_per_pi)
{
  if (l < 1 || nodes_per_pi < 1)
    throw DomainError("frequency_grid: l and nodes_per_pi must be >= 1");
  const std::size_t panels = 2 * static_cast<std::size_t>(l) * nodes_per_pi;
  const double half = pi * static_cast<double>(l);
  std::vector<double> y(panels + 1);
  for (std::size_t m = 0; m <= panels; ++m) {
    // Symmetric construction keeps y[panels - m] == -y[m] exactly.
    const long long j = static_cast<long long>(m) - static_cast<long long>(panels / 2);
    y[m] = half * static_cast<double>(j) / static_cast<double>(panels / 2);
  }
  return y;
}

void EstimatorConfig::validate() const
{
  if (l < 1)
    throw ConfigError("estimator: l must be >= 1");
  if (a_n && !(*a_n > 0.0))
    throw ConfigError("estimator: a_n must be positive");
  if (C_k && !(*C_k > 0.0))
    throw ConfigError("estimator: C_k must be positive");
  if (!(a > 0.0))
    throw ConfigError("estimator: a must be positive");
  if (nodes_per_pi < 1)
    throw ConfigError("estimator: nodes_per_pi must be >= 1");
}

double EstimatorConfig::resolve_cutoff(double n) const
{
  if (a_n)
    return *a_n;
  if (C_k)
    return cutoff_from_constant(*C_k, n, a);
  throw ConfigError("estimator: neither a_n nor C_k is set");
}

SignedGridFunction uv1_estimate(const EcfSample& e, const EstimatorConfig& cfg, const LogGrid& grid)
{
  const auto& y = e.y_grid;
  const std::size_t M = y.size();
  const double half = pi * static_cast<double>(cfg.l);
  if (M < 2 || y.front() != -half || y.back() != half)
    throw DomainError("uv1_estimate: y grid must span [-pi l, pi l]");
  const double dy = (y.back() - y.front()) / static_cast<double>(M - 1);
  for (std::size_t m = 1; m < M; ++m)
    if (std::abs(y[m] - y[m - 1] - dy) > 1e-9 * dy)
      throw DomainError("uv1_estimate: y grid must be uniform");

  const double thresh = 1.0 / std::sqrt(static_cast<double>(e.n));
  std::vector<cplx> F(M, 0.0);
  for (std::size_t m = 0; m < M; ++m)
    if (std::abs(e.psi_hat[m]) > thresh)
      F[m] = e.theta_hat[m] / e.psi_hat[m];

  // With F linear on each panel: integral = dy sum_m F_m e^{-i y_m x} W_m, where
  // W = A + e^{iw} B inside, A at the left end and e^{iw} B at the right end.
  auto at = [&](double x) {
    const double w = x * dy;
    cplx A, B;
    filon_moments(w, A, B);
    const cplx ew = std::exp(I * w);
    const cplx inner = A + ew * B;
    const cplx step = std::exp(-I * w);
    cplx phase = std::exp(-I * y.front() * x);
    cplx sum = F[0] * phase * A;
    for (std::size_t m = 1; m + 1 < M; ++m) {
      phase *= step;
      sum += F[m] * phase * inner;
    }
    phase = std::exp(-I * y.back() * x);
    sum += F[M - 1] * phase * ew * B;
    return (dy / (2.0 * pi) * sum).real();
  };
  std::vector<cplx> pos(grid.size()), neg(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    pos[k] = at(grid.node(Branch::positive, k));
    neg[k] = at(grid.node(Branch::negative, k));
  }
  return SignedGridFunction(grid, std::move(pos), std::move(neg));
}

PluginOperator::PluginOperator(const MultiplierFunction& mu, const LogGrid& grid, WeightExponent c,
                               TransformOptions opts)
  : mu_grid_(mu.on_grid(grid))
  , c_(c)
  , opts_(opts)
{
}

double PluginOperator::mu_abs_min() const
{
  double m = std::numeric_limits<double>::infinity();
  for (auto b : { Branch::positive, Branch::negative })
    for (auto v : mu_grid_.branch(b))
      m = std::min(m, std::abs(v));
  return m;
}

double PluginOperator::mu_abs_max() const { return mu_grid_.abs_max(); }

SignedGridFunction PluginOperator::spectrum(const SignedGridFunction& uv1, bool* leakage) const
{
  check_same_grid(uv1, mu_grid_, "uv0_plugin");
  const auto w = weight_map(uv1, c_, WeightDirection::forward);
  if (leakage)
    *leakage = has_boundary_leakage(w, opts_.leakage_tolerance);
  return mult_fourier(w, opts_);
}

PluginResult PluginOperator::invert(const SignedGridFunction& spectrum, double a_n) const
{
  check_same_grid(spectrum, mu_grid_, "uv0_plugin");
  if (!(a_n > 0.0))
    throw DomainError("uv0_plugin: a_n must be positive");
  const std::size_t n = grid().size();
  std::vector<cplx> pos(n, 0.0), neg(n, 0.0);
  std::size_t kept = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const cplx mp = mu_grid_.pos()[k], mn = mu_grid_.neg()[k];
    if (std::abs(mp) > a_n) {
      pos[k] = spectrum.pos()[k] / mp;
      ++kept;
    }
    if (std::abs(mn) > a_n) {
      neg[k] = spectrum.neg()[k] / mn;
      ++kept;
    }
  }
  if (kept == 0)
    throw EmptySpectrum("uv0_plugin: no frequency with |mu| > a_n = " + io::fmt17(a_n));
  PluginDiagnostics d;
  d.a_n = a_n;
  d.kept_fraction = static_cast<double>(kept) / static_cast<double>(2 * n);
  const SignedGridFunction filtered(grid(), std::move(pos), std::move(neg));
  d.leakage_inverse = has_boundary_leakage(filtered, opts_.leakage_tolerance);
  const auto raw = weight_map(mult_fourier_inv(filtered, opts_), c_, WeightDirection::inverse);
  d.imag_residue = raw.imag_residue();
  return { raw.real_part(), d };
}

PluginResult PluginOperator::apply(const SignedGridFunction& uv1, double a_n) const
{
  bool leak = false;
  const auto s = spectrum(uv1, &leak);
  auto r = invert(s, a_n);
  r.diagnostics.leakage_forward = leak;
  return r;
}

SignedGridFunction uv0_plugin(const SignedGridFunction& uv1_hat, const MultiplierFunction& mu,
                              const EstimatorConfig& cfg)
{
  if (!cfg.a_n)
    throw ConfigError("uv0_plugin: a_n must be resolved");
  return PluginOperator(mu, uv1_hat.grid(), cfg.c, cfg.transform).apply(uv1_hat, *cfg.a_n).value;
}

SignedGridFunction nonneg_project(const SignedGridFunction& uv0_hat, MultiplicativeWeight u)
{
  const LogGrid& g = uv0_hat.grid();
  std::vector<cplx> pos(g.size(), 0.0), neg(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double xp = g.node(Branch::positive, k), xn = g.node(Branch::negative, k);
    const double vp = uv0_hat.pos()[k].real(), vn = uv0_hat.neg()[k].real();
    if (vp * u(xp) >= 0.0)
      pos[k] = vp;
    if (vn * u(xn) >= 0.0)
      neg[k] = vn;
  }
  return SignedGridFunction(g, std::move(pos), std::move(neg));
}

double l2_error(const SignedGridFunction& estimate, const SignedGridFunction& truth, WeightExponent c)
{
  check_same_grid(estimate, truth, "l2_error");
  return weighted_l2_norm(estimate - truth, c);
}

SignedGridFunction weighted_density(const LevyDensity& v, MultiplicativeWeight u, const LogGrid& grid)
{
  return SignedGridFunction::sample(grid, [&](double x) { return cplx(u(x) * v(x), 0.0); });
}

std::string EstimateResult::to_csv(const SignedGridFunction* truth) const
{
  std::ostringstream os;
  os << "x,uv1_hat,uv0_hat,uv0_tilde" << (truth ? ",uv0_true" : "") << "\n";
  const LogGrid& g = uv1_hat.grid();
  for (auto b : { Branch::positive, Branch::negative })
    for (std::size_t k = 0; k < g.size(); ++k) {
      os << io::fmt17(g.node(b, k)) << ',' << io::fmt17(uv1_hat.value(b, k).real()) << ','
         << io::fmt17(uv0_hat.value(b, k).real()) << ',' << io::fmt17(uv0_tilde.value(b, k).real());
      if (truth)
        os << ',' << io::fmt17(truth->value(b, k).real());
      os << "\n";
    }
  return os.str();
}

EstimateResult estimate(std::span<const double> data, const PluginOperator& op, const EstimatorConfig& cfg)
{
  cfg.validate();
  const auto e = ecf(data, frequency_grid(cfg.l, cfg.nodes_per_pi));
  auto uv1 = uv1_estimate(e, cfg, op.grid());
  auto r = op.apply(uv1, cfg.resolve_cutoff(static_cast<double>(data.size())));
  auto tilde = nonneg_project(r.value, cfg.u);
  return { std::move(uv1), std::move(r.value), std::move(tilde), r.diagnostics };
}

double cutoff_from_constant(double C_k, double n, double a)
{
  if (!(C_k > 0.0) || !(n > 0.0) || !(a > 0.0))
    throw DomainError("cutoff_from_constant: C_k, n and a must be positive");
  return std::sqrt(C_k) * std::pow(n, -a / (4.0 * a + 2.0));
}

double constant_from_cutoff(double a_n, double n, double a)
{
  if (!(a_n > 0.0) || !(n > 0.0) || !(a > 0.0))
    throw DomainError("constant_from_cutoff: a_n, n and a must be positive");
  return std::pow(n, a / (2.0 * a + 1.0)) * a_n * a_n;
}

std::vector<double> cutoff_candidates(const SignedGridFunction& mu_grid, std::size_t count)
{
  if (count < 2)
    throw DomainError("cutoff_candidates: need at least 2 candidates");
  double lo = std::numeric_limits<double>::infinity();
  for (auto b : { Branch::positive, Branch::negative })
    for (auto v : mu_grid.branch(b))
      lo = std::min(lo, std::abs(v));
  const double hi = mu_grid.abs_max();
  if (!(hi > 0.0))
    throw DegenerateSearch("cutoff_candidates: multiplier vanishes on the grid");
  std::vector<double> s(count);
  if (lo > 0.0 && lo < hi) {
    for (std::size_t i = 0; i < count; ++i)
      s[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) /
                                       static_cast<double>(count - 1));
  } else {
    // Open at the left end: the first candidate is one step above 1e-4 max.
    const double l0 = std::log(1e-4 * hi);
    for (std::size_t i = 0; i < count; ++i)
      s[i] = std::exp(l0 + (std::log(hi) - l0) * static_cast<double>(i + 1) / static_cast<double>(count));
  }
  s.back() = hi;
  return s;
}

std::size_t select_cutoff(std::span<const double> candidates, std::span<const double> curve)
{
  if (candidates.size() != curve.size() || curve.empty())
    throw DomainError("select_cutoff: candidates and curve differ in length");
  const auto [mn, mx] = std::minmax_element(curve.begin(), curve.end());
  if (!std::isfinite(*mn) || !std::isfinite(*mx))
    throw DegenerateSearch("select_cutoff: non-finite error curve");
  const double tol = 1e-12 * std::max(1.0, std::abs(*mx));
  if (*mx - *mn <= tol)
    throw DegenerateSearch("select_cutoff: error curve is flat");
  std::size_t best = candidates.size();
  for (std::size_t i = 0; i < curve.size(); ++i)
    if (curve[i] - *mn <= tol && (best == candidates.size() || candidates[i] < candidates[best]))
      best = i;
  return best;
}

CalibrationResult calibrate_cutoff(std::span<const SignedGridFunction> uv1_hats, const PluginOperator& op,
                                   const SignedGridFunction& truth, MultiplicativeWeight u, double n, double a,
                                   std::size_t count)
{
  if (uv1_hats.empty())
    throw DomainError("calibrate_cutoff: need at least one replicate");
  CalibrationResult r;
  r.candidates = cutoff_candidates(op.mu_grid(), count);
  std::vector<SignedGridFunction> spectra;
  spectra.reserve(uv1_hats.size());
  for (const auto& h : uv1_hats)
    spectra.push_back(op.spectrum(h));
  const WeightExponent dx{ 0.0 };
  const double zero_error = weighted_l2_norm(truth, dx);
  r.curve.assign(r.candidates.size(), 0.0);
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    double s = 0.0;
    for (const auto& sp : spectra) {
      try {
        s += l2_error(nonneg_project(op.invert(sp, r.candidates[i]).value, u), truth, dx);
      } catch (const EmptySpectrum&) {
        s += zero_error;
      }
    }
    r.curve[i] = s / static_cast<double>(spectra.size());
  }
  r.argmin = r.candidates[select_cutoff(r.candidates, r.curve)];
  r.C_k = constant_from_cutoff(r.argmin, n, a);
  r.a_n = cutoff_from_constant(r.C_k, n, a);
  return r;
}

double decay_integral(const SignedGridFunction& uv1, double X)
{
  // I(X) = int_0^inf phi(r) (1 - cos Xr) dr with phi(r) = (uv1(r) - uv1(-r)) / r,
  // phi piecewise linear in r between nodes; the cosine part uses Filon moments.
  const LogGrid& g = uv1.grid();
  if (X == 0.0)
    return 0.0;
  const double ax = std::abs(X);
  double r0 = g.magnitude(0);
  double p0 = (uv1.pos()[0].real() - uv1.neg()[0].real()) / r0;
  double sum = head_integral(r0, p0, g.magnitude(1),
                             (uv1.pos()[1].real() - uv1.neg()[1].real()) / g.magnitude(1), ax);
  for (std::size_t k = 1; k < g.size(); ++k) {
    const double r1 = g.magnitude(k);
    const double p1 = (uv1.pos()[k].real() - uv1.neg()[k].real()) / r1;
    const double dr = r1 - r0;
    cplx A, B;
    filon_moments(-ax * dr, A, B);
    const double cos_part = (dr * std::exp(I * (ax * r0)) * (p0 * A + p1 * B)).real();
    sum += 0.5 * dr * (p0 + p1) - cos_part;
    r0 = r1;
    p0 = p1;
  }
  return sum;
}

DecayDiagnostic decay_diagnostic(const SignedGridFunction& uv1, double x_max, std::size_t n_points)
{
  if (!(x_max > 1.0) || n_points < 4)
    throw DomainError("decay_diagnostic: need x_max > 1 and at least 4 points");
  DecayDiagnostic d;
  d.x.push_back(0.0);
  d.I.push_back(0.0);
  const double l0 = std::log(1e-2), l1 = std::log(x_max);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double x = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(n_points - 1));
    d.x.push_back(x);
    d.I.push_back(decay_integral(uv1, x));
  }
  // Asymptotic regime only: the upper half of the log range.
  const double x_fit = std::sqrt(x_max);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.x.size(); ++i)
    if (d.x[i] >= x_fit)
      rows.push_back(i);
  const auto m = static_cast<Eigen::Index>(rows.size());
  if (m < 8)
    throw DomainError("decay_diagnostic: too few points in the fit range");
  Eigen::MatrixXd A(m, 4);
  Eigen::VectorXd b(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double x = d.x[rows[static_cast<std::size_t>(r)]];
    A(r, 0) = 1.0;
    A(r, 1) = std::log1p(x);
    A(r, 2) = 1.0 / std::sqrt(1.0 + x);
    A(r, 3) = 1.0 / (1.0 + x);
    b(r) = d.I[rows[static_cast<std::size_t>(r)]];
  }
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
  const double rss = (A * coef - b).squaredNorm();
  const double sigma2 = rss / static_cast<double>(m - 4);
  const Eigen::MatrixXd cov = sigma2 * (A.transpose() * A).inverse();
  d.fitted_b = coef(1);
  d.b_standard_error = std::sqrt(std::max(0.0, cov(1, 1)));
  d.bounded = std::abs(d.fitted_b) <= std::max(2.0 * d.b_standard_error, 0.05);
  return d;
}

} // namespace levydecon
