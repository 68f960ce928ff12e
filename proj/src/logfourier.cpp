#include "levydecon/logfourier.hpp"

#include "chirp_transform.hpp"
#include "levydecon/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace levydecon {

LogGrid::LogGrid(double t_min, double t_max, std::size_t n_points)
  : t_min_(t_min)
  , t_max_(t_max)
  , n_(n_points)
  , h_(0.0)
{
  if (!std::isfinite(t_min) || !std::isfinite(t_max) || !(t_min < t_max))
    throw DomainError("LogGrid: need finite t_min < t_max");
  if (n_points < 2)
    throw DomainError("LogGrid: need at least 2 points per branch");
  h_ = (t_max - t_min) / static_cast<double>(n_points - 1);
}

LogGrid LogGrid::default_grid()
{
  return LogGrid(-12.0, 12.0, 4096);
}

double LogGrid::magnitude(std::size_t k) const
{
  return std::exp(log_coord(k));
}

double LogGrid::node(Branch b, std::size_t k) const
{
  const double m = magnitude(k);
  return b == Branch::positive ? m : -m;
}

double LogGrid::trapezoid_weight(std::size_t k) const
{
  return (k == 0 || k + 1 == n_) ? 0.5 * h_ : h_;
}

bool LogGrid::symmetric() const
{
  return std::abs(t_min_ + t_max_) <= 1e-12 * std::max(1.0, std::abs(t_max_));
}

SignedGridFunction::SignedGridFunction(LogGrid grid)
  : grid_(grid)
  , pos_(grid.size())
  , neg_(grid.size())
{
}

SignedGridFunction::SignedGridFunction(LogGrid grid, std::vector<cplx> pos, std::vector<cplx> neg)
  : grid_(grid)
  , pos_(std::move(pos))
  , neg_(std::move(neg))
{
  if (pos_.size() != grid_.size() || neg_.size() != grid_.size())
    throw GridMismatch("SignedGridFunction: branch length " + std::to_string(pos_.size()) + "/" +
                       std::to_string(neg_.size()) + " does not match grid size " +
                       std::to_string(grid_.size()));
  auto finite = [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
  if (!std::all_of(pos_.begin(), pos_.end(), finite) || !std::all_of(neg_.begin(), neg_.end(), finite))
    throw DomainError("SignedGridFunction: non-finite value");
}

double SignedGridFunction::abs_max() const
{
  double m = 0.0;
  for (cplx z : pos_)
    m = std::max(m, std::abs(z));
  for (cplx z : neg_)
    m = std::max(m, std::abs(z));
  return m;
}

SignedGridFunction SignedGridFunction::real_part() const
{
  std::vector<cplx> p(pos_.size()), n(neg_.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = pos_[k].real();
    n[k] = neg_[k].real();
  }
  return SignedGridFunction(grid_, std::move(p), std::move(n));
}

double SignedGridFunction::imag_residue() const
{
  double m = 0.0;
  for (std::size_t k = 0; k < pos_.size(); ++k)
    m = std::max({ m, std::abs(pos_[k].imag()), std::abs(neg_[k].imag()) });
  return m;
}

namespace {

template<class Op>
SignedGridFunction combine(const SignedGridFunction& a, const SignedGridFunction& b, Op op)
{
  if (!(a.grid() == b.grid()))
    throw GridMismatch("SignedGridFunction: operands live on different grids");
  const std::size_t n = a.grid().size();
  std::vector<cplx> p(n), q(n);
  for (std::size_t k = 0; k < n; ++k) {
    p[k] = op(a.pos()[k], b.pos()[k]);
    q[k] = op(a.neg()[k], b.neg()[k]);
  }
  return SignedGridFunction(a.grid(), std::move(p), std::move(q));
}

} // namespace

SignedGridFunction operator+(const SignedGridFunction& a, const SignedGridFunction& b)
{
  return combine(a, b, std::plus<>{});
}

SignedGridFunction operator-(const SignedGridFunction& a, const SignedGridFunction& b)
{
  return combine(a, b, std::minus<>{});
}

SignedGridFunction operator*(cplx s, const SignedGridFunction& a)
{
  return combine(a, a, [s](cplx x, cplx) { return s * x; });
}

bool has_boundary_leakage(const SignedGridFunction& u, double tolerance)
{
  const double peak = u.abs_max();
  if (peak == 0.0)
    return false;
  const std::size_t last = u.grid().size() - 1;
  const double edge = std::max({ std::abs(u.pos()[0]),
                                 std::abs(u.pos()[last]),
                                 std::abs(u.neg()[0]),
                                 std::abs(u.neg()[last]) });
  return edge > tolerance * peak;
}

double haar_norm(const SignedGridFunction& u)
{
  const LogGrid& g = u.grid();
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    s += (std::norm(u.pos()[k]) + std::norm(u.neg()[k])) * g.trapezoid_weight(k);
  return std::sqrt(s);
}

double weighted_l2_norm(const SignedGridFunction& u, WeightExponent c)
{
  // dx = |x| dt on each branch.
  const LogGrid& g = u.grid();
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double x = g.magnitude(k);
    s += (std::norm(u.pos()[k]) + std::norm(u.neg()[k])) * std::pow(x, c.c + 1.0) *
         g.trapezoid_weight(k);
  }
  return std::sqrt(s);
}

namespace {

void check_leakage(const SignedGridFunction& u, const TransformOptions& opts, const char* op)
{
  if (opts.strict && has_boundary_leakage(u, opts.leakage_tolerance))
    throw BoundaryLeakage(std::string(op) + ": function does not decay at the grid boundary (edge/peak > " +
                          std::to_string(opts.leakage_tolerance) + ")");
}

// Branch transforms U+-(xi_j) = sum_k w_k u(+-e^{t_k}) e^{sign i xi_j t_k}, combined
// with the sign character of the multiplicative group.
SignedGridFunction branch_transform(const SignedGridFunction& u, int sign, double scale)
{
  const LogGrid& g = u.grid();
  const std::size_t n = g.size();
  std::vector<cplx> wp(n), wn(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = g.trapezoid_weight(k);
    wp[k] = w * u.pos()[k];
    wn[k] = w * u.neg()[k];
  }
  auto up = detail::chirp_transform(wp, g.t_min(), g.spacing(), sign);
  auto un = detail::chirp_transform(wn, g.t_min(), g.spacing(), sign);
  std::vector<cplx> p(n), q(n);
  for (std::size_t j = 0; j < n; ++j) {
    p[j] = scale * (up[j] + un[j]);
    q[j] = scale * (up[j] - un[j]);
  }
  return SignedGridFunction(g, std::move(p), std::move(q));
}

} // namespace

SignedGridFunction mult_fourier(const SignedGridFunction& u, const TransformOptions& opts)
{
  check_leakage(u, opts, "mult_fourier");
  return branch_transform(u, -1, 1.0);
}

SignedGridFunction mult_fourier_inv(const SignedGridFunction& phi, const TransformOptions& opts)
{
  check_leakage(phi, opts, "mult_fourier_inv");
  // Substituting x -> 1/x in the forward transform of phi(1/x) flips the sign
  // of the phase, so the inverse is the conjugate-kernel transform over 4 pi.
  // This holds on any grid, symmetric or not.
  return branch_transform(phi, +1, 1.0 / (4.0 * std::numbers::pi));
}

SignedGridFunction weight_map(const SignedGridFunction& w, WeightExponent c, WeightDirection dir)
{
  const LogGrid& g = w.grid();
  const double e = (dir == WeightDirection::forward ? 1.0 : -1.0) * 0.5 * (c.c + 1.0);
  std::vector<cplx> p(g.size()), q(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    // |x|^e = exp(e t_k) avoids forming exp(t) first.
    const double f = std::exp(e * g.log_coord(k));
    p[k] = f * w.pos()[k];
    q[k] = f * w.neg()[k];
  }
  return SignedGridFunction(g, std::move(p), std::move(q));
}

double sobolev_weight_norm(const SignedGridFunction& u, double alpha, const TransformOptions& opts)
{
  if (!(alpha >= 0.0))
    throw DomainError("sobolev_weight_norm: alpha must be >= 0");
  const SignedGridFunction fu = mult_fourier(u, opts);
  const LogGrid& g = u.grid();
  std::vector<cplx> p(g.size()), q(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double w = 1.0 + std::pow(std::abs(g.log_coord(k)), alpha);
    p[k] = w * fu.pos()[k];
    q[k] = w * fu.neg()[k];
  }
  return haar_norm(SignedGridFunction(g, std::move(p), std::move(q)));
}

} // namespace levydecon
