#pragma once

// Fourier analysis on the multiplicative group R\{0} with Haar measure dx/|x|.
//
// Functions on R\{0} are sampled on a symmetric exponential grid: the nodes
// are x = +exp(t_k) and x = -exp(t_k) with t_k uniform in [t_min, t_max].
// After the substitution x = +-exp(t) the multiplicative transform reduces to
// two ordinary Fourier transforms in the log coordinate t, one per sign branch.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace levydecon {

using cplx = std::complex<double>;

enum class Branch
{
  positive,
  negative
};

/// Uniform grid in log|x|, shared by the positive and the negative branch.
class LogGrid
{
public:
  LogGrid(double t_min, double t_max, std::size_t n_points);

  /// t in [-12, 12] with 4096 points per branch.
  static LogGrid default_grid();

  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  std::size_t size() const { return n_; }
  double spacing() const { return h_; }

  /// Log coordinate t_k.
  double log_coord(std::size_t k) const { return t_min_ + h_ * static_cast<double>(k); }
  /// |x_k| = exp(t_k).
  double magnitude(std::size_t k) const;
  /// Signed node value +-exp(t_k).
  double node(Branch b, std::size_t k) const;
  /// Trapezoid weight in the log coordinate (h inside, h/2 at both ends).
  double trapezoid_weight(std::size_t k) const;

  bool symmetric() const;

  friend bool operator==(const LogGrid&, const LogGrid&) = default;

private:
  double t_min_;
  double t_max_;
  std::size_t n_;
  double h_;
};

/// Complex function sampled at the nodes of a LogGrid, stored per branch.
class SignedGridFunction
{
public:
  explicit SignedGridFunction(LogGrid grid);
  SignedGridFunction(LogGrid grid, std::vector<cplx> pos, std::vector<cplx> neg);

  /// Samples f(x) at every signed node.
  template<class F>
  static SignedGridFunction sample(const LogGrid& grid, F&& f)
  {
    std::vector<cplx> pos(grid.size()), neg(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      pos[k] = f(grid.node(Branch::positive, k));
      neg[k] = f(grid.node(Branch::negative, k));
    }
    return SignedGridFunction(grid, std::move(pos), std::move(neg));
  }

  const LogGrid& grid() const { return grid_; }
  std::span<const cplx> pos() const { return pos_; }
  std::span<const cplx> neg() const { return neg_; }
  std::span<const cplx> branch(Branch b) const
  {
    return b == Branch::positive ? pos() : neg();
  }
  cplx value(Branch b, std::size_t k) const
  {
    return b == Branch::positive ? pos_[k] : neg_[k];
  }

  double abs_max() const;
  SignedGridFunction real_part() const;
  /// Largest |Im| over all nodes.
  double imag_residue() const;

  friend SignedGridFunction operator+(const SignedGridFunction& a, const SignedGridFunction& b);
  friend SignedGridFunction operator-(const SignedGridFunction& a, const SignedGridFunction& b);
  friend SignedGridFunction operator*(cplx s, const SignedGridFunction& a);

private:
  LogGrid grid_;
  std::vector<cplx> pos_;
  std::vector<cplx> neg_;
};

/// Exponent c of the weighted space L2(R\{0}, |x|^c dx).
struct WeightExponent
{
  double c = 0.0;
};

/// Controls the boundary-decay check performed before every transform.
struct TransformOptions
{
  /// Edge magnitude allowed, relative to the function's maximum magnitude.
  double leakage_tolerance = 1e-6;
  /// Throw BoundaryLeakage when true; otherwise transform anyway.
  bool strict = true;
};

/// True when an edge node of either branch exceeds tolerance * max|u|.
bool has_boundary_leakage(const SignedGridFunction& u, double tolerance);

/// Discretized norm of L2(R\{0}, dx/|x|).
double haar_norm(const SignedGridFunction& u);

/// Discretized norm of L2(R\{0}, |x|^c dx).
double weighted_l2_norm(const SignedGridFunction& u, WeightExponent c);

/// Multiplicative Fourier transform, evaluated at y = +-exp(t_k).
///
/// For y > 0 the result is U+(log y) + U-(log y), for y < 0 it is
/// U+(log|y|) - U-(log|y|), where U+-(xi) = int u(+-e^t) e^{-i xi t} dt.
SignedGridFunction mult_fourier(const SignedGridFunction& u, const TransformOptions& opts = {});

/// Inverse transform: (1/4pi) times the forward transform of phi(1/x).
SignedGridFunction mult_fourier_inv(const SignedGridFunction& phi, const TransformOptions& opts = {});

enum class WeightDirection
{
  forward,
  inverse
};

/// Multiplication by |x|^{(c+1)/2} (forward) or its reciprocal (inverse).
SignedGridFunction weight_map(const SignedGridFunction& w, WeightExponent c, WeightDirection dir);

/// Norm of x -> (1 + |log|x||^alpha) (F u)(x) in L2(dx/|x|); |log|x||^0 is 1.
double sobolev_weight_norm(const SignedGridFunction& u, double alpha, const TransformOptions& opts = {});

} // namespace levydecon
