#pragma once

#include "levydecon/logfourier.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace levydecon {

// ---------------------------------------------------------------- kernels

/// f(s) = e^{-s} on [0, theta].
struct ExpTrunc1d
{
  double theta;
};
/// f(s) = e^{-theta |s|}.
struct Exp1d
{
  double theta;
};
/// f(s) = (1 + |s|)^{-theta}.
struct Power1d
{
  double theta;
};
/// f(s) = tau (kappa^2 - |s|^2)_+ on R^2.
struct Epanechnikov2d
{
  double tau;
  double kappa;
};
/// f = sum_j value_j 1_{Delta_j}, nu(Delta_j) = measure_j. In space the steps
/// are laid out as consecutive intervals starting at 0.
struct SimpleStep
{
  double value;
  double measure;
};
struct Simple
{
  std::vector<SimpleStep> steps;
};
/// Kernel known only through samples f(s_i) with cell measures w_i.
struct Sampled
{
  int dimension;
  std::vector<double> points; // row-major, dimension entries per sample
  std::vector<double> values;
  std::vector<double> weights;
};

/// Axis-aligned box [lo, hi] per axis.
using SupportBox = std::vector<std::pair<double, double>>;

class KernelSpec
{
public:
  using Variant = std::variant<ExpTrunc1d, Exp1d, Power1d, Epanechnikov2d, Simple, Sampled>;

  static KernelSpec exp_trunc1d(double theta);
  static KernelSpec exp1d(double theta);
  static KernelSpec power1d(double theta);
  static KernelSpec epanechnikov2d(double tau, double kappa);
  static KernelSpec simple(std::vector<SimpleStep> steps);
  static KernelSpec sampled(int dimension, std::vector<double> points, std::vector<double> values,
                            std::vector<double> weights);

  const Variant& variant() const { return v_; }
  int dimension() const;
  std::string name() const;

  /// f at a point with dimension() coordinates.
  double operator()(std::span<const double> s) const;

  /// Lebesgue measure of {f != 0}; infinite for exp1d / power1d.
  double support_measure() const;
  /// Bounding box of the support. Unbounded kernels need a truncation radius,
  /// otherwise UnboundedKernel; sampled kernels have no geometry here.
  SupportBox support_box(std::optional<double> truncation_radius = std::nullopt) const;

  /// int phi(f(s)) ds over the support, phi(0) is never evaluated.
  double pushforward_integral(const std::function<double(double)>& phi) const;
  std::complex<double> pushforward_integral_complex(const std::function<std::complex<double>(double)>& phi) const;

  /// True when f >= 0 everywhere.
  bool nonnegative() const;

private:
  explicit KernelSpec(Variant v)
    : v_(std::move(v))
  {
  }
  Variant v_;
};

// ---------------------------------------------------------- Levy densities

/// v0(x) = (pi x)^{-1/2} e^{-x} on x > 0.
struct TemperedHalfGauss
{};
/// Field density for TemperedHalfGauss under exp_trunc1d(theta).
struct V1ExpTrunc
{
  double theta;
};
/// Field density for TemperedHalfGauss under epanechnikov2d(tau, kappa).
struct V1Epanechnikov
{
  double tau;
  double kappa;
};
/// Density sampled on a log grid; log-linear interpolation between nodes,
/// zero outside the grid.
struct Tabulated
{
  SignedGridFunction values;
  std::string provenance;
};
/// Arbitrary user density. Integrals are taken over (0, inf) and (-inf, 0).
struct CustomDensity
{
  std::function<double(double)> fn;
  std::string label;
};

class LevyDensity
{
public:
  using Variant = std::variant<TemperedHalfGauss, V1ExpTrunc, V1Epanechnikov, Tabulated, CustomDensity>;

  static LevyDensity tempered_halfgauss();
  static LevyDensity v1_exp_trunc(double theta);
  static LevyDensity v1_epanechnikov(double tau, double kappa);
  static LevyDensity tabulated(SignedGridFunction values, std::string provenance = "tabulated");
  static LevyDensity custom(std::function<double(double)> fn, std::string label = "custom");
  static LevyDensity zero();

  const Variant& variant() const { return v_; }
  std::string name() const;

  double operator()(double x) const;

  /// int phi(x) v(x) dx over R \ {0}.
  double integrate(const std::function<double(double)>& phi) const;
  std::complex<double> integrate_complex(const std::function<std::complex<double>(double)>& phi) const;

  double total_mass() const { return integrate([](double) { return 1.0; }); }

  /// Samples on a grid (real values).
  SignedGridFunction sample(const LogGrid& grid) const;

private:
  explicit LevyDensity(Variant v)
    : v_(std::move(v))
  {
  }
  Variant v_;
};

struct LevyTriplet
{
  double a = 0.0;
  double b = 0.0;
  LevyDensity v = LevyDensity::zero();
};

/// Drift of the pure-jump integrator used with TemperedHalfGauss:
/// pi^{-1/2} int_0^1 x^{1/2} e^{-x} dx.
double halfgauss_drift();

/// v1(x) = int |f(s)|^{-1} v0(x / f(s)) ds at one point.
double v1_value(const LevyDensity& v0, const KernelSpec& kernel, double x);

/// Closed form of v1 for catalog pairs, if one is known.
std::optional<LevyDensity> v1_closed_form(const LevyDensity& v0, const KernelSpec& kernel);

/// Tabulated v1 on the grid by quadrature. The provenance string names the
/// closed form when the pair has one.
LevyDensity v1_from_v0(const LevyDensity& v0, const KernelSpec& kernel, const LogGrid& grid);

/// (a1, b1, v1). v1 is the closed form for catalog pairs and a tabulation on
/// `grid` otherwise.
LevyTriplet triplet_pushforward(const LevyTriplet& t0, const KernelSpec& kernel,
                                const LogGrid& grid = LogGrid::default_grid());

/// K(y) = i y a - y^2 b / 2 + int (e^{iyx} - 1 - iyx 1_{|x|<=1}) v(x) dx.
std::complex<double> characteristic_exponent(const LevyTriplet& t, double y);

/// int_y^z s^{a-1} e^{-s} ds; z may be +inf.
double incomplete_gamma(double a, double y, double z);

} // namespace levydecon
