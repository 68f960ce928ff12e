#pragma once

#include "levydecon/levy_model.hpp"
#include "levydecon/logfourier.hpp"
#include "levydecon/multiplier.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace levydecon {

/// Empirical characteristic function psi_hat(y) = mean e^{iyY} and
/// theta_hat(y) = mean Y e^{iyY}.
struct EcfSample
{
  std::vector<double> y_grid;
  std::vector<cplx> psi_hat;
  std::vector<cplx> theta_hat;
  std::size_t n = 0;
};

/// psi_hat(0) = 1 and theta_hat(0) = sample mean exactly; |psi_hat| <= 1;
/// values at -y are exact conjugates of those at y.
EcfSample ecf(std::span<const double> data, std::vector<double> y_grid);

/// 2 * l * nodes_per_pi + 1 uniform nodes on [-pi l, pi l].
std::vector<double> frequency_grid(int l, std::size_t nodes_per_pi = 128);

struct EstimatorConfig
{
  /// Frequency cutoff pi * l of the uv1 inversion.
  int l = 1;
  WeightExponent c{ 0.0 };
  /// u(x) = x by default.
  MultiplicativeWeight u{ 1.0, true };
  /// Spectral cutoff; when unset it is derived from C_k and a.
  std::optional<double> a_n;
  /// Smoothness exponent of the cutoff rule.
  double a = 0.5;
  std::optional<double> C_k;
  std::size_t nodes_per_pi = 128;
  /// Boundary check applied inside the plug-in transforms; non-strict by
  /// default so that leakage is reported rather than fatal.
  TransformOptions transform{ 1e-6, false };

  void validate() const;
  /// a_n if set, otherwise C_k^{1/2} n^{-a/(4a+2)}. ConfigError if neither.
  double resolve_cutoff(double n) const;
};

/// Estimate of uv1: (1/2pi) int_{-pi l}^{pi l} e^{-iyx} theta_hat/psi_hat
/// 1{|psi_hat| > n^{-1/2}} dy, real part, on every node of `grid`. The
/// integral uses Filon weights for F piecewise linear in y, so oscillation in x
/// is integrated exactly. The y grid must be uniform on [-pi l, pi l].
SignedGridFunction uv1_estimate(const EcfSample& e, const EstimatorConfig& cfg, const LogGrid& grid);

struct PluginDiagnostics
{
  double a_n = 0.0;
  /// Fraction of frequency nodes with |mu| > a_n.
  double kept_fraction = 0.0;
  bool leakage_forward = false;
  bool leakage_inverse = false;
  /// Largest |Im| discarded when taking the real part.
  double imag_residue = 0.0;
};

struct PluginResult
{
  SignedGridFunction value;
  PluginDiagnostics diagnostics;
};

/// The regularized inverse M^{-1} F^{-1} (1/mu) 1{|mu| > a_n} F M on a fixed
/// grid, with mu sampled once at the frequency nodes.
class PluginOperator
{
public:
  PluginOperator(const MultiplierFunction& mu, const LogGrid& grid, WeightExponent c,
                 TransformOptions opts = { 1e-6, false });

  const LogGrid& grid() const { return mu_grid_.grid(); }
  const SignedGridFunction& mu_grid() const { return mu_grid_; }
  double mu_abs_min() const;
  double mu_abs_max() const;

  /// F M uv1; the leakage flag of the input is stored in `leakage`.
  SignedGridFunction spectrum(const SignedGridFunction& uv1, bool* leakage = nullptr) const;
  /// Cutoff, division by mu, inverse transform and M^{-1}; real part.
  /// EmptySpectrum when no node has |mu| > a_n.
  PluginResult invert(const SignedGridFunction& spectrum, double a_n) const;
  PluginResult apply(const SignedGridFunction& uv1, double a_n) const;

private:
  SignedGridFunction mu_grid_;
  WeightExponent c_;
  TransformOptions opts_;
};

/// uv0_plugin with a_n taken from cfg (ConfigError when unset).
SignedGridFunction uv0_plugin(const SignedGridFunction& uv1_hat, const MultiplierFunction& mu,
                              const EstimatorConfig& cfg);

/// Keeps nodes where value / u(x) >= 0 and zeroes the rest; real part.
SignedGridFunction nonneg_project(const SignedGridFunction& uv0_hat, MultiplicativeWeight u);

/// Discretized L2(|x|^c dx) distance. GridMismatch on different grids.
double l2_error(const SignedGridFunction& estimate, const SignedGridFunction& truth, WeightExponent c);

/// u(x) v(x) sampled on the grid.
SignedGridFunction weighted_density(const LevyDensity& v, MultiplicativeWeight u, const LogGrid& grid);

struct EstimateResult
{
  SignedGridFunction uv1_hat;
  SignedGridFunction uv0_hat;
  SignedGridFunction uv0_tilde;
  PluginDiagnostics diagnostics;

  /// Columns x,uv1_hat,uv0_hat,uv0_tilde[,uv0_true]: positive branch, then
  /// negative branch, each in ascending |x|.
  std::string to_csv(const SignedGridFunction* truth = nullptr) const;
};

/// Full pipeline on observations `data` with cutoff cfg.resolve_cutoff(n).
EstimateResult estimate(std::span<const double> data, const PluginOperator& op, const EstimatorConfig& cfg);

/// Cutoff rule a_n = C_k^{1/2} n^{-a/(4a+2)}.
double cutoff_from_constant(double C_k, double n, double a);
/// Inverse of the rule: C_k = n^{a/(2a+1)} a_n^2.
double constant_from_cutoff(double a_n, double n, double a);

/// `count` log-spaced candidates on [min|mu|, max|mu|] when min > 0, else on
/// (1e-4 max|mu|, max|mu|].
std::vector<double> cutoff_candidates(const SignedGridFunction& mu_grid, std::size_t count = 200);

/// Index of the smallest curve value; ties resolve to the smallest candidate.
/// DegenerateSearch when the curve is flat.
std::size_t select_cutoff(std::span<const double> candidates, std::span<const double> curve);

struct CalibrationResult
{
  std::vector<double> candidates;
  /// Mean L2(dx) error of the projected estimator per candidate.
  std::vector<double> curve;
  double argmin = 0.0;
  double C_k = 0.0;
  double a_n = 0.0;
};

/// Grid search of the cutoff against the known truth over replicated uv1
/// estimates. Cutoffs with an empty kept set score the zero estimate.
CalibrationResult calibrate_cutoff(std::span<const SignedGridFunction> uv1_hats, const PluginOperator& op,
                                   const SignedGridFunction& truth, MultiplicativeWeight u, double n, double a,
                                   std::size_t count = 200);

/// I(X) = int_0^X Im(F uv1)(y) dy = int uv1(x) (1 - cos Xx) / x dx.
double decay_integral(const SignedGridFunction& uv1, double X);

struct DecayDiagnostic
{
  std::vector<double> x;
  std::vector<double> I;
  /// Fit I ~ a + b log(1 + x) + d (1 + x)^{-1/2} + e (1 + x)^{-1} over x >= x_max^{1/2}.
  double fitted_b = 0.0;
  double b_standard_error = 0.0;
  /// |b| <= max(2 SE, 0.05).
  bool bounded = false;
};

/// I at x = 0 and n_points log-spaced values in [1e-2, x_max].
DecayDiagnostic decay_diagnostic(const SignedGridFunction& uv1, double x_max, std::size_t n_points = 200);

} // namespace levydecon
