#pragma once

#include "levydecon/levy_model.hpp"
#include "levydecon/logfourier.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace levydecon {

/// u(x) = |x|^beta, or sgn(x) |x|^beta when sign is set.
struct MultiplicativeWeight
{
  double beta = 1.0;
  bool sign = false;

  double operator()(double x) const;
};

enum class MultiplierProvenance
{
  closed_form,
  quadrature
};

/// m_+(x) = int u(f) |f|^{(c-1)/2} e^{-ix log|f|} ds, m_- the same with sgn f.
class MultiplierFunction
{
public:
  using Fn = std::function<cplx(double)>;

  MultiplierFunction(Fn plus, Fn minus, MultiplierProvenance provenance, double integrability_constant,
                     std::optional<double> tail_limit = std::nullopt,
                     std::optional<double> analytic_gamma = std::nullopt);

  cplx m_plus(double x) const { return plus_(x); }
  cplx m_minus(double x) const { return minus_(x); }
  /// mu(y) = m_+(log|y|) for y > 0, m_-(log|y|) for y < 0.
  cplx mu(double y) const;
  /// mu at the nodes of a log grid: m_+(t_k) on the positive branch, m_-(t_k)
  /// on the negative one.
  SignedGridFunction on_grid(const LogGrid& grid) const;

  MultiplierProvenance provenance() const { return provenance_; }
  /// C = int |u(f)| |f|^{(c-1)/2} ds, an upper bound for |m_+-|.
  double integrability_constant() const { return c_; }
  /// lim_{|x| -> inf} |m_+-(x)| when known analytically.
  std::optional<double> tail_limit() const { return tail_; }
  /// gamma of |m| >= gamma / (1 + |x|) for the kernels that have one.
  std::optional<double> analytic_gamma() const { return gamma_; }

private:
  Fn plus_;
  Fn minus_;
  MultiplierProvenance provenance_;
  double c_;
  std::optional<double> tail_;
  std::optional<double> gamma_;
};

/// Closed forms for exp_trunc1d, exp1d, power1d, epanechnikov2d and simple
/// kernels. UnsupportedKernel for sampled kernels, IntegrabilityViolation when
/// int |f|^{beta + (c-1)/2} diverges.
MultiplierFunction multiplier_closed_form(const KernelSpec& kernel, MultiplicativeWeight u, WeightExponent c);

/// Quadrature form: weights w_i with g(s_i) = u(f)/|f| and h(s_i) = 1/f.
struct KernelSamples
{
  std::vector<double> g;
  std::vector<double> h;
  std::vector<double> weights;
};

/// Composite 10-point Gauss-Legendre samples of a kernel with about n nodes,
/// in a parametrization where the integrand decays exponentially. Simple and
/// sampled kernels are returned exactly.
KernelSamples sample_kernel(const KernelSpec& kernel, MultiplicativeWeight u, WeightExponent c, std::size_t n);

/// m_+- by quadrature. If `refined` is given (the same kernel at twice the
/// resolution), IntegrabilityViolation is raised when it grows the
/// integrability constant by more than 10%.
MultiplierFunction multiplier_quadrature(const KernelSamples& samples, WeightExponent c,
                                         const KernelSamples* refined = nullptr);

/// Closed form when available, quadrature from the samples for sampled kernels.
MultiplierFunction make_multiplier(const KernelSpec& kernel, MultiplicativeWeight u, WeightExponent c);

/// Uniform probe points on [lo, hi].
struct ProbeGrid
{
  double lo = -200.0;
  double hi = 200.0;
  std::size_t n = std::size_t{ 1 } << 17;

  double at(std::size_t i) const { return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1); }
};

struct InjectivityReport
{
  bool ae_nonvanishing;
  double min_abs;
  std::vector<double> zero_locations;
  bool heuristic = true;
};

/// ae_nonvanishing fails when >= 2 consecutive probe values have |m| < 1e-10.
/// Local minima are refined between probe points; those below 1e-3 sup|m|
/// are reported as zero locations.
InjectivityReport check_injectivity(const MultiplierFunction& m, const ProbeGrid& probe = {});

struct UniformBoundReport
{
  bool bounded_below;
  double inf_abs;
  double sup_abs;
  std::optional<double> tail_limit;
};

/// inf |m_+-| over the probe (refined at local minima) combined with the
/// analytic tail limit; bounded_below when inf > 1e-3 sup.
UniformBoundReport check_uniform_bound(const MultiplierFunction& m, const ProbeGrid& probe = {});

struct SimpleConditionReport
{
  bool holds;
  double lhs;
};

/// sum_{j != pivot} (|f_j|/|f_pivot|)^{beta + (c-1)/2} nu_j / nu_pivot < 1.
SimpleConditionReport check_simple_condition(std::span<const double> values, std::span<const double> measures,
                                             MultiplicativeWeight u, WeightExponent c, std::size_t pivot = 0);

struct LowerBoundCertificate
{
  enum class Kind
  {
    analytic,
    fitted
  };
  double gamma;
  double alpha1;
  Kind kind;
  std::optional<double> analytic_gamma;
};

/// gamma = min over the probe of |m_+-(x)| (1 + |x|^alpha1). DegenerateBound
/// when gamma <= 1e-14.
LowerBoundCertificate fit_lower_bound(const MultiplierFunction& m, double alpha1, const ProbeGrid& probe = {});

} // namespace levydecon
