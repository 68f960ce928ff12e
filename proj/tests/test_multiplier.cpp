#include "levydecon/errors.hpp"
#include "levydecon/multiplier.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace levydecon;

namespace {

constexpr double pi = std::numbers::pi;
const MultiplicativeWeight u_x{ 1.0, true }; // u(x) = x
const WeightExponent c0{ 0.0 };

double max_dev(const MultiplierFunction& a, const MultiplierFunction& b, double lo, double hi, int n)
{
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    d = std::max({ d, std::abs(a.m_plus(x) - b.m_plus(x)), std::abs(a.m_minus(x) - b.m_minus(x)) });
  }
  return d;
}

// Kernel of the almost-periodic counterexample: f = 1_{D1} + e 1_{D2}.
KernelSpec two_step()
{
  return KernelSpec::simple({ { 1.0, 1.0 }, { std::exp(1.0), 1.0 } });
}

// Three steps e^{alpha k} with alpha = 0.5, beta = 1, c = 0: z = e^{1/4} lies in
// [(sqrt5 - 1)/2, (sqrt5 + 1)/2].
KernelSpec three_step()
{
  return KernelSpec::simple({ { std::exp(0.5), 1.0 }, { std::exp(1.0), 1.0 }, { std::exp(1.5), 1.0 } });
}

} // namespace

TEST_CASE("multiplier_closed_form examples")
{
  SUBCASE("truncated exponential at x = 0")
  {
    const auto m = multiplier_closed_form(KernelSpec::exp_trunc1d(4.0), u_x, c0);
    // 2 (1 - e^{-2}), mpmath
    CHECK(m.m_plus(0.0).real() == doctest::Approx(1.72932943352677462).epsilon(1e-14));
    CHECK(m.m_plus(0.0).imag() == 0.0);
    CHECK(m.m_minus(3.0) == m.m_plus(3.0));
    // Series branch joins the direct formula.
    const auto m2 = multiplier_closed_form(KernelSpec::exp_trunc1d(4.0), { 0.0, false }, { 1.0 });
    CHECK(std::abs(m2.m_plus(1e-5) - cplx(4.0, 8e-5)) < 1e-8);
  }
  SUBCASE("two-sided exponential")
  {
    const auto m = multiplier_closed_form(KernelSpec::exp1d(4.0), u_x, c0);
    CHECK(m.m_plus(0.0).real() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(m.m_plus(2.0) - 2.0 / (4.0 * cplx(0.5, -2.0))) < 1e-15);
    CHECK_THROWS_AS(multiplier_closed_form(KernelSpec::exp1d(4.0), { 0.0, false }, c0), IntegrabilityViolation);
  }
  SUBCASE("two steps give 1 + e^{-ix}")
  {
    const auto m = multiplier_closed_form(two_step(), { 0.0, false }, { 1.0 });
    for (double x : { 0.0, 0.7, pi, 10.0 }) {
      CHECK(std::abs(m.m_plus(x) - (1.0 + std::polar(1.0, -x))) < 1e-15);
      CHECK(std::abs(m.m_minus(x) - (1.0 + std::polar(1.0, -x))) < 1e-15);
    }
  }
  SUBCASE("signed steps change m_-")
  {
    const auto m = multiplier_closed_form(KernelSpec::simple({ { 1.0, 1.0 }, { -2.0, 1.0 } }), { 0.0, false }, { 1.0 });
    CHECK(std::abs(m.m_plus(0.0) - 2.0) < 1e-15);
    CHECK(std::abs(m.m_minus(0.0)) < 1e-15);
  }
  SUBCASE("sampled kernels have no closed form")
  {
    CHECK_THROWS_AS(multiplier_closed_form(KernelSpec::sampled(1, { 0.0 }, { 1.0 }, { 1.0 }), u_x, c0),
                    UnsupportedKernel);
  }
}

TEST_CASE("multiplier_quadrature")
{
  SUBCASE("g = 0 gives 0")
  {
    const auto m = multiplier_quadrature({ { 0.0, 0.0 }, { 1.0, 2.0 }, { 1.0, 1.0 } }, c0);
    CHECK(m.m_plus(1.3) == cplx(0.0));
    CHECK(m.m_minus(-4.0) == cplx(0.0));
  }
  SUBCASE("h = 1 removes the oscillation")
  {
    const auto m = multiplier_quadrature({ { 0.5, 2.0, -1.0 }, { 1.0, 1.0, -1.0 }, { 1.0, 0.5, 2.0 } }, c0);
    for (double x : { -5.0, 0.0, 9.0 }) {
      CHECK(m.m_plus(x).real() == doctest::Approx(0.5 + 1.0 - 2.0));
      CHECK(m.m_minus(x).real() == doctest::Approx(0.5 + 1.0 + 2.0));
    }
  }
  SUBCASE("refinement catches a divergent integral")
  {
    // g(s) = s^{-3/2} on (0, 1], h = 1, c = -1: int |g| diverges at 0.
    auto midpoint = [](std::size_t n) {
      KernelSamples s;
      for (std::size_t i = 0; i < n; ++i) {
        const double x = (i + 0.5) / n;
        s.g.push_back(std::pow(x, -1.5));
        s.h.push_back(1.0);
        s.weights.push_back(1.0 / n);
      }
      return s;
    };
    const auto coarse = midpoint(1000), fine = midpoint(2000);
    CHECK_THROWS_AS(multiplier_quadrature(coarse, { -1.0 }, &fine), IntegrabilityViolation);
  }
}

TEST_CASE("property: closed form and quadrature agree on the catalog")
{
  struct Case
  {
    KernelSpec k;
    MultiplicativeWeight u;
    WeightExponent c;
  };
  const Case cases[] = { { KernelSpec::exp_trunc1d(4.0), u_x, c0 },
                         { KernelSpec::exp1d(4.0), u_x, c0 },
                         { KernelSpec::power1d(3.0), u_x, c0 },
                         { KernelSpec::epanechnikov2d(0.5, 1.0), u_x, c0 },
                         { KernelSpec::epanechnikov2d(2.0, 0.7), { 0.3, false }, { 1.0 } },
                         { three_step(), u_x, c0 } };
  for (const auto& cs : cases) {
    CAPTURE(cs.k.name());
    const auto closed = multiplier_closed_form(cs.k, cs.u, cs.c);
    const auto samples = sample_kernel(cs.k, cs.u, cs.c, 10000);
    CHECK(samples.g.size() <= 10000);
    const auto quad = multiplier_quadrature(samples, cs.c);
    CHECK(max_dev(closed, quad, -50.0, 50.0, 1001) < 1e-5);
    // Boundedness by the integrability constant.
    const ProbeGrid probe{ -200.0, 200.0, 4001 };
    double sup = 0.0;
    for (std::size_t i = 0; i < probe.n; ++i)
      sup = std::max({ sup, std::abs(closed.m_plus(probe.at(i))), std::abs(closed.m_minus(probe.at(i))) });
    CHECK(sup <= closed.integrability_constant() * (1.0 + 1e-8));
    CHECK(quad.integrability_constant() == doctest::Approx(closed.integrability_constant()).epsilon(1e-8));
    // Unsigned weight and positive kernel: m_+ = m_-.
    CHECK(closed.m_plus(1.7) == closed.m_minus(1.7));
  }
}

TEST_CASE("check_injectivity")
{
  SUBCASE("1 + e^{-ix} has isolated zeros at odd multiples of pi")
  {
    const auto m = multiplier_closed_form(two_step(), { 0.0, false }, { 1.0 });
    const auto r = check_injectivity(m, { 0.0, 4 * pi, 100000 });
    CHECK(r.ae_nonvanishing);
    CHECK(r.min_abs < 1e-4);
    REQUIRE(r.zero_locations.size() == 2);
    CHECK(r.zero_locations[0] == doctest::Approx(pi).epsilon(1e-6));
    CHECK(r.zero_locations[1] == doctest::Approx(3 * pi).epsilon(1e-6));
  }
  SUBCASE("identically zero")
  {
    const MultiplierFunction zero([](double) { return cplx(0.0); }, [](double) { return cplx(0.0); },
                                  MultiplierProvenance::closed_form, 0.0);
    const auto r = check_injectivity(zero, { -1.0, 1.0, 101 });
    CHECK_FALSE(r.ae_nonvanishing);
    CHECK(r.min_abs == 0.0);
  }
  SUBCASE("truncated exponential never vanishes")
  {
    const auto r = check_injectivity(multiplier_closed_form(KernelSpec::exp_trunc1d(4.0), u_x, c0));
    CHECK(r.ae_nonvanishing);
    CHECK(r.min_abs > 0.0);
    // |m|^2 = (1 - 2 e^{-2} cos 4x + e^{-4}) / (1/4 + x^2) >= (1 - e^{-2})^2 / (1/4 + 200^2)
    CHECK(r.min_abs >= (1 - std::exp(-2.0)) / std::sqrt(0.25 + 200.0 * 200.0) * (1 - 1e-9));
    CHECK(r.zero_locations.empty());
  }
}

TEST_CASE("check_uniform_bound")
{
  CHECK_FALSE(check_uniform_bound(multiplier_closed_form(two_step(), { 0.0, false }, { 1.0 })).bounded_below);
  const auto three = check_uniform_bound(multiplier_closed_form(three_step(), u_x, c0));
  CHECK(three.bounded_below);
  CHECK(three.inf_abs > 0.1);
  const auto et = check_uniform_bound(multiplier_closed_form(KernelSpec::exp_trunc1d(4.0), u_x, c0));
  CHECK_FALSE(et.bounded_below);
  CHECK(et.tail_limit.value() == 0.0);
}

TEST_CASE("check_simple_condition")
{
  const double f1[] = { 1.0, 0.5 }, n1[] = { 1.0, 1.0 };
  const auto r = check_simple_condition(f1, n1, u_x, c0);
  CHECK(r.lhs == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(r.holds);
  const double f2[] = { 3.0 }, n2[] = { 2.0 };
  CHECK(check_simple_condition(f2, n2, u_x, c0).lhs == 0.0);
  CHECK(check_simple_condition(f2, n2, u_x, c0).holds);
  // Three-step kernel: fails for every pivot, although m is bounded below.
  const double f3[] = { std::exp(0.5), std::exp(1.0), std::exp(1.5) }, n3[] = { 1.0, 1.0, 1.0 };
  for (std::size_t p = 0; p < 3; ++p)
    CHECK_FALSE(check_simple_condition(f3, n3, u_x, c0, p).holds);
}

TEST_CASE("fit_lower_bound")
{
  SUBCASE("two-sided exponential")
  {
    const auto m = multiplier_closed_form(KernelSpec::exp1d(4.0), u_x, c0);
    const auto cert = fit_lower_bound(m, 1.0);
    REQUIRE(cert.analytic_gamma);
    CHECK(*cert.analytic_gamma == doctest::Approx(0.5 / std::sqrt(1.25)).epsilon(1e-14));
    CHECK(cert.gamma >= *cert.analytic_gamma);
    CHECK(cert.kind == LowerBoundCertificate::Kind::fitted);
  }
  SUBCASE("Epanechnikov and power kernels")
  {
    for (const auto& k : { KernelSpec::epanechnikov2d(0.5, 1.0), KernelSpec::epanechnikov2d(2.0, 1.5),
                           KernelSpec::power1d(3.0) }) {
      CAPTURE(k.name());
      const auto cert = fit_lower_bound(multiplier_closed_form(k, u_x, c0), 1.0, { -200.0, 200.0, 20001 });
      REQUIRE(cert.analytic_gamma);
      CHECK(cert.gamma >= *cert.analytic_gamma);
    }
    // pi kappa^{2 beta + 1 + c} tau^q (1 + (1 + q)^2)^{-1/2}, tau = 1/2, kappa = 1, q = 1/2
    const auto m = multiplier_closed_form(KernelSpec::epanechnikov2d(0.5, 1.0), u_x, c0);
    CHECK(m.analytic_gamma().value() == doctest::Approx(pi * std::sqrt(0.5) / std::sqrt(1 + 2.25)).epsilon(1e-14));
  }
  SUBCASE("zero multiplier")
  {
    const MultiplierFunction zero([](double) { return cplx(0.0); }, [](double) { return cplx(0.0); },
                                  MultiplierProvenance::closed_form, 0.0);
    CHECK_THROWS_AS(fit_lower_bound(zero, 1.0, { -1.0, 1.0, 11 }), DegenerateBound);
  }
}

TEST_CASE("mu on the log grid")
{
  const auto m = multiplier_closed_form(KernelSpec::simple({ { 1.0, 1.0 }, { -2.0, 0.5 } }), u_x, c0);
  const LogGrid g(-3.0, 3.0, 7);
  const auto mu = m.on_grid(g);
  CHECK(mu.pos()[4] == m.m_plus(1.0));
  CHECK(mu.neg()[4] == m.m_minus(1.0));
  CHECK(m.mu(-std::exp(1.0)) == m.m_minus(1.0));
}
