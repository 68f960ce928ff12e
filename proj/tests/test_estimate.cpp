#include "levydecon/errors.hpp"
#include "levydecon/estimate.hpp"
#include "levydecon/quadrature.hpp"
#include "levydecon/simulate.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace levydecon;

namespace {

constexpr double pi = std::numbers::pi;

const MultiplicativeWeight u_id{ 1.0, false };

SignedGridFunction uv0_truth(const LogGrid& g)
{
  return weighted_density(LevyDensity::tempered_halfgauss(), u_id, g);
}

SignedGridFunction uv1_exact(const LogGrid& g)
{
  return weighted_density(LevyDensity::v1_exp_trunc(4.0), u_id, g);
}

PluginOperator catalog_operator(const LogGrid& g)
{
  return PluginOperator(make_multiplier(KernelSpec::exp_trunc1d(4.0), u_id, { 0.0 }), g, { 0.0 });
}

double relative_l2(const SignedGridFunction& a, const SignedGridFunction& b)
{
  return l2_error(a, b, { 0.0 }) / weighted_l2_norm(b, { 0.0 });
}

} // namespace

TEST_CASE("ecf")
{
  const auto y = frequency_grid(1, 8);
  REQUIRE(y.size() == 17);
  CHECK(y.front() == -pi);
  CHECK(y.back() == pi);
  CHECK(y[8] == 0.0);
  for (std::size_t m = 0; m < y.size(); ++m)
    CHECK(y[m] == -y[y.size() - 1 - m]);

  const std::vector<double> zeros(7, 0.0);
  const auto e0 = ecf(zeros, y);
  for (std::size_t m = 0; m < y.size(); ++m) {
    CHECK(e0.psi_hat[m] == cplx(1.0, 0.0));
    CHECK(e0.theta_hat[m] == cplx(0.0, 0.0));
  }
  const double c0 = 0.7;
  const auto ec = ecf(std::vector<double>(5, c0), y);
  for (std::size_t m = 0; m < y.size(); ++m) {
    CHECK(std::abs(ec.psi_hat[m] - std::exp(cplx(0.0, y[m] * c0))) < 1e-14);
    CHECK(std::abs(ec.theta_hat[m] - c0 * std::exp(cplx(0.0, y[m] * c0))) < 1e-14);
  }
  CHECK_THROWS_AS(ecf(std::vector<double>{}, y), DomainError);

  // Bound and exact conjugate symmetry on random data.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 3.0);
  std::vector<double> data(200);
  for (auto& v : data)
    v = nd(rng);
  const auto er = ecf(data, frequency_grid(2, 16));
  CHECK(er.psi_hat[er.y_grid.size() / 2] == cplx(1.0, 0.0));
  for (std::size_t m = 0; m < er.y_grid.size(); ++m) {
    CHECK(std::abs(er.psi_hat[m]) <= 1.0);
    CHECK(er.psi_hat[m] == std::conj(er.psi_hat[er.y_grid.size() - 1 - m]));
    CHECK(er.theta_hat[m] == std::conj(er.theta_hat[er.y_grid.size() - 1 - m]));
  }
}

TEST_CASE("ecf of simulated X(0) matches exp(K)")
{
  // 1e5 independent copies of X(0): lattice values 5 apart exceed the support.
  const auto f = simulate_field(KernelSpec::exp_trunc1d(4.0), LevyDensity::tempered_halfgauss(),
                                GridSpec::centered(1, 1.0, 500000), 17);
  std::vector<double> v;
  for (std::size_t i = 0; i < f.values.size(); i += 5)
    v.push_back(f.values[i]);
  REQUIRE(v.size() == 100000);
  const auto e = ecf(v, { 1.0 });
  const cplx cf = std::exp(cplx(-0.142213666809790979, 0.417921406868802455));
  CHECK(std::abs(e.psi_hat[0] - cf) < 3.0 / std::sqrt(1e5));
}

TEST_CASE("uv1_estimate closed cases")
{
  const LogGrid g(-3.0, 3.0, 61);
  EstimatorConfig cfg;
  cfg.l = 2;
  // theta_hat = 0 for all-zero data.
  const auto z = uv1_estimate(ecf(std::vector<double>(10, 0.0), frequency_grid(2)), cfg, g);
  CHECK(z.abs_max() == 0.0);
  // Point mass at c0: theta_hat / psi_hat = c0, so the estimate is c0 sin(pi l x) / (pi x).
  const double c0 = 0.8;
  const auto d = uv1_estimate(ecf(std::vector<double>(10, c0), frequency_grid(2)), cfg, g);
  for (auto b : { Branch::positive, Branch::negative })
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double x = g.node(b, k);
      CHECK(std::abs(d.value(b, k).real() - c0 * std::sin(2.0 * pi * x) / (pi * x)) < 1e-12);
    }
  CHECK_THROWS_AS(uv1_estimate(ecf(std::vector<double>(3, 1.0), frequency_grid(1)), cfg, g), DomainError);
}

TEST_CASE("uv1_estimate is unbiased for the smoothed truth")
{
  // Nodes 0.25, 0.5, 1, 2, 4.
  const LogGrid g(std::log(0.25), std::log(4.0), 5);
  const double smoothed[] = { 0.459757833465149607, 0.389728613433900605, 0.120562668074012582,
                              0.0273642068527063830, -0.00426858226924399799 };
  EstimatorConfig cfg;
  cfg.l = 2;
  const auto k = KernelSpec::exp_trunc1d(4.0);
  const auto v0 = LevyDensity::tempered_halfgauss();
  const auto grid = GridSpec::centered(1, 1.0, 100);
  std::vector<double> sum(5, 0.0), sum2(5, 0.0);
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const auto f = simulate_field(k, v0, grid, derive_seed(555, r));
    const auto est = uv1_estimate(ecf(f.values, frequency_grid(2)), cfg, g);
    for (std::size_t i = 0; i < 5; ++i) {
      const double v = est.pos()[i].real();
      sum[i] += v;
      sum2[i] += v * v;
    }
  }
  for (std::size_t i = 0; i < 5; ++i) {
    const double mean = sum[i] / reps;
    const double sd = std::sqrt((sum2[i] - reps * mean * mean) / (reps - 1));
    CHECK(std::abs(mean - smoothed[i]) < 3.0 * sd / std::sqrt(static_cast<double>(reps)));
  }
}

TEST_CASE("uv0_plugin")
{
  const LogGrid g = LogGrid::default_grid();
  SUBCASE("identity multiplier")
  {
    const auto mu = make_multiplier(KernelSpec::simple({ { 1.0, 1.0 } }), u_id, { 0.0 });
    std::mt19937_64 rng(11);
    for (int i = 0; i < 3; ++i) {
      const auto w = SignedGridFunction::sample(g, testing::BumpMixture::random(rng)).real_part();
      EstimatorConfig cfg;
      cfg.a_n = 0.5;
      CHECK((w - uv0_plugin(w, mu, cfg)).abs_max() < 1e-6 * w.abs_max());
    }
  }
  SUBCASE("exact uv1 recovers uv0")
  {
    const auto op = catalog_operator(g);
    const auto truth = uv0_truth(g);
    const auto fine = op.apply(uv1_exact(g), 1e-6);
    CHECK(relative_l2(fine.value, truth) < 1e-2);
    CHECK(fine.diagnostics.kept_fraction > 0.0);
    CHECK(fine.diagnostics.kept_fraction <= 1.0);
    const auto coarse = op.apply(uv1_exact(g), 0.5);
    CHECK(l2_error(fine.value, truth, { 0.0 }) <= l2_error(coarse.value, truth, { 0.0 }));
    CHECK_THROWS_AS(op.apply(uv1_exact(g), 2.0 * op.mu_abs_max()), EmptySpectrum);
  }
  SUBCASE("zero input")
  {
    const auto op = catalog_operator(g);
    CHECK(op.apply(SignedGridFunction(g), 0.1).value.abs_max() == 0.0);
  }
  SUBCASE("cutoff must be resolved")
  {
    const auto mu = make_multiplier(KernelSpec::exp_trunc1d(4.0), u_id, { 0.0 });
    CHECK_THROWS_AS(uv0_plugin(SignedGridFunction(g), mu, EstimatorConfig{}), ConfigError);
  }
}

TEST_CASE("diagonalization")
{
  // Gw(x) = int u(f)/|f| w(x/f) ds = int_0^4 w(x e^s) ds for f = e^{-s}, u(x) = x.
  const LogGrid g(-12.0, 12.0, 2048);
  const auto kernel = KernelSpec::exp_trunc1d(4.0);
  const auto mu = make_multiplier(kernel, u_id, { 0.0 }).on_grid(g);
  std::mt19937_64 rng(21);
  for (int i = 0; i < 5; ++i) {
    const auto w = testing::BumpMixture::random(rng);
    const auto wg = SignedGridFunction::sample(g, w);
    const auto Gw = SignedGridFunction::sample(g, [&](double x) {
      const double re = quad::integrate([&](double s) { return w(x * std::exp(s)).real(); }, 0.0, 4.0, 1e-10);
      const double im = quad::integrate([&](double s) { return w(x * std::exp(s)).imag(); }, 0.0, 4.0, 1e-10);
      return cplx(re, im);
    });
    const WeightExponent c{ 0.0 };
    const auto lhs = mult_fourier(weight_map(Gw, c, WeightDirection::forward));
    const auto rhs_base = mult_fourier(weight_map(wg, c, WeightDirection::forward));
    std::vector<cplx> pos(g.size()), neg(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      pos[k] = mu.pos()[k] * rhs_base.pos()[k];
      neg[k] = mu.neg()[k] * rhs_base.neg()[k];
    }
    const SignedGridFunction rhs(g, std::move(pos), std::move(neg));
    CHECK(haar_norm(lhs - rhs) / haar_norm(rhs_base) < 1e-4);
  }
}

TEST_CASE("nonneg_project")
{
  const LogGrid g = LogGrid::default_grid();
  const auto truth = uv0_truth(g);
  CHECK((nonneg_project(truth, u_id) - truth).abs_max() == 0.0);
  CHECK(nonneg_project(cplx(-1.0) * truth, u_id).abs_max() == 0.0);
  // Signed weight: negative values are of the correct sign on the negative branch.
  const auto minus_one = SignedGridFunction::sample(g, [](double) { return cplx(-1.0); });
  const auto p = nonneg_project(minus_one, { 1.0, true });
  CHECK(p.pos()[0] == cplx(0.0));
  CHECK(p.neg()[0] == cplx(-1.0));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 0.3);
  for (int r = 0; r < 20; ++r) {
    std::vector<cplx> pos(g.size()), neg(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      pos[k] = truth.pos()[k].real() + nd(rng);
      neg[k] = nd(rng);
    }
    const SignedGridFunction e(g, std::move(pos), std::move(neg));
    const auto pe = nonneg_project(e, u_id);
    for (std::size_t k = 0; k < g.size(); k += 37) {
      CHECK(std::abs(pe.pos()[k] - truth.pos()[k]) <= std::abs(e.pos()[k] - truth.pos()[k]));
      CHECK(std::abs(pe.neg()[k] - truth.neg()[k]) <= std::abs(e.neg()[k] - truth.neg()[k]));
    }
    CHECK(l2_error(pe, truth, { 0.0 }) <= l2_error(e, truth, { 0.0 }));
  }
}

TEST_CASE("l2_error")
{
  const LogGrid g = LogGrid::default_grid();
  const auto truth = uv0_truth(g);
  CHECK(l2_error(truth, truth, { 0.0 }) == 0.0);
  CHECK(l2_error(SignedGridFunction(g), truth, { 0.0 }) == doctest::Approx(0.282094791773878143).epsilon(1e-6));
  CHECK(l2_error(cplx(2.0) * truth, truth, { 1.0 }) ==
        doctest::Approx(weighted_l2_norm(truth, { 1.0 })).epsilon(1e-14));
  CHECK_THROWS_AS(l2_error(SignedGridFunction(LogGrid(-1.0, 1.0, 5)), truth, { 0.0 }), GridMismatch);
}

TEST_CASE("cutoff rule")
{
  CHECK(cutoff_from_constant(0.8, 100.0, 0.5) == doctest::Approx(0.502973371873174177).epsilon(1e-12));
  CHECK(cutoff_from_constant(4.74, 1e4, 0.25) == doctest::Approx(1.01054541861071882).epsilon(1e-12));
  CHECK(std::abs(cutoff_from_constant(0.8, 100.0, 0.5) - 0.503) <= 0.001);
  CHECK(std::abs(cutoff_from_constant(4.74, 1e4, 0.25) - 1.011) <= 0.001);
  CHECK(cutoff_from_constant(constant_from_cutoff(0.37, 250.0, 0.5), 250.0, 0.5) ==
        doctest::Approx(0.37).epsilon(1e-14));
  EstimatorConfig cfg;
  CHECK_THROWS_AS(cfg.resolve_cutoff(100.0), ConfigError);
  cfg.C_k = 0.8;
  CHECK(cfg.resolve_cutoff(100.0) == doctest::Approx(0.502973371873174177).epsilon(1e-12));
  cfg.a_n = 0.5;
  CHECK(cfg.resolve_cutoff(100.0) == 0.5);
}

TEST_CASE("select_cutoff")
{
  // Decreasing, then flat at 0 from the fourth candidate on.
  const std::vector<double> s{ 0.1, 0.2, 0.3, 0.4, 0.5, 0.6 };
  CHECK(select_cutoff(s, std::vector<double>{ 3.0, 2.0, 1.0, 0.0, 0.0, 0.0 }) == 3);
  CHECK(select_cutoff(s, std::vector<double>{ 1.0, 0.5, 0.7, 0.5, 0.9, 1.0 }) == 1);
  CHECK_THROWS_AS(select_cutoff(s, std::vector<double>(6, 0.25)), DegenerateSearch);
  CHECK_THROWS_AS(select_cutoff(s, std::vector<double>(5, 0.25)), DomainError);

  const auto mu = make_multiplier(KernelSpec::exp_trunc1d(4.0), u_id, { 0.0 }).on_grid(LogGrid::default_grid());
  const auto c = cutoff_candidates(mu, 200);
  CHECK(c.size() == 200);
  CHECK(c.back() == mu.abs_max());
  CHECK(c.front() > 0.0);
  CHECK(std::is_sorted(c.begin(), c.end()));
}

TEST_CASE("calibrate_cutoff")
{
  const LogGrid g = LogGrid::default_grid();
  const auto op = catalog_operator(g);
  const auto truth = uv0_truth(g);
  // Exact input: smaller cutoffs keep more signal, so the optimum is in the lower part of the range.
  const std::vector<SignedGridFunction> exact{ uv1_exact(g) };
  const auto r = calibrate_cutoff(exact, op, truth, u_id, 100.0, 0.5, 40);
  CHECK(r.curve.size() == 40);
  CHECK(r.argmin < 0.5);
  CHECK(r.a_n == doctest::Approx(r.argmin).epsilon(1e-12));
  CHECK(r.C_k == doctest::Approx(constant_from_cutoff(r.argmin, 100.0, 0.5)).epsilon(1e-14));
  // The largest candidate keeps nothing and scores the zero estimate.
  CHECK(r.curve.back() == doctest::Approx(weighted_l2_norm(truth, { 0.0 })).epsilon(1e-12));
}

TEST_CASE("estimate pipeline")
{
  const LogGrid g = LogGrid::default_grid();
  const auto op = catalog_operator(g);
  const auto f = simulate_field(KernelSpec::exp_trunc1d(4.0), LevyDensity::tempered_halfgauss(),
                                GridSpec::centered(1, 1.0, 100), 8);
  EstimatorConfig cfg;
  cfg.l = 2;
  cfg.a_n = 0.5;
  const auto a = estimate(f.values, op, cfg);
  const auto b = estimate(f.values, op, cfg);
  CHECK((a.uv0_tilde - b.uv0_tilde).abs_max() == 0.0);
  CHECK((a.uv0_hat - b.uv0_hat).abs_max() == 0.0);
  for (auto br : { Branch::positive, Branch::negative })
    for (std::size_t k = 0; k < g.size(); ++k)
      CHECK(a.uv0_tilde.value(br, k).real() * cfg.u(g.node(br, k)) >= 0.0);
  CHECK(std::isfinite(l2_error(a.uv0_tilde, uv0_truth(g), { 0.0 })));
  CHECK(a.diagnostics.a_n == 0.5);

  const auto truth = uv0_truth(g);
  const auto csv = a.to_csv(&truth);
  CHECK(csv.rfind("x,uv1_hat,uv0_hat,uv0_tilde,uv0_true\n", 0) == 0);
  std::size_t lines = 0;
  for (char ch : csv)
    lines += ch == '\n';
  CHECK(lines == 2 * g.size() + 1);
}

TEST_CASE("decay diagnostic")
{
  const LogGrid g = LogGrid::default_grid();
  SUBCASE("exp_trunc field tends to theta")
  {
    const auto uv1 = uv1_exact(g);
    CHECK(decay_integral(uv1, 0.0) == 0.0);
    const std::pair<double, double> oracle[] = { { 1.0, 0.142213666809790979 },  { 10.0, 1.36438957771810059 },
                                                 { 100.0, 3.02917321468431444 }, { 1e3, 3.71134938188732903 },
                                                 { 1e4, 3.90955048313679171 },   { 1e5, 3.97142427371333164 } };
    for (auto [x, v] : oracle) {
      CHECK(decay_integral(uv1, x) == doctest::Approx(v).epsilon(1e-4));
      CHECK(decay_integral(uv1, -x) == decay_integral(uv1, x));
    }
    const auto d = decay_diagnostic(uv1, 1e5);
    CHECK(d.I.front() == 0.0);
    CHECK(std::abs(d.I.back() - 4.0) < 0.05);
    CHECK(d.bounded);
  }
  SUBCASE("Epanechnikov field is bounded")
  {
    const auto uv1 = weighted_density(LevyDensity::v1_epanechnikov(0.5, 1.0), u_id, g);
    CHECK(decay_integral(uv1, 10.0) == doctest::Approx(1.34257734444967342).epsilon(1e-4));
    CHECK(decay_integral(uv1, 100.0) == doctest::Approx(2.51953266657224723).epsilon(1e-4));
    CHECK(decay_integral(uv1, 1000.0) == doctest::Approx(2.94309506328077045).epsilon(1e-4));
    const auto d = decay_diagnostic(uv1, 1e5);
    CHECK(d.bounded);
    CHECK(std::abs(d.fitted_b) < 0.05);
  }
  SUBCASE("logarithmic growth is detected")
  {
    // uv1 = e^{-x} on x > 0: I(X) = log(1 + X^2) / 2.
    const auto uv1 = SignedGridFunction::sample(g, [](double x) { return cplx(x > 0 ? std::exp(-x) : 0.0); });
    for (double x : { 0.5, 3.0, 40.0, 1e3 })
      CHECK(decay_integral(uv1, x) == doctest::Approx(0.5 * std::log1p(x * x)).epsilon(1e-5));
    const auto d = decay_diagnostic(uv1, 1e5);
    CHECK_FALSE(d.bounded);
    CHECK(d.fitted_b == doctest::Approx(1.0).epsilon(0.05));
  }
}
