#include "levydecon/simulate.hpp"

#include "levydecon/errors.hpp"
#include "levydecon/io.hpp"

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace levydecon {

GridSpec GridSpec::centered(int dimension, double delta, std::size_t n_per_axis)
{
  GridSpec g;
  g.dimension = dimension;
  g.delta = delta;
  g.shape.assign(static_cast<std::size_t>(dimension), n_per_axis);
  g.origin.assign(static_cast<std::size_t>(dimension), -static_cast<long long>(n_per_axis / 2));
  g.validate();
  return g;
}

void GridSpec::validate() const
{
  if (dimension != 1 && dimension != 2)
    throw DomainError("GridSpec: dimension must be 1 or 2");
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw DomainError("GridSpec: delta must be positive");
  if (shape.size() != static_cast<std::size_t>(dimension) || origin.size() != shape.size())
    throw DomainError("GridSpec: shape and origin need one entry per axis");
  for (auto s : shape)
    if (s < 1)
      throw DomainError("GridSpec: shape entries must be >= 1");
}

std::size_t GridSpec::size() const
{
  std::size_t n = 1;
  for (auto s : shape)
    n *= s;
  return n;
}

std::vector<long long> GridSpec::indices(std::size_t i) const
{
  std::vector<long long> j(shape.size());
  for (std::size_t a = shape.size(); a-- > 0;) {
    j[a] = origin[a] + static_cast<long long>(i % shape[a]);
    i /= shape[a];
  }
  return j;
}

std::string FieldSample::to_csv() const
{
  std::ostringstream os;
  os << "# seed=" << seed << " kernel=" << kernel << " delta=" << io::fmt17(grid.delta) << " shape=";
  for (std::size_t a = 0; a < grid.shape.size(); ++a)
    os << (a ? "x" : "") << grid.shape[a];
  os << "\n";
  for (std::size_t a = 0; a < grid.shape.size(); ++a)
    os << "j" << (a + 1) << ",";
  os << "value\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (auto j : grid.indices(i))
      os << j << ",";
    os << io::fmt17(values[i]) << "\n";
  }
  return os.str();
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t i)
{
  std::uint64_t z = base + (i + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

using Engine = boost::random::mt19937_64;

// Jump-mark law v0 / lambda0.
struct MarkSampler
{
  double lambda0 = 0.0;
  std::function<double(Engine&)> draw;
};

MarkSampler mark_sampler(const LevyDensity& v0)
{
  if (std::holds_alternative<TemperedHalfGauss>(v0.variant())) {
    // (pi x)^{-1/2} e^{-x} = x^{-1/2} e^{-x} / Gamma(1/2): unit mass, Gamma(1/2, 1) law.
    auto dist = std::make_shared<boost::random::gamma_distribution<double>>(0.5, 1.0);
    return { 1.0, [dist](Engine& e) { return (*dist)(e); } };
  }
  // Tabulate on the default grid and invert the CDF, uniform in log|x| within
  // a cell.
  const LogGrid g = LogGrid::default_grid();
  const auto tab = v0.sample(g);
  std::vector<double> cdf;
  std::vector<double> node; // signed log position: +k+1 positive, -(k+1) negative
  double total = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double w = g.magnitude(k) * g.trapezoid_weight(k);
    for (int b = 0; b < 2; ++b) {
      const double v = (b == 0 ? tab.pos()[k] : tab.neg()[k]).real();
      if (v < 0.0)
        throw DomainError("simulate_field: negative Levy density");
      if (v == 0.0)
        continue;
      total += v * w;
      cdf.push_back(total);
      node.push_back(b == 0 ? static_cast<double>(k + 1) : -static_cast<double>(k + 1));
    }
  }
  if (total == 0.0)
    return { 0.0, nullptr };
  const double h = g.spacing(), t0 = g.t_min();
  return { total, [cdf, node, total, h, t0](Engine& e) {
            boost::random::uniform_01<double> u01;
            const double r = u01(e) * total;
            const std::size_t i =
              std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin(), cdf.size() - 1);
            const double k = std::abs(node[i]) - 1.0;
            const double t = t0 + h * (k + u01(e) - 0.5);
            return node[i] > 0 ? std::exp(t) : -std::exp(t);
          } };
}

} // namespace

FieldSample simulate_field(const KernelSpec& kernel, const LevyDensity& v0, const GridSpec& grid, std::uint64_t seed,
                           const SimulationOptions& opts)
{
  grid.validate();
  if (kernel.dimension() != grid.dimension)
    throw DomainError("simulate_field: kernel and grid dimensions differ");
  const SupportBox box = kernel.support_box(opts.truncation_radius);
  const std::size_t d = static_cast<std::size_t>(grid.dimension);

  FieldSample out{ grid, std::vector<double>(grid.size(), 0.0), seed, kernel.name() };
  const MarkSampler marks = mark_sampler(v0);
  if (marks.lambda0 == 0.0)
    return out;

  // f(t - s) != 0 needs s in [t - hi, t - lo].
  std::vector<double> wlo(d), whi(d);
  double volume = 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    const double tmin = grid.delta * static_cast<double>(grid.origin[a]);
    const double tmax = grid.delta * static_cast<double>(grid.origin[a] + static_cast<long long>(grid.shape[a]) - 1);
    wlo[a] = tmin - box[a].second;
    whi[a] = tmax - box[a].first;
    volume *= whi[a] - wlo[a];
  }

  Engine eng(seed);
  boost::random::poisson_distribution<long long, double> count(marks.lambda0 * volume);
  boost::random::uniform_01<double> u01;
  const long long n_jumps = count(eng);

  std::vector<double> s(d), t(d);
  for (long long i = 0; i < n_jumps; ++i) {
    for (std::size_t a = 0; a < d; ++a)
      s[a] = wlo[a] + (whi[a] - wlo[a]) * u01(eng);
    const double jump = marks.draw(eng);
    // Lattice index range hit by this jump, per axis.
    std::vector<long long> jlo(d), jhi(d);
    bool empty = false;
    for (std::size_t a = 0; a < d; ++a) {
      const long long first = grid.origin[a];
      const long long last = first + static_cast<long long>(grid.shape[a]) - 1;
      jlo[a] = std::max(first, static_cast<long long>(std::ceil((s[a] + box[a].first) / grid.delta)));
      jhi[a] = std::min(last, static_cast<long long>(std::floor((s[a] + box[a].second) / grid.delta)));
      empty = empty || jlo[a] > jhi[a];
    }
    if (empty)
      continue;
    if (d == 1) {
      for (long long j = jlo[0]; j <= jhi[0]; ++j) {
        t[0] = grid.delta * static_cast<double>(j) - s[0];
        out.values[static_cast<std::size_t>(j - grid.origin[0])] += kernel(t) * jump;
      }
    } else {
      for (long long j0 = jlo[0]; j0 <= jhi[0]; ++j0) {
        t[0] = grid.delta * static_cast<double>(j0) - s[0];
        const std::size_t row = static_cast<std::size_t>(j0 - grid.origin[0]) * grid.shape[1];
        for (long long j1 = jlo[1]; j1 <= jhi[1]; ++j1) {
          t[1] = grid.delta * static_cast<double>(j1) - s[1];
          out.values[row + static_cast<std::size_t>(j1 - grid.origin[1])] += kernel(t) * jump;
        }
      }
    }
  }
  return out;
}

std::vector<FieldSample> replicate(const KernelSpec& kernel, const LevyDensity& v0, const GridSpec& grid,
                                   std::size_t k, std::uint64_t base_seed, const SimulationOptions& opts)
{
  if (k < 1)
    throw DomainError("replicate: k must be >= 1");
  std::vector<FieldSample> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    out.push_back(simulate_field(kernel, v0, grid, derive_seed(base_seed, i), opts));
  return out;
}

} // namespace levydecon
