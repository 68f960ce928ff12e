#pragma once

#include "levydecon/levy_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace levydecon {

/// Lattice {delta * (origin + i)}: row-major, last axis fastest.
struct GridSpec
{
  int dimension = 1;
  double delta = 1.0;
  std::vector<std::size_t> shape;
  std::vector<long long> origin;

  /// n points per axis with indices -n/2, ..., n - 1 - n/2.
  static GridSpec centered(int dimension, double delta, std::size_t n_per_axis);

  void validate() const;
  std::size_t size() const;
  /// Lattice indices of flat index i.
  std::vector<long long> indices(std::size_t i) const;
};

struct FieldSample
{
  GridSpec grid;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::string kernel;

  std::string to_csv() const;
};

struct SimulationOptions
{
  /// Required for exp1d / power1d: the kernel is cut off outside this radius.
  std::optional<double> truncation_radius;
};

/// Seed of replication i: splitmix64 finalizer applied to
/// base + (i + 1) * 0x9E3779B97F4A7C15.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t i);

/// Exact compound-Poisson shot noise X(delta j) = sum_i f(delta j - s_i) J_i.
/// Jump locations are Poisson with intensity lambda0 = int v0 on the
/// observation window enlarged by the kernel support; marks have density
/// v0 / lambda0 (Gamma(1/2, 1) for tempered_halfgauss). Engine: mt19937_64 with
/// Boost.Random distributions, seeded with `seed`.
FieldSample simulate_field(const KernelSpec& kernel, const LevyDensity& v0, const GridSpec& grid, std::uint64_t seed,
                           const SimulationOptions& opts = {});

/// k samples with seeds derive_seed(base_seed, i), i = 0..k-1.
std::vector<FieldSample> replicate(const KernelSpec& kernel, const LevyDensity& v0, const GridSpec& grid,
                                   std::size_t k, std::uint64_t base_seed, const SimulationOptions& opts = {});

} // namespace levydecon
