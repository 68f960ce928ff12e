#pragma once

#include "levydecon/estimate.hpp"
#include "levydecon/simulate.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace levydecon {

inline constexpr const char* code_version = "0.1.0";

struct CalibrationSpec
{
  std::size_t k = 10;
  /// Frequency cutoff used for the calibration replicates.
  int l = 2;
  std::size_t candidates = 200;
};

struct StudyConfig
{
  KernelSpec kernel = KernelSpec::exp_trunc1d(4.0);
  /// Catalog id of v0: "tempered_halfgauss" or "zero".
  std::string v0 = "tempered_halfgauss";
  SimulationOptions simulation;
  GridSpec grid = GridSpec::centered(1, 1.0, 100);
  /// Shared estimator settings; `l` is replaced by each entry of `l_values`.
  EstimatorConfig estimator;
  std::vector<int> l_values{ 1, 2, 3 };
  /// Run a cutoff calibration before the study when set and no a_n / C_k is given.
  std::optional<CalibrationSpec> calibration;
  double log_t_min = -12.0;
  double log_t_max = 12.0;
  std::size_t log_points = 4096;
  std::size_t replications = 100;
  std::uint64_t base_seed = 1;
  /// 0 selects the default: LEVYDECON_THREADS, else the hardware concurrency.
  std::size_t threads = 0;
  /// l of the plotted estimate; defaults to the first entry of l_values.
  std::optional<int> plot_l;
  std::filesystem::path output = "out";

  void validate() const;
  LogGrid log_grid() const;
  LevyDensity v0_density() const;
};

/// Parses a config document; unknown fields and invalid values raise ConfigError.
StudyConfig parse_study_config(const nlohmann::json& j);
StudyConfig load_study_config(const std::filesystem::path& path);
/// Canonical JSON form (every field, defaults filled in).
nlohmann::json to_json(const StudyConfig& cfg);
/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const StudyConfig& cfg);

/// Built-in settings: "1d" (theta=4, delta=1, n=100, a_n=0.5) and "2d"
/// (Epanechnikov tau=1/2, kappa=1, delta=0.1, a_n=1.01, l=2; 50x50 with 20
/// replications, or 100x100 with 100 when full is set).
StudyConfig preset_config(const std::string& name, bool full = false);

/// Worker count for cfg.threads == 0.
std::size_t default_thread_count();

struct ReplicationRow
{
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  int l = 0;
  std::string estimator; // "hat" or "tilde"
  double mse = 0.0;
  double time_s = 0.0;
  double kept_fraction = 0.0;
  bool leakage = false;
};

struct SummaryRow
{
  std::string estimator;
  int l = 0;
  double mean_mse = 0.0;
  double sd_mse = 0.0;
  double mean_time_s = 0.0;
  double sd_time_s = 0.0;
};

struct StudyResult
{
  std::vector<SummaryRow> summary;
  std::vector<ReplicationRow> replications;
  double a_n = 0.0;
  std::optional<CalibrationResult> calibration;
  std::string config_hash;
  std::uint64_t base_seed = 0;
  /// Trajectory and estimates of replication 0 at plot_l.
  std::optional<FieldSample> trajectory;
  std::optional<EstimateResult> example;
  std::optional<SignedGridFunction> truth;

  std::string summary_csv() const;
  std::string replications_csv() const;
};

/// Runs every replication (simulate, estimate uv1 per l, plug in, project,
/// score against u v0) on a worker pool; errors are rethrown tagged with the
/// replication index. Results do not depend on the thread count.
StudyResult run_study(const StudyConfig& cfg);

/// Calibration on k replicates with seeds independent of the study seeds.
CalibrationResult run_calibration(const StudyConfig& cfg, const PluginOperator& op, const SignedGridFunction& truth);

/// Writes trajectory.csv, estimate.csv and summary.csv into `dir`; absent
/// parts give header-only files.
void emit_plotdata(const StudyResult& result, const std::filesystem::path& dir);

/// emit_plotdata plus replications.csv and study.json.
void write_study(const StudyResult& result, const StudyConfig& cfg, const std::filesystem::path& dir);

} // namespace levydecon
