// levydecon: simulate fields, estimate Levy densities, run studies and
// inspect multipliers from a JSON config.

#include "levydecon/errors.hpp"
#include "levydecon/io.hpp"
#include "levydecon/studyctl.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace levydecon;
using nlohmann::json;

namespace {

struct Common
{
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool full = false;
};

void add_common(CLI::App* cmd, Common& c)
{
  cmd->add_option("--config", c.config, "JSON config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory (default: config output)");
  cmd->add_option("--seed", c.seed, "Override the config base seed");
  cmd->add_flag("--full", c.full, "2D only: 100x100 grid and 100 replications");
}

StudyConfig load(const Common& c)
{
  StudyConfig cfg = load_study_config(c.config);
  if (c.seed)
    cfg.base_seed = *c.seed;
  if (c.full) {
    if (cfg.grid.dimension != 2)
      throw ConfigError("--full applies to two-dimensional configs only");
    cfg.grid = GridSpec::centered(2, cfg.grid.delta, 100);
    cfg.replications = 100;
  }
  if (!c.out.empty())
    cfg.output = c.out;
  cfg.validate();
  return cfg;
}

// Values of a field CSV: '#' lines and the header are skipped, the last column is read.
std::vector<double> read_field_values(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read data file " + path);
  std::vector<double> v;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    if (header) {
      header = false;
      continue;
    }
    const auto pos = line.rfind(',');
    try {
      v.push_back(std::stod(pos == std::string::npos ? line : line.substr(pos + 1)));
    } catch (const std::exception&) {
      throw ConfigError("data file " + path + ": bad value in line '" + line + "'");
    }
  }
  if (v.empty())
    throw ConfigError("data file " + path + " has no values");
  return v;
}

json diagnostics_json(const PluginDiagnostics& d)
{
  return { { "a_n", d.a_n },
           { "kept_fraction", d.kept_fraction },
           { "leakage_forward", d.leakage_forward },
           { "leakage_inverse", d.leakage_inverse },
           { "imag_residue", d.imag_residue } };
}

void cmd_simulate(const Common& c)
{
  const auto cfg = load(c);
  const auto v0 = cfg.v0_density();
  for (std::size_t i = 0; i < cfg.replications; ++i) {
    const auto f = simulate_field(cfg.kernel, v0, cfg.grid, derive_seed(cfg.base_seed, i), cfg.simulation);
    io::write_text(cfg.output / ("field_" + std::to_string(i) + ".csv"), f.to_csv());
  }
}

void cmd_estimate(const Common& c, const std::string& data)
{
  const auto cfg = load(c);
  const LogGrid lg = cfg.log_grid();
  const auto v0 = cfg.v0_density();
  const PluginOperator op(make_multiplier(cfg.kernel, cfg.estimator.u, cfg.estimator.c), lg, cfg.estimator.c,
                          cfg.estimator.transform);
  const auto truth = weighted_density(v0, cfg.estimator.u, lg);
  EstimatorConfig est = cfg.estimator;
  est.l = cfg.plot_l.value_or(cfg.l_values.front());
  if (!est.a_n && !est.C_k)
    est.C_k = run_calibration(cfg, op, truth).C_k;

  std::vector<double> values;
  if (!data.empty()) {
    values = read_field_values(data);
  } else {
    const auto f = simulate_field(cfg.kernel, v0, cfg.grid, derive_seed(cfg.base_seed, 0), cfg.simulation);
    io::write_text(cfg.output / "trajectory.csv", f.to_csv());
    values = f.values;
  }
  const auto r = estimate(values, op, est);
  io::write_text(cfg.output / "estimate.csv", r.to_csv(&truth));
  json j = { { "n", values.size() },
             { "l", est.l },
             { "diagnostics", diagnostics_json(r.diagnostics) },
             { "l2_error_hat", l2_error(r.uv0_hat, truth, { 0.0 }) },
             { "l2_error_tilde", l2_error(r.uv0_tilde, truth, { 0.0 }) },
             { "log_grid", { { "t_min", cfg.log_t_min }, { "t_max", cfg.log_t_max }, { "points", cfg.log_points } } },
             { "config_hash", config_hash(cfg) } };
  io::write_text(cfg.output / "estimate.json", j.dump(2) + "\n");
}

void cmd_study(const Common& c)
{
  const auto cfg = load(c);
  const auto r = run_study(cfg);
  write_study(r, cfg, cfg.output);
  std::cout << r.summary_csv();
}

void cmd_multiplier(const Common& c)
{
  const auto cfg = load(c);
  const auto m = make_multiplier(cfg.kernel, cfg.estimator.u, cfg.estimator.c);
  const LogGrid lg = cfg.log_grid();
  std::ostringstream os;
  os << "x,re_m_plus,im_m_plus,re_m_minus,im_m_minus\n";
  for (std::size_t k = 0; k < lg.size(); ++k) {
    const double x = lg.log_coord(k);
    const cplx p = m.m_plus(x), q = m.m_minus(x);
    os << io::fmt17(x) << ',' << io::fmt17(p.real()) << ',' << io::fmt17(p.imag()) << ',' << io::fmt17(q.real())
       << ',' << io::fmt17(q.imag()) << "\n";
  }
  io::write_text(cfg.output / "multiplier.csv", os.str());

  const auto inj = check_injectivity(m);
  const auto ub = check_uniform_bound(m);
  json j = { { "kernel", cfg.kernel.name() },
             { "integrability_constant", m.integrability_constant() },
             { "injectivity",
               { { "ae_nonvanishing", inj.ae_nonvanishing },
                 { "min_abs", inj.min_abs },
                 { "zero_locations", inj.zero_locations },
                 { "heuristic", inj.heuristic } } },
             { "uniform_bound",
               { { "bounded_below", ub.bounded_below }, { "inf_abs", ub.inf_abs }, { "sup_abs", ub.sup_abs } } } };
  j["uniform_bound"]["tail_limit"] = ub.tail_limit ? json(*ub.tail_limit) : json();
  try {
    const auto lb = fit_lower_bound(m, 1.0);
    j["lower_bound"] = { { "gamma", lb.gamma },
                         { "alpha1", lb.alpha1 },
                         { "kind", lb.kind == LowerBoundCertificate::Kind::analytic ? "analytic" : "fitted" } };
    j["lower_bound"]["analytic_gamma"] = lb.analytic_gamma ? json(*lb.analytic_gamma) : json();
  } catch (const DegenerateBound& e) {
    j["lower_bound"] = { { "error", e.what() } };
  }
  io::write_text(cfg.output / "multiplier.json", j.dump(2) + "\n");
}

void cmd_diagnose(const Common& c, double x_max)
{
  const auto cfg = load(c);
  const LogGrid lg = cfg.log_grid();
  const auto v1 = v1_from_v0(cfg.v0_density(), cfg.kernel, lg);
  const auto uv1 = weighted_density(v1, cfg.estimator.u, lg);
  const auto d = decay_diagnostic(uv1, x_max);
  std::ostringstream os;
  os << "x,I\n";
  for (std::size_t i = 0; i < d.x.size(); ++i)
    os << io::fmt17(d.x[i]) << ',' << io::fmt17(d.I[i]) << "\n";
  io::write_text(cfg.output / "decay.csv", os.str());
  const json j = { { "density", v1.name() },
                   { "fitted_b", d.fitted_b },
                   { "b_standard_error", d.b_standard_error },
                   { "bounded", d.bounded },
                   { "x_max", x_max } };
  io::write_text(cfg.output / "decay.json", j.dump(2) + "\n");
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Nonparametric Levy density estimation for moving average fields" };
  app.require_subcommand(1);
  Common common;
  std::string data;
  double x_max = 1e5;

  auto* sim = app.add_subcommand("simulate", "Simulate fields: field_<i>.csv per replication");
  add_common(sim, common);
  auto* est = app.add_subcommand("estimate", "Estimate uv0 from one field");
  add_common(est, common);
  est->add_option("--data", data, "Field CSV to estimate from (default: simulate one)")->check(CLI::ExistingFile);
  auto* study = app.add_subcommand("study", "Monte Carlo study with summary tables");
  add_common(study, common);
  auto* mult = app.add_subcommand("multiplier", "Multiplier values and solvability checks");
  add_common(mult, common);
  auto* diag = app.add_subcommand("diagnose", "Decay diagnostic of the exact uv1");
  add_common(diag, common);
  diag->add_option("--x-max", x_max, "Largest frequency of the decay curve")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim)
      cmd_simulate(common);
    else if (*est)
      cmd_estimate(common, data);
    else if (*study)
      cmd_study(common);
    else if (*mult)
      cmd_multiplier(common);
    else if (*diag)
      cmd_diagnose(common, x_max);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
