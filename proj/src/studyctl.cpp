#include "levydecon/studyctl.hpp"

#include "levydecon/errors.hpp"
#include "levydecon/io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace levydecon {

using nlohmann::json;

namespace {

// Salt separating calibration seeds from study seeds.
constexpr std::uint64_t calibration_salt = 0xC0FFEE5EEDULL;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
  if (!j.is_object())
    throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown field '" + it.key() + "'");
}

template<class T>
T get(const json& j, const std::string& key, const std::string& where)
{
  if (!j.contains(key))
    throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template<class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where)
{
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

KernelSpec parse_kernel(const json& j)
{
  const std::string w = "model.kernel";
  if (!j.is_object())
    throw ConfigError(w + ": expected an object");
  const auto type = get<std::string>(j, "type", w);
  try {
    if (type == "exp_trunc1d" || type == "exp1d" || type == "power1d") {
      reject_unknown(j, { "type", "theta" }, w);
      const double th = get<double>(j, "theta", w);
      return type == "exp_trunc1d" ? KernelSpec::exp_trunc1d(th)
             : type == "exp1d"     ? KernelSpec::exp1d(th)
                                   : KernelSpec::power1d(th);
    }
    if (type == "epanechnikov2d") {
      reject_unknown(j, { "type", "tau", "kappa" }, w);
      return KernelSpec::epanechnikov2d(get<double>(j, "tau", w), get<double>(j, "kappa", w));
    }
    if (type == "simple") {
      reject_unknown(j, { "type", "steps" }, w);
      std::vector<SimpleStep> steps;
      for (const auto& s : get<json>(j, "steps", w)) {
        reject_unknown(s, { "value", "measure" }, w + ".steps");
        steps.push_back({ get<double>(s, "value", w), get<double>(s, "measure", w) });
      }
      return KernelSpec::simple(std::move(steps));
    }
  } catch (const NumericalError& e) {
    throw ConfigError(w + ": " + e.what());
  }
  throw ConfigError(w + ": unknown kernel type '" + type + "'");
}

json kernel_json(const KernelSpec& k)
{
  return std::visit(
    [](const auto& v) -> json {
      using T = std::decay_t<decltype(v)>;
      if constexpr (std::is_same_v<T, ExpTrunc1d>)
        return { { "type", "exp_trunc1d" }, { "theta", v.theta } };
      else if constexpr (std::is_same_v<T, Exp1d>)
        return { { "type", "exp1d" }, { "theta", v.theta } };
      else if constexpr (std::is_same_v<T, Power1d>)
        return { { "type", "power1d" }, { "theta", v.theta } };
      else if constexpr (std::is_same_v<T, Epanechnikov2d>)
        return { { "type", "epanechnikov2d" }, { "tau", v.tau }, { "kappa", v.kappa } };
      else if constexpr (std::is_same_v<T, Simple>) {
        json steps = json::array();
        for (const auto& s : v.steps)
          steps.push_back({ { "value", s.value }, { "measure", s.measure } });
        return { { "type", "simple" }, { "steps", steps } };
      } else
        throw ConfigError("sampled kernels cannot be serialized");
    },
    k.variant());
}

double mean_of(const std::vector<double>& v)
{
  double s = 0.0;
  for (double x : v)
    s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v)
{
  if (v.size() < 2)
    return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v)
    s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Runs body(i) for i in [0, n) on `threads` workers; the first failure (lowest
// index) is rethrown tagged with its index.
template<class Body>
void parallel_for(std::size_t n, std::size_t threads, Body body)
{
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{ 0 };
  std::atomic<bool> failed{ false };
  auto worker = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  const std::size_t t = std::max<std::size_t>(1, std::min(threads, n));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < t; ++k)
    pool.emplace_back(worker);
  worker();
  for (auto& th : pool)
    th.join();
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i])
      continue;
    const std::string tag = "replication " + std::to_string(i) + ": ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ConfigError& e) {
      throw ConfigError(tag + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError(tag + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(tag + e.what());
    }
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

void StudyConfig::validate() const
{
  grid.validate();
  if (kernel.dimension() != grid.dimension)
    throw ConfigError("config: kernel and grid dimensions differ");
  estimator.validate();
  if (l_values.empty())
    throw ConfigError("config: estimator.l needs at least one value");
  for (int l : l_values)
    if (l < 1)
      throw ConfigError("config: every l must be >= 1");
  if (replications < 1)
    throw ConfigError("config: replications must be >= 1");
  if (!(log_t_max > log_t_min) || log_points < 8)
    throw ConfigError("config: log grid needs t_max > t_min and at least 8 points");
  if (!estimator.a_n && !estimator.C_k && !calibration)
    throw ConfigError("config: set estimator.a_n, estimator.C_k or calibration");
  if (calibration && (calibration->k < 1 || calibration->l < 1 || calibration->candidates < 2))
    throw ConfigError("config: calibration needs k >= 1, l >= 1 and candidates >= 2");
  if (plot_l && std::find(l_values.begin(), l_values.end(), *plot_l) == l_values.end())
    throw ConfigError("config: plot_l must be one of the l values");
  if (v0 != "tempered_halfgauss" && v0 != "zero")
    throw ConfigError("config: unknown v0 '" + v0 + "'");
  try {
    kernel.support_box(simulation.truncation_radius);
  } catch (const NumericalError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

LogGrid StudyConfig::log_grid() const { return LogGrid(log_t_min, log_t_max, log_points); }

LevyDensity StudyConfig::v0_density() const
{
  return v0 == "zero" ? LevyDensity::zero() : LevyDensity::tempered_halfgauss();
}

StudyConfig parse_study_config(const json& j)
{
  reject_unknown(j, { "model", "grid", "estimator", "calibration", "log_grid", "replications", "base_seed",
                      "threads", "plot_l", "output" },
                 "config");
  StudyConfig c;

  const auto& m = get<json>(j, "model", "config");
  reject_unknown(m, { "kernel", "v0", "truncation_radius" }, "model");
  c.kernel = parse_kernel(get<json>(m, "kernel", "model"));
  c.v0 = get_or<std::string>(m, "v0", c.v0, "model");
  if (m.contains("truncation_radius") && !m.at("truncation_radius").is_null())
    c.simulation.truncation_radius = get<double>(m, "truncation_radius", "model");

  const auto& g = get<json>(j, "grid", "config");
  reject_unknown(g, { "dimension", "delta", "n_per_axis", "shape", "origin" }, "grid");
  const int dim = get<int>(g, "dimension", "grid");
  const double delta = get<double>(g, "delta", "grid");
  try {
    if (g.contains("n_per_axis")) {
      if (g.contains("shape") || g.contains("origin"))
        throw ConfigError("grid: give either n_per_axis or shape/origin");
      c.grid = GridSpec::centered(dim, delta, get<std::size_t>(g, "n_per_axis", "grid"));
    } else {
      c.grid.dimension = dim;
      c.grid.delta = delta;
      c.grid.shape = get<std::vector<std::size_t>>(g, "shape", "grid");
      c.grid.origin = get<std::vector<long long>>(g, "origin", "grid");
    }
    c.grid.validate();
  } catch (const NumericalError& e) {
    throw ConfigError(e.what());
  }

  const auto& e = get<json>(j, "estimator", "config");
  reject_unknown(e, { "l", "c", "u", "a_n", "a", "C_k", "nodes_per_pi", "leakage_tolerance" }, "estimator");
  if (e.contains("l")) {
    c.l_values = e.at("l").is_array() ? get<std::vector<int>>(e, "l", "estimator")
                                      : std::vector<int>{ get<int>(e, "l", "estimator") };
  }
  c.estimator.c.c = get_or<double>(e, "c", 0.0, "estimator");
  if (e.contains("u")) {
    const auto& u = e.at("u");
    reject_unknown(u, { "beta", "sign" }, "estimator.u");
    c.estimator.u.beta = get_or<double>(u, "beta", 1.0, "estimator.u");
    c.estimator.u.sign = get_or<bool>(u, "sign", true, "estimator.u");
  }
  if (e.contains("a_n") && !e.at("a_n").is_null())
    c.estimator.a_n = get<double>(e, "a_n", "estimator");
  if (e.contains("C_k") && !e.at("C_k").is_null())
    c.estimator.C_k = get<double>(e, "C_k", "estimator");
  c.estimator.a = get_or<double>(e, "a", dim == 1 ? 0.5 : 0.25, "estimator");
  c.estimator.nodes_per_pi = get_or<std::size_t>(e, "nodes_per_pi", 128, "estimator");
  c.estimator.transform.leakage_tolerance = get_or<double>(e, "leakage_tolerance", 1e-6, "estimator");

  if (j.contains("calibration") && !j.at("calibration").is_null()) {
    const auto& k = j.at("calibration");
    reject_unknown(k, { "k", "l", "candidates" }, "calibration");
    CalibrationSpec s;
    s.k = get_or<std::size_t>(k, "k", s.k, "calibration");
    s.l = get_or<int>(k, "l", s.l, "calibration");
    s.candidates = get_or<std::size_t>(k, "candidates", s.candidates, "calibration");
    c.calibration = s;
  }
  if (j.contains("log_grid")) {
    const auto& lg = j.at("log_grid");
    reject_unknown(lg, { "t_min", "t_max", "points" }, "log_grid");
    c.log_t_min = get_or<double>(lg, "t_min", c.log_t_min, "log_grid");
    c.log_t_max = get_or<double>(lg, "t_max", c.log_t_max, "log_grid");
    c.log_points = get_or<std::size_t>(lg, "points", c.log_points, "log_grid");
  }
  c.replications = get_or<std::size_t>(j, "replications", c.replications, "config");
  c.base_seed = get_or<std::uint64_t>(j, "base_seed", c.base_seed, "config");
  if (j.contains("threads")) {
    const auto& t = j.at("threads");
    if (t.is_string()) {
      if (t.get<std::string>() != "auto")
        throw ConfigError("config.threads: expected a positive integer or \"auto\"");
    } else {
      const auto n = get<long long>(j, "threads", "config");
      if (n < 1)
        throw ConfigError("config.threads: must be >= 1");
      c.threads = static_cast<std::size_t>(n);
    }
  }
  if (j.contains("plot_l") && !j.at("plot_l").is_null())
    c.plot_l = get<int>(j, "plot_l", "config");
  c.output = get_or<std::string>(j, "output", c.output.string(), "config");
  c.validate();
  return c;
}

StudyConfig load_study_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_study_config(j);
}

json to_json(const StudyConfig& c)
{
  json j;
  j["model"] = { { "kernel", kernel_json(c.kernel) }, { "v0", c.v0 } };
  j["model"]["truncation_radius"] = c.simulation.truncation_radius ? json(*c.simulation.truncation_radius) : json();
  j["grid"] = { { "dimension", c.grid.dimension },
                { "delta", c.grid.delta },
                { "shape", c.grid.shape },
                { "origin", c.grid.origin } };
  json e = { { "l", c.l_values },
             { "c", c.estimator.c.c },
             { "u", { { "beta", c.estimator.u.beta }, { "sign", c.estimator.u.sign } } },
             { "a", c.estimator.a },
             { "nodes_per_pi", c.estimator.nodes_per_pi },
             { "leakage_tolerance", c.estimator.transform.leakage_tolerance } };
  e["a_n"] = c.estimator.a_n ? json(*c.estimator.a_n) : json();
  e["C_k"] = c.estimator.C_k ? json(*c.estimator.C_k) : json();
  j["estimator"] = e;
  j["calibration"] = c.calibration ? json{ { "k", c.calibration->k },
                                           { "l", c.calibration->l },
                                           { "candidates", c.calibration->candidates } }
                                   : json();
  j["log_grid"] = { { "t_min", c.log_t_min }, { "t_max", c.log_t_max }, { "points", c.log_points } };
  j["replications"] = c.replications;
  j["base_seed"] = c.base_seed;
  j["threads"] = c.threads == 0 ? json("auto") : json(c.threads);
  j["plot_l"] = c.plot_l ? json(*c.plot_l) : json();
  j["output"] = c.output.string();
  return j;
}

std::string config_hash(const StudyConfig& cfg)
{
  // Thread count and output location do not affect results.
  json j = to_json(cfg);
  j.erase("threads");
  j.erase("output");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

StudyConfig preset_config(const std::string& name, bool full)
{
  StudyConfig c;
  if (name == "1d") {
    c.kernel = KernelSpec::exp_trunc1d(4.0);
    c.grid = GridSpec::centered(1, 1.0, 100);
    c.estimator.a_n = 0.5;
    c.estimator.a = 0.5;
    c.l_values = { 1, 2, 3 };
    c.plot_l = 2;
    c.replications = 100;
    c.base_seed = 20240601;
    c.output = "out/study1d";
  } else if (name == "2d") {
    c.kernel = KernelSpec::epanechnikov2d(0.5, 1.0);
    c.grid = GridSpec::centered(2, 0.1, full ? 100 : 50);
    c.estimator.a_n = 1.01;
    c.estimator.a = 0.25;
    c.l_values = { 2 };
    c.replications = full ? 100 : 20;
    c.base_seed = 20240602;
    c.output = "out/study2d";
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected 1d or 2d)");
  }
  c.validate();
  return c;
}

std::size_t default_thread_count()
{
  if (const char* env = std::getenv("LEVYDECON_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1)
      return static_cast<std::size_t>(v);
    throw ConfigError("LEVYDECON_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

CalibrationResult run_calibration(const StudyConfig& cfg, const PluginOperator& op, const SignedGridFunction& truth)
{
  const CalibrationSpec spec = cfg.calibration.value_or(CalibrationSpec{});
  const auto kernel = cfg.kernel;
  const auto v0 = cfg.v0_density();
  EstimatorConfig est = cfg.estimator;
  est.l = spec.l;
  const auto y = frequency_grid(spec.l, est.nodes_per_pi);
  std::vector<SignedGridFunction> hats(spec.k, SignedGridFunction(op.grid()));
  const std::size_t threads = cfg.threads ? cfg.threads : default_thread_count();
  parallel_for(spec.k, threads, [&](std::size_t i) {
    const auto f = simulate_field(kernel, v0, cfg.grid, derive_seed(cfg.base_seed ^ calibration_salt, i),
                                  cfg.simulation);
    hats[i] = uv1_estimate(ecf(f.values, y), est, op.grid());
  });
  return calibrate_cutoff(hats, op, truth, cfg.estimator.u, static_cast<double>(cfg.grid.size()), cfg.estimator.a,
                          spec.candidates);
}

StudyResult run_study(const StudyConfig& cfg)
{
  cfg.validate();
  const LogGrid lg = cfg.log_grid();
  const auto v0 = cfg.v0_density();
  const PluginOperator op(make_multiplier(cfg.kernel, cfg.estimator.u, cfg.estimator.c), lg, cfg.estimator.c,
                          cfg.estimator.transform);
  const auto truth = weighted_density(v0, cfg.estimator.u, lg);
  const double n = static_cast<double>(cfg.grid.size());

  StudyResult r;
  r.config_hash = config_hash(cfg);
  r.base_seed = cfg.base_seed;
  EstimatorConfig est = cfg.estimator;
  if (!est.a_n && !est.C_k) {
    r.calibration = run_calibration(cfg, op, truth);
    est.C_k = r.calibration->C_k;
  }
  r.a_n = est.resolve_cutoff(n);
  est.a_n = r.a_n;

  const std::size_t L = cfg.l_values.size();
  const int plot_l = cfg.plot_l.value_or(cfg.l_values.front());
  std::vector<std::vector<ReplicationRow>> rows(cfg.replications);
  std::optional<FieldSample> traj;
  std::optional<EstimateResult> example;

  parallel_for(cfg.replications, cfg.threads ? cfg.threads : default_thread_count(), [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(cfg.base_seed, i);
    auto f = simulate_field(cfg.kernel, v0, cfg.grid, seed, cfg.simulation);
    auto& out = rows[i];
    for (std::size_t li = 0; li < L; ++li) {
      EstimatorConfig e = est;
      e.l = cfg.l_values[li];
      const auto t0 = std::chrono::steady_clock::now();
      auto uv1 = uv1_estimate(ecf(f.values, frequency_grid(e.l, e.nodes_per_pi)), e, lg);
      auto plug = op.apply(uv1, *e.a_n);
      const double t_hat = seconds_since(t0);
      const auto t1 = std::chrono::steady_clock::now();
      auto tilde = nonneg_project(plug.value, e.u);
      const double t_tilde = t_hat + seconds_since(t1);
      EstimateResult res{ std::move(uv1), std::move(plug.value), std::move(tilde), plug.diagnostics };
      const double mse_hat = std::pow(l2_error(res.uv0_hat, truth, { 0.0 }), 2);
      const double mse_tilde = std::pow(l2_error(res.uv0_tilde, truth, { 0.0 }), 2);
      const bool leak = res.diagnostics.leakage_forward || res.diagnostics.leakage_inverse;
      out.push_back({ i, seed, e.l, "hat", mse_hat, t_hat, res.diagnostics.kept_fraction, leak });
      out.push_back({ i, seed, e.l, "tilde", mse_tilde, t_tilde, res.diagnostics.kept_fraction, leak });
      if (i == 0 && e.l == plot_l)
        example = std::move(res);
    }
    if (i == 0)
      traj = std::move(f);
  });

  for (auto& rr : rows)
    for (auto& row : rr)
      r.replications.push_back(std::move(row));
  for (const char* name : { "hat", "tilde" })
    for (int l : cfg.l_values) {
      std::vector<double> mse, time;
      for (const auto& row : r.replications)
        if (row.l == l && row.estimator == name) {
          mse.push_back(row.mse);
          time.push_back(row.time_s);
        }
      r.summary.push_back({ name, l, mean_of(mse), sd_of(mse), mean_of(time), sd_of(time) });
    }
  r.trajectory = std::move(traj);
  r.example = std::move(example);
  r.truth = truth;
  return r;
}

std::string StudyResult::summary_csv() const
{
  std::ostringstream os;
  os << "estimator,l,mean_mse,sd_mse,mean_time_s,sd_time_s\n";
  for (const auto& s : summary)
    os << s.estimator << ',' << s.l << ',' << io::fmt17(s.mean_mse) << ',' << io::fmt17(s.sd_mse) << ','
       << io::fmt17(s.mean_time_s) << ',' << io::fmt17(s.sd_time_s) << "\n";
  return os.str();
}

std::string StudyResult::replications_csv() const
{
  std::ostringstream os;
  os << "replication,seed,l,estimator,mse,kept_fraction,leakage,time_s\n";
  for (const auto& r : replications)
    os << r.replication << ',' << r.seed << ',' << r.l << ',' << r.estimator << ',' << io::fmt17(r.mse) << ','
       << io::fmt17(r.kept_fraction) << ',' << (r.leakage ? 1 : 0) << ',' << io::fmt17(r.time_s) << "\n";
  return os.str();
}

void emit_plotdata(const StudyResult& result, const std::filesystem::path& dir)
{
  io::write_text(dir / "trajectory.csv", result.trajectory ? result.trajectory->to_csv() : "index,value\n");
  io::write_text(dir / "estimate.csv",
                 result.example ? result.example->to_csv(result.truth ? &*result.truth : nullptr)
                                : "x,uv1_hat,uv0_hat,uv0_tilde,uv0_true\n");
  io::write_text(dir / "summary.csv", result.summary_csv());
}

void write_study(const StudyResult& result, const StudyConfig& cfg, const std::filesystem::path& dir)
{
  emit_plotdata(result, dir);
  io::write_text(dir / "replications.csv", result.replications_csv());
  json j;
  j["config"] = to_json(cfg);
  j["config_hash"] = result.config_hash;
  j["base_seed"] = result.base_seed;
  j["code_version"] = code_version;
  j["a_n"] = result.a_n;
  j["log_grid"] = { { "t_min", cfg.log_t_min }, { "t_max", cfg.log_t_max }, { "points", cfg.log_points } };
  if (result.calibration) {
    j["calibration"] = { { "argmin", result.calibration->argmin },
                         { "C_k", result.calibration->C_k },
                         { "a_n", result.calibration->a_n },
                         { "candidates", result.calibration->candidates },
                         { "curve", result.calibration->curve } };
  }
  json rows = json::array();
  for (const auto& s : result.summary)
    rows.push_back({ { "estimator", s.estimator },
                     { "l", s.l },
                     { "mean_mse", s.mean_mse },
                     { "sd_mse", s.sd_mse },
                     { "mean_time_s", s.mean_time_s },
                     { "sd_time_s", s.sd_time_s } });
  j["summary"] = rows;
  io::write_text(dir / "study.json", j.dump(2) + "\n");
}

} // namespace levydecon
