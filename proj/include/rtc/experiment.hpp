/*
 * experiment.hpp
 *
 * Plan-driven experiment grid: corrupt -> solve -> evaluate -> persist, one
 * row per (scenario, config, seed). Plans and manifests are JSON; a manifest
 * is itself a valid plan, so feeding it back reruns the same grid.
 */
#pragma once

#include "rtc/degrade.hpp"
#include "rtc/eval.hpp"
#include "rtc/io.hpp"
#include "rtc/solver.hpp"
#include "rtc/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace rtc {

using json = nlohmann::json;

inline constexpr int kMetricsSchema = 1;

// ---- JSON conversion ------------------------------------------------------

inline json dims_to_json(const Dims& d) { return json::array({d.n1, d.n2, d.n3}); }

inline Dims dims_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("dims must be an array [n1, n2, n3]");
  Dims d{j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>()};
  check_dims(d);
  return d;
}

// All fields written; lambda is resolved against `dims` when it is auto.
inline json config_to_json(const SolverConfig& c, const std::optional<Dims>& dims = std::nullopt) {
  json j;
  j["variant"] = to_string(c.variant);
  const auto& a = c.weights.values();
  j["alpha"] = json::array({a[0], a[1], a[2]});
  if (c.lambda) j["lambda"] = *c.lambda;
  else if (dims) j["lambda"] = auto_lambda(*dims);
  else j["lambda"] = nullptr;
  j["mu0"] = c.mu0;
  j["mu_growth"] = c.mu_growth;
  j["mu_cap"] = c.mu_cap;
  j["max_iters"] = c.max_iters;
  j["rel_tol"] = c.rel_tol;
  j["feas_tol"] = c.feas_tol;
  j["theta"] = c.theta ? json(*c.theta) : json(nullptr);
  j["parallel_modes"] = c.parallel_modes;
  return j;
}

// Missing keys keep their defaults; unknown keys are rejected. No validation
// beyond types here: SolverConfig::validate runs per row.
inline SolverConfig config_from_json(const json& j) {
  static const std::set<std::string> known{"variant", "alpha",    "lambda",   "mu0",   "mu_growth",     "mu_cap",
                                           "max_iters", "rel_tol", "feas_tol", "theta", "parallel_modes"};
  if (!j.is_object()) throw std::invalid_argument("solver config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw std::invalid_argument("unknown solver config key '" + key + "'");
  SolverConfig c;
  if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
  if (j.contains("alpha")) {
    const auto& a = j["alpha"];
    if (!a.is_array() || a.size() != 3) throw std::invalid_argument("alpha must be an array of 3 weights");
    c.weights = ModeWeights(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
  }
  if (j.contains("lambda") && !j["lambda"].is_null()) c.lambda = j["lambda"].get<double>();
  if (j.contains("mu0")) c.mu0 = j["mu0"].get<double>();
  if (j.contains("mu_growth")) c.mu_growth = j["mu_growth"].get<double>();
  if (j.contains("mu_cap")) c.mu_cap = j["mu_cap"].get<double>();
  if (j.contains("max_iters")) c.max_iters = j["max_iters"].get<int>();
  if (j.contains("rel_tol")) c.rel_tol = j["rel_tol"].get<double>();
  if (j.contains("feas_tol")) c.feas_tol = j["feas_tol"].get<double>();
  if (j.contains("theta") && !j["theta"].is_null()) c.theta = j["theta"].get<double>();
  if (j.contains("parallel_modes")) c.parallel_modes = j["parallel_modes"].get<bool>();
  return c;
}

// Short label used in the metrics CSV, e.g. "gtnln" or "tnln-tv(theta=0.01)".
inline std::string config_label(const SolverConfig& c) {
  std::string s = to_string(c.variant);
  if (c.theta) {
    std::ostringstream os;
    os << std::setprecision(6) << *c.theta;
    s += "(theta=" + os.str() + ")";
  }
  return s;
}

// ---- plan -----------------------------------------------------------------

struct SyntheticSource {
  SyntheticSpec spec;
};

struct FileSource {
  DatasetDescriptor desc;
};

struct ExperimentPlan {
  std::string dataset_name = "synthetic";
  std::variant<SyntheticSource, FileSource> source = SyntheticSource{};
  std::vector<std::string> scenarios;  // scenario grammar strings
  std::vector<SolverConfig> configs;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "out";
  std::vector<std::size_t> export_days;  // 0-based; empty: no slice export
  int jobs = 1;

  // Nonempty grid and unique (scenario, config, seed) triples.
  void validate() const {
    if (scenarios.empty() || configs.empty() || seeds.empty())
      throw std::invalid_argument("plan needs at least one scenario, config and seed");
    if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    for (const auto& s : scenarios) parse_scenario(s);
    std::set<std::string> seen_sc(scenarios.begin(), scenarios.end());
    if (seen_sc.size() != scenarios.size()) throw std::invalid_argument("plan lists a scenario twice");
    std::set<std::string> seen_cfg;
    for (const auto& c : configs) seen_cfg.insert(config_to_json(c).dump());
    if (seen_cfg.size() != configs.size()) throw std::invalid_argument("plan lists a solver config twice");
    std::set<std::uint64_t> seen_seed(seeds.begin(), seeds.end());
    if (seen_seed.size() != seeds.size()) throw std::invalid_argument("plan lists a seed twice");
  }

  std::size_t row_count() const { return scenarios.size() * configs.size() * seeds.size(); }
};

inline json dataset_to_json(const ExperimentPlan& p) {
  json d;
  d["name"] = p.dataset_name;
  if (const auto* s = std::get_if<SyntheticSource>(&p.source)) {
    d["kind"] = "synthetic";
    d["dims"] = dims_to_json(s->spec.dims);
    d["components"] = s->spec.components;
    d["max_value"] = s->spec.max_value;
    d["bump_width"] = s->spec.bump_width;
    d["weekly"] = s->spec.weekly;
    d["seed"] = s->spec.seed;
  } else {
    const auto& f = std::get<FileSource>(p.source).desc;
    d["kind"] = "file";
    d["path"] = f.path;
    d["format"] = to_string(f.format);
    d["dims"] = f.dims ? dims_to_json(*f.dims) : json(nullptr);
    d["units"] = f.units;
  }
  return d;
}

inline ExperimentPlan plan_from_json(const json& j) {
  ExperimentPlan p;
  const json& d = j.at("dataset");
  const std::string kind = d.value("kind", std::string("synthetic"));
  p.dataset_name = d.value("name", kind == "synthetic" ? std::string("synthetic") : std::string("dataset"));
  if (kind == "synthetic") {
    SyntheticSpec s;
    if (d.contains("dims")) s.dims = dims_from_json(d["dims"]);
    s.components = d.value("components", s.components);
    s.max_value = d.value("max_value", s.max_value);
    s.bump_width = d.value("bump_width", s.bump_width);
    s.weekly = d.value("weekly", s.weekly);
    s.seed = d.value("seed", s.seed);
    p.source = SyntheticSource{s};
  } else if (kind == "file") {
    DatasetDescriptor desc;
    desc.name = p.dataset_name;
    desc.path = d.at("path").get<std::string>();
    desc.format = parse_file_format(d.value("format", std::string("dense-binary")));
    if (d.contains("dims") && !d["dims"].is_null()) desc.dims = dims_from_json(d["dims"]);
    desc.units = d.value("units", std::string());
    p.source = FileSource{desc};
  } else {
    throw std::invalid_argument("dataset kind must be 'synthetic' or 'file', got '" + kind + "'");
  }
  p.scenarios = j.at("scenarios").get<std::vector<std::string>>();
  if (j.contains("configs"))
    for (const auto& c : j["configs"]) p.configs.push_back(config_from_json(c));
  else
    p.configs.push_back(SolverConfig{});
  p.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  p.out_dir = j.value("out_dir", p.out_dir);
  p.export_days = j.value("export_days", std::vector<std::size_t>{});
  p.jobs = j.value("jobs", 1);
  p.validate();
  return p;
}

inline ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError("plan '" + path + "': " + e.what());
  }
  return plan_from_json(j);
}

// ---- execution ------------------------------------------------------------

struct RunRow {
  std::size_t index = 0;
  std::string scenario;
  std::size_t config_index = 0;
  std::string variant;  // config_label
  std::uint64_t seed = 0;
  double mae = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double mae_missing = std::numeric_limits<double>::quiet_NaN();
  double rmse_missing = std::numeric_limits<double>::quiet_NaN();
  int iters = 0;
  bool converged = false;
  std::int64_t wall_ms = 0;
  bool ok = false;
  std::string error;
  std::string trace_file;
  std::vector<std::string> slice_files;
};

struct ExperimentResult {
  std::vector<RunRow> rows;
  std::string metrics_path;
  std::string manifest_path;
  std::size_t failed = 0;
  bool all_ok() const { return failed == 0; }
};

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline const char* kMetricsHeader =
    "dataset,scenario,variant,seed,mae,rmse,iters,wall_ms,status,config,converged,mae_missing,rmse_missing,error";

inline std::string metrics_line(const std::string& dataset, const RunRow& r) {
  std::ostringstream os;
  os << csv_escape(dataset) << ',' << csv_escape(r.scenario) << ',' << csv_escape(r.variant) << ',' << r.seed << ','
     << csv_number(r.mae) << ',' << csv_number(r.rmse) << ',' << r.iters << ',' << r.wall_ms << ','
     << (r.ok ? "ok" : "failed") << ',' << r.config_index << ',' << (r.converged ? 1 : 0) << ','
     << csv_number(r.mae_missing) << ',' << csv_number(r.rmse_missing) << ',' << csv_escape(r.error);
  return os.str();
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceEntry>& trace) {
  os << "iter,relative_change,primal_residual,gradient_residual,observation_residual,consensus_residual,"
        "dual_residual,mu,e_zero_fraction\n";
  for (const auto& t : trace)
    os << t.iter << ',' << csv_number(t.relative_change) << ',' << csv_number(t.primal_residual) << ','
       << csv_number(t.gradient_residual) << ',' << csv_number(t.observation_residual) << ','
       << csv_number(t.consensus_residual) << ',' << csv_number(t.dual_residual) << ',' << csv_number(t.mu) << ','
       << csv_number(t.e_zero_fraction) << '\n';
}

// One CSV per requested day with columns location,time,truth,recovered,residual.
// Days are 0-based. Returns the written paths.
inline std::vector<std::string> export_slices(const Tensor3& x0, const RecoveryReport& report,
                                              const std::vector<std::size_t>& days,
                                              const std::filesystem::path& dir, const std::string& stem = "day") {
  require_same_dims(x0.dims(), report.x_hat.dims(), "export_slices");
  for (std::size_t d : days)
    if (d >= x0.dims().n3)
      throw std::out_of_range("export_slices: day " + std::to_string(d) + " outside [0, " +
                              std::to_string(x0.dims().n3) + ")");
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (std::size_t d : days) {
    const Eigen::MatrixXd r = residual_slice(x0, report.x_hat, d);
    const auto path = dir / (stem + "_" + std::to_string(d) + ".csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "location,time,truth,recovered,residual\n";
    for (std::size_t i = 0; i < x0.dims().n1; ++i)
      for (std::size_t j = 0; j < x0.dims().n2; ++j)
        out << i << ',' << j << ',' << csv_number(x0(i, j, d)) << ',' << csv_number(report.x_hat(i, j, d)) << ','
            << csv_number(r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
    paths.push_back(path.string());
  }
  return paths;
}

struct LoadedDataset {
  Tensor3 x0;
  ObservationMask native_mask;
};

inline LoadedDataset load_dataset(const ExperimentPlan& plan) {
  if (const auto* s = std::get_if<SyntheticSource>(&plan.source)) {
    Tensor3 x0 = make_synthetic(s->spec);
    ObservationMask full(x0.dims(), true);
    return {std::move(x0), std::move(full)};
  }
  Dataset ds = ingest(std::get<FileSource>(plan.source).desc);
  return {std::move(ds.x0), std::move(ds.native_mask)};
}

namespace detail {

inline std::string file_safe(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return s;
}

// Natively missing cells carry no truth: they are never observed and are
// excluded from every metric.
inline void evaluate_row(RunRow& row, const Tensor3& x0, const ObservationMask& native, const ObservationMask& mask,
                         const RecoveryReport& rep) {
  const bool full = native.observed_count() == native.size();
  if (full) {
    row.mae = mae(x0, rep.x_hat);
    row.rmse = rmse(x0, rep.x_hat);
  } else {
    row.mae = mae(x0, rep.x_hat, MetricScope::ObservedOnly, &native);
    row.rmse = rmse(x0, rep.x_hat, MetricScope::ObservedOnly, &native);
  }
  ObservationMask held_out(x0.dims(), false);
  std::size_t n = 0;
  for (std::size_t k = 0; k < x0.size(); ++k)
    if (native[k] && !mask[k]) {
      held_out.set(k, true);
      ++n;
    }
  if (n > 0) {
    row.mae_missing = mae(x0, rep.x_hat, MetricScope::ObservedOnly, &held_out);
    row.rmse_missing = rmse(x0, rep.x_hat, MetricScope::ObservedOnly, &held_out);
  }
}

}  // namespace detail

inline json manifest_json(const ExperimentPlan& plan, const Dims& dims, const std::vector<RunRow>& rows) {
  json m;
  m["metrics_schema"] = kMetricsSchema;
  m["dataset"] = dataset_to_json(plan);
  m["dataset"]["resolved_dims"] = dims_to_json(dims);
  m["scenarios"] = plan.scenarios;
  m["configs"] = json::array();
  for (const auto& c : plan.configs) m["configs"].push_back(config_to_json(c, dims));
  m["seeds"] = plan.seeds;
  m["out_dir"] = plan.out_dir;
  m["export_days"] = plan.export_days;
  m["jobs"] = plan.jobs;
  m["rows"] = json::array();
  for (const auto& r : rows) {
    const auto sc = parse_scenario(r.scenario, r.seed);
    json jr{{"index", r.index},         {"scenario", r.scenario},     {"config", r.config_index},
            {"seed", r.seed},           {"mask_seed", sc.missing.seed}, {"status", r.ok ? "ok" : "failed"},
            {"trace_file", r.trace_file}, {"slice_files", r.slice_files}};
    jr["noise_seed"] = sc.noise ? json(sc.noise->seed) : json(nullptr);
    if (!r.ok) jr["error"] = r.error;
    m["rows"].push_back(jr);
  }
  return m;
}

// Runs the whole grid. Row errors are recorded, never thrown; plan-level
// problems (bad dataset, unwritable output) throw.
inline ExperimentResult run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  namespace fs = std::filesystem;
  const fs::path out_dir(plan.out_dir);
  fs::create_directories(out_dir / "traces");

  const LoadedDataset data = load_dataset(plan);
  const Dims dims = data.x0.dims();
  const GradientOperator op(dims.n2);

  ExperimentResult result;
  result.metrics_path = (out_dir / "metrics.csv").string();
  result.manifest_path = (out_dir / "manifest.json").string();
  std::ofstream metrics(result.metrics_path);
  if (!metrics) throw std::runtime_error("cannot write '" + result.metrics_path + "'");
  metrics << kMetricsHeader << '\n';

  const std::size_t total = plan.row_count();
  result.rows.resize(total);
  std::vector<char> done(total, 0);
  std::mutex mtx;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};

  auto run_row = [&](std::size_t idx) {
    const std::size_t per_scenario = plan.configs.size() * plan.seeds.size();
    RunRow row;
    row.index = idx;
    row.scenario = plan.scenarios[idx / per_scenario];
    row.config_index = (idx % per_scenario) / plan.seeds.size();
    row.seed = plan.seeds[idx % plan.seeds.size()];
    const SolverConfig& cfg = plan.configs[row.config_index];
    row.variant = config_label(cfg);
    try {
      const auto scenario = parse_scenario(row.scenario, row.seed);
      Corruption c = corrupt(data.x0, scenario);
      for (std::size_t k = 0; k < c.y.size(); ++k)
        if (!data.native_mask[k]) {
          c.mask.set(k, false);
          c.y[k] = 0.0;
        }
      const RecoveryReport rep = solve(c.y, c.mask, cfg, op);
      row.iters = rep.iterations_run;
      row.converged = rep.converged;
      row.wall_ms = rep.wall_ms;
      detail::evaluate_row(row, data.x0, data.native_mask, c.mask, rep);
      const std::string stem = std::to_string(idx) + "_" + detail::file_safe(row.scenario) + "_" +
                               detail::file_safe(row.variant) + "_s" + std::to_string(row.seed);
      const fs::path trace_path = out_dir / "traces" / (stem + ".csv");
      std::ofstream tr(trace_path);
      if (!tr) throw std::runtime_error("cannot write '" + trace_path.string() + "'");
      write_trace_csv(tr, rep.trace);
      row.trace_file = fs::relative(trace_path, out_dir).string();
      if (!plan.export_days.empty())
        for (const auto& p : export_slices(data.x0, rep, plan.export_days, out_dir / "slices" / stem))
          row.slice_files.push_back(fs::relative(p, out_dir).string());
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    {
      std::lock_guard<std::mutex> lock(mtx);
      result.rows[idx] = std::move(row);
      done[idx] = 1;
    }
    cv.notify_one();
  };

  auto worker = [&] {
    for (std::size_t idx; (idx = next.fetch_add(1)) < total;) run_row(idx);
  };

  std::vector<std::thread> pool;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(plan.jobs), total);
  if (workers > 1)
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);

  // Single writer: rows are appended in grid order as they become available.
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (workers <= 1) {
      run_row(idx);
    } else {
      std::unique_lock<std::mutex> lock(mtx);
      cv.wait(lock, [&] { return done[idx] != 0; });
    }
    metrics << metrics_line(plan.dataset_name, result.rows[idx]) << '\n' << std::flush;
    if (!result.rows[idx].ok) ++result.failed;
  }
  for (auto& t : pool) t.join();

  std::ofstream manifest(result.manifest_path);
  if (!manifest) throw std::runtime_error("cannot write '" + result.manifest_path + "'");
  manifest << manifest_json(plan, dims, result.rows).dump(2) << '\n';
  return result;
}

}  // namespace rtc
