// rtc: command-line front end for robust tensor completion experiments.

#include "rtc/rtc.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using rtc::json;

// Report output: table on stdout, or csv/json to --out (stdout when absent).
struct ReportSink {
  std::string format = "table";
  std::string out;

  std::ostream& stream() {
    if (out.empty() || out == "-") return std::cout;
    if (!file.is_open()) {
      file.open(out);
      if (!file) throw std::runtime_error("cannot write '" + out + "'");
    }
    return file;
  }

 private:
  std::ofstream file;
};

struct TensorFile {
  std::string path;
  std::string format = "dense-binary";
  std::vector<std::size_t> dims;  // long-csv only

  rtc::MaskedTensor load() const {
    rtc::DatasetDescriptor d;
    d.name = path;
    d.path = path;
    d.format = rtc::parse_file_format(format);
    if (!dims.empty()) d.dims = rtc::Dims{dims.at(0), dims.at(1), dims.at(2)};
    rtc::Dataset ds = rtc::ingest(d);
    return {std::move(ds.x0), std::move(ds.native_mask)};
  }
};

void add_tensor_input(CLI::App* app, TensorFile& f, const std::string& flag, const std::string& what) {
  app->add_option(flag, f.path, what)->required()->check(CLI::ExistingFile);
  app->add_option(flag + "-format", f.format, "dense-binary | long-csv")
      ->check(CLI::IsMember({"dense-binary", "long-csv", "bin", "csv"}));
  app->add_option(flag + "-dims", f.dims, "n1,n2,n3 (required for long-csv)")->delimiter(',')->expected(3);
}

rtc::Dims to_dims(const std::vector<std::size_t>& v) {
  if (v.size() != 3) throw std::invalid_argument("dims need exactly three values");
  return {v[0], v[1], v[2]};
}

struct SolverFlags {
  std::string variant = "gtnln";
  std::optional<double> lambda;
  std::optional<double> theta;
  std::vector<double> alpha;
  rtc::SolverConfig cfg;

  void attach(CLI::App* app) {
    app->add_option("--variant", variant, "gtnln | tnln | convex | tnln-tv")
        ->check(CLI::IsMember({"gtnln", "tnln", "convex", "tnln-tv"}));
    app->add_option("--lambda", lambda, "noise weight (default 1/sqrt(max(n1,n2)*n3))");
    app->add_option("--theta", theta, "TV weight (tnln-tv only)");
    app->add_option("--alpha", alpha, "mode weights a1,a2,a3 summing to 1")->delimiter(',')->expected(3);
    app->add_option("--mu0", cfg.mu0, "initial penalty")->capture_default_str();
    app->add_option("--mu-growth", cfg.mu_growth, "penalty growth factor")->capture_default_str();
    app->add_option("--mu-cap", cfg.mu_cap, "penalty ceiling")->capture_default_str();
    app->add_option("--max-iters", cfg.max_iters, "iteration limit")->capture_default_str();
    app->add_option("--rel-tol", cfg.rel_tol, "relative-change tolerance")->capture_default_str();
    app->add_option("--feas-tol", cfg.feas_tol, "relative primal residual tolerance")->capture_default_str();
    app->add_flag("--parallel-modes", cfg.parallel_modes, "run the three mode proxes concurrently");
  }

  rtc::SolverConfig build() const {
    rtc::SolverConfig c = cfg;
    c.variant = rtc::parse_variant(variant);
    c.lambda = lambda;
    c.theta = theta;
    if (!alpha.empty()) c.weights = rtc::ModeWeights(alpha[0], alpha[1], alpha[2]);
    c.validate();
    return c;
  }
};

void print_json(std::ostream& os, const json& j) { os << j.dump(2) << '\n'; }

// ---- verbs ---------------------------------------------------------------

int cmd_synth(const std::vector<std::size_t>& dims, int components, double max_value, bool no_weekly,
              std::uint64_t seed, const std::string& out, const std::string& format) {
  rtc::SyntheticSpec s;
  s.dims = to_dims(dims);
  s.components = components;
  s.max_value = max_value;
  s.weekly = !no_weekly;
  s.seed = seed;
  const rtc::Tensor3 x = rtc::make_synthetic(s);
  rtc::save_tensor(out, rtc::parse_file_format(format), x);
  std::cerr << "wrote " << s.dims.str() << " synthetic tensor to " << out << '\n';
  return 0;
}

int cmd_corrupt(const TensorFile& in, const std::string& scenario, std::uint64_t seed, const std::string& out,
                const std::string& format, const std::string& noise_out) {
  const rtc::MaskedTensor truth = in.load();
  rtc::Corruption c = rtc::corrupt(truth.values, rtc::parse_scenario(scenario, seed));
  for (std::size_t k = 0; k < c.y.size(); ++k)
    if (!truth.mask[k]) c.mask.set(k, false);
  rtc::save_tensor(out, rtc::parse_file_format(format), c.y, &c.mask);
  if (!noise_out.empty()) rtc::save_tensor(noise_out, rtc::parse_file_format(format), c.e0);
  std::cerr << "observed " << c.mask.observed_count() << " of " << c.mask.size() << " entries; wrote " << out
            << '\n';
  return 0;
}

int cmd_solve(const TensorFile& in, const SolverFlags& flags, const std::string& out, const std::string& format,
              const std::string& trace_out, const std::string& noise_out) {
  const rtc::MaskedTensor y = in.load();
  const rtc::SolverConfig cfg = flags.build();
  const rtc::RecoveryReport rep = rtc::solve(y.values, y.mask, cfg);
  rtc::save_tensor(out, rtc::parse_file_format(format), rep.x_hat);
  if (!noise_out.empty()) rtc::save_tensor(noise_out, rtc::parse_file_format(format), rep.e_hat);
  if (!trace_out.empty()) {
    std::ofstream t(trace_out);
    if (!t) throw std::runtime_error("cannot write '" + trace_out + "'");
    rtc::write_trace_csv(t, rep.trace);
  }
  std::cerr << rtc::config_label(cfg) << ": " << rep.iterations_run << " iterations, "
            << (rep.converged ? "converged" : "iteration limit reached") << ", " << rep.wall_ms << " ms, lambda "
            << rep.lambda << '\n';
  return 0;
}

int cmd_eval(const TensorFile& truth_in, const TensorFile& rec_in, const std::string& observed_path,
             const std::string& observed_format, const std::string& scope_name,
             const std::vector<std::size_t>& days, const std::string& slice_dir, ReportSink& sink) {
  const rtc::MaskedTensor truth = truth_in.load();
  const rtc::MaskedTensor rec = rec_in.load();
  const rtc::MetricScope scope = rtc::parse_scope(scope_name);
  std::optional<rtc::ObservationMask> mask;
  if (!observed_path.empty()) {
    const rtc::Dims& d = truth.values.dims();
    TensorFile obs{observed_path, observed_format, {d.n1, d.n2, d.n3}};
    mask = obs.load().mask;
  }
  if (scope != rtc::MetricScope::AllEntries && !mask)
    throw std::invalid_argument("--scope " + scope_name + " needs --observed");
  const rtc::ObservationMask* mp = mask ? &*mask : nullptr;
  const double mae = rtc::mae(truth.values, rec.values, scope, mp);
  const double rmse = rtc::rmse(truth.values, rec.values, scope, mp);
  if (!days.empty()) {
    rtc::RecoveryReport rep;
    rep.x_hat = rec.values;
    for (const auto& p : rtc::export_slices(truth.values, rep, days, slice_dir)) std::cerr << "wrote " << p << '\n';
  }
  std::ostream& os = sink.stream();
  if (sink.format == "json") {
    print_json(os, json{{"scope", scope_name}, {"mae", mae}, {"rmse", rmse}});
  } else if (sink.format == "csv") {
    os << "scope,mae,rmse\n" << scope_name << ',' << rtc::csv_number(mae) << ',' << rtc::csv_number(rmse) << '\n';
  } else {
    os << std::fixed << std::setprecision(4) << "scope " << scope_name << "  MAE " << mae << "  RMSE " << rmse
       << '\n';
  }
  return 0;
}

int cmd_run(const std::string& plan_path, const std::string& out_override, std::optional<int> jobs) {
  rtc::ExperimentPlan plan = rtc::load_plan(plan_path);
  if (!out_override.empty()) plan.out_dir = out_override;
  if (jobs) plan.jobs = *jobs;
  std::cerr << "running " << plan.row_count() << " rows into " << plan.out_dir << '\n';
  const rtc::ExperimentResult res = rtc::run_experiment(plan);
  for (const auto& r : res.rows) {
    std::cerr << std::setw(4) << r.index << "  " << std::left << std::setw(14) << r.scenario << std::setw(24)
              << r.variant << std::right << " seed " << r.seed << "  ";
    if (r.ok)
      std::cerr << std::fixed << std::setprecision(4) << "MAE " << r.mae << "  RMSE " << r.rmse << "  iters "
                << r.iters << '\n';
    else
      std::cerr << "FAILED: " << r.error << '\n';
  }
  std::cerr << "metrics: " << res.metrics_path << "\nmanifest: " << res.manifest_path << '\n';
  if (!res.all_ok()) {
    std::cerr << res.failed << " row(s) failed\n";
    return 2;
  }
  return 0;
}

int cmd_lemma1(std::size_t trials, const std::vector<std::size_t>& dims, std::uint64_t seed, ReportSink& sink) {
  const rtc::Dims d = to_dims(dims);
  const rtc::GradientOperator op(d.n2);
  const rtc::Lemma1Sweep sw = rtc::lemma1_sweep(trials, d, seed, op, rtc::ModeWeights{});
  std::ostream& os = sink.stream();
  if (sink.format == "csv") {
    os << "trial,lower,value,upper,holds,max_rank,eta,tv,note\n";
    for (std::size_t t = 0; t < sw.rows.size(); ++t) {
      const auto& r = sw.rows[t];
      os << t << ',' << rtc::csv_number(r.lower) << ',' << rtc::csv_number(r.value) << ','
         << rtc::csv_number(r.upper) << ',' << (r.holds ? 1 : 0) << ',' << r.max_rank << ','
         << rtc::csv_number(r.eta) << ',' << rtc::csv_number(r.tv) << ',' << (r.rank_tolerance_note ? "rank_tolerance" : "")
         << '\n';
    }
  } else if (sink.format == "json") {
    json rows = json::array();
    for (const auto& r : sw.rows)
      rows.push_back({{"lower", r.lower},
                      {"value", r.value},
                      {"upper", r.upper},
                      {"holds", r.holds},
                      {"max_rank", r.max_rank},
                      {"eta", std::isfinite(r.eta) ? json(r.eta) : json("inf")},
                      {"tv", r.tv},
                      {"rank_tolerance_note", r.rank_tolerance_note}});
    print_json(os, json{{"trials", trials}, {"passed", sw.passed}, {"flagged", sw.flagged},
                        {"pass_rate", sw.pass_rate()}, {"rows", rows}});
  } else {
    os << "trials " << trials << "  passed " << sw.passed << "  flagged " << sw.flagged << "  pass rate "
       << std::fixed << std::setprecision(2) << 100.0 * sw.pass_rate() << "%\n";
  }
  return sw.passed == sw.rows.size() ? 0 : 1;
}

int cmd_bench(const std::vector<std::size_t>& sizes, int iters, std::uint64_t seed, ReportSink& sink) {
  const rtc::BenchResult r = rtc::bench_scaling(sizes, iters, 2, seed);
  std::ostream& os = sink.stream();
  if (sink.format == "csv") {
    os << "n,seconds_per_iter\n";
    for (const auto& p : r.points) os << p.n << ',' << rtc::csv_number(p.seconds_per_iter) << '\n';
  } else if (sink.format == "json") {
    json pts = json::array();
    for (const auto& p : r.points) pts.push_back({{"n", p.n}, {"seconds_per_iter", p.seconds_per_iter}});
    print_json(os, json{{"points", pts}, {"loglog_slope", r.slope}});
  } else {
    for (const auto& p : r.points)
      os << "n=" << std::setw(4) << p.n << "  " << std::scientific << std::setprecision(3) << p.seconds_per_iter
         << " s/iter\n";
    os << std::fixed << std::setprecision(3) << "log-log slope " << r.slope << " (n^4 model: 4)\n";
  }
  return 0;
}

void add_report_flags(CLI::App* app, ReportSink& sink) {
  app->add_option("--format", sink.format, "table | csv | json")->check(CLI::IsMember({"table", "csv", "json"}));
  app->add_option("--out", sink.out, "report file (default stdout)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust tensor completion for spatiotemporal traffic data"};
  app.require_subcommand(1);

  // synth
  std::vector<std::size_t> synth_dims{40, 60, 14};
  int components = 4;
  double max_value = 70.0;
  bool no_weekly = false;
  std::uint64_t seed = 0;
  std::string out, format = "dense-binary";
  auto* synth = app.add_subcommand("synth", "generate a synthetic ground-truth tensor");
  synth->add_option("--dims", synth_dims, "n1,n2,n3")->delimiter(',')->expected(3)->capture_default_str();
  synth->add_option("--components", components, "number of rank-1 terms")->capture_default_str();
  synth->add_option("--max-value", max_value, "values span [0, max-value]")->capture_default_str();
  synth->add_flag("--no-weekly", no_weekly, "drop the weekday/weekend day pattern");
  synth->add_option("--seed", seed, "random seed")->capture_default_str();
  synth->add_option("--out", out, "output tensor file")->required();
  synth->add_option("--format", format, "dense-binary | long-csv")
      ->check(CLI::IsMember({"dense-binary", "long-csv", "bin", "csv"}));

  // corrupt
  TensorFile corrupt_in;
  std::string scenario = "rm:0.5+ln1", noise_out;
  auto* corrupt = app.add_subcommand("corrupt", "apply a missing pattern and noise; missing cells become NaN");
  add_tensor_input(corrupt, corrupt_in, "--in", "ground-truth tensor");
  corrupt->add_option("--scenario", scenario, "rm:<rate>[+preset] | nm:<rate>[+preset]")->capture_default_str();
  corrupt->add_option("--seed", seed, "random seed")->capture_default_str();
  corrupt->add_option("--out", out, "observed tensor file")->required();
  corrupt->add_option("--format", format, "dense-binary | long-csv")
      ->check(CLI::IsMember({"dense-binary", "long-csv", "bin", "csv"}));
  corrupt->add_option("--noise-out", noise_out, "also write the injected noise tensor");

  // solve
  TensorFile solve_in;
  SolverFlags solver_flags;
  std::string trace_out, e_out;
  auto* solve = app.add_subcommand("solve", "recover a tensor from NaN-marked observations");
  add_tensor_input(solve, solve_in, "--in", "observed tensor (NaN = missing)");
  solver_flags.attach(solve);
  solve->add_option("--out", out, "recovered tensor file")->required();
  solve->add_option("--format", format, "dense-binary | long-csv")
      ->check(CLI::IsMember({"dense-binary", "long-csv", "bin", "csv"}));
  solve->add_option("--trace", trace_out, "convergence trace CSV");
  solve->add_option("--noise-out", e_out, "estimated sparse noise tensor");

  // eval
  TensorFile eval_truth, eval_rec;
  std::string observed_path, observed_format = "dense-binary", scope = "all", slice_dir = "slices";
  std::vector<std::size_t> days;
  ReportSink eval_sink;
  auto* eval = app.add_subcommand("eval", "MAE / RMSE and residual slice export");
  add_tensor_input(eval, eval_truth, "--truth", "ground-truth tensor");
  add_tensor_input(eval, eval_rec, "--recovered", "recovered tensor");
  eval->add_option("--observed", observed_path, "observed tensor (defines missing / observed scopes)");
  eval->add_option("--observed-format", observed_format, "dense-binary | long-csv");
  eval->add_option("--scope", scope, "all | missing | observed")->check(CLI::IsMember({"all", "missing", "observed"}));
  eval->add_option("--days", days, "0-based days to export as residual CSVs")->delimiter(',');
  eval->add_option("--slice-dir", slice_dir, "directory for residual CSVs")->capture_default_str();
  add_report_flags(eval, eval_sink);

  // run
  std::string plan_path, run_out;
  std::optional<int> jobs;
  auto* run = app.add_subcommand("run", "execute an experiment plan (JSON)");
  run->add_option("plan", plan_path, "plan or manifest file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "override the plan's output directory");
  run->add_option("--jobs", jobs, "parallel rows");

  // lemma1
  std::size_t trials = 100;
  std::vector<std::size_t> lemma_dims{6, 8, 5};
  ReportSink lemma_sink;
  auto* lemma1 = app.add_subcommand("lemma1", "sweep the GTNLN / TV sandwich bound on random smooth tensors");
  lemma1->add_option("--trials", trials, "number of tensors")->capture_default_str();
  lemma1->add_option("--dims", lemma_dims, "n1,n2,n3")->delimiter(',')->expected(3)->capture_default_str();
  lemma1->add_option("--seed", seed, "random seed")->capture_default_str();
  add_report_flags(lemma1, lemma_sink);

  // bench
  std::vector<std::size_t> sizes{20, 30, 40, 50};
  int bench_iters = 7;
  ReportSink bench_sink;
  auto* bench = app.add_subcommand("bench", "per-iteration time on n x n x n tensors and its log-log slope");
  bench->add_option("--sizes", sizes, "cube edge lengths")->delimiter(',')->capture_default_str();
  bench->add_option("--iters", bench_iters, "timed iterations per size (median reported)")->capture_default_str();
  bench->add_option("--seed", seed, "random seed")->capture_default_str();
  add_report_flags(bench, bench_sink);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(synth_dims, components, max_value, no_weekly, seed, out, format);
    if (*corrupt) return cmd_corrupt(corrupt_in, scenario, seed, out, format, noise_out);
    if (*solve) return cmd_solve(solve_in, solver_flags, out, format, trace_out, e_out);
    if (*eval)
      return cmd_eval(eval_truth, eval_rec, observed_path, observed_format, scope, days, slice_dir, eval_sink);
    if (*run) return cmd_run(plan_path, run_out, jobs);
    if (*lemma1) return cmd_lemma1(trials, lemma_dims, seed, lemma_sink);
    if (*bench) return cmd_bench(sizes, bench_iters, seed, bench_sink);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
