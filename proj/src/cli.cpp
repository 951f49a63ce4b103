#include "bmc/cli.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "bmc/baseline.hpp"
#include "bmc/em.hpp"
#include "bmc/inference.hpp"
#include "bmc/simulate.hpp"

namespace bmc {

std::string entry_label(Index r, Index d, Index a, Index b) {
  const Index l = a / r + 1, i = a % r + 1;
  const Index n = b / r + 1, j = b % r + 1;
  std::ostringstream os;
  os << 'H' << l;
  if (d >= 10) {
    os << ',';
  }
  os << n << '(' << i << ',' << j << ')';
  return os.str();
}

double max_abs_distance(const Matrix &x, const Matrix &y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionError("max_abs_distance: shape mismatch");
  }
  return (x - y).cwiseAbs().maxCoeff();
}

Json entry_errors(const Generator &estimate, const Generator &reference) {
  if (estimate.r() != reference.r() || estimate.d() != reference.d()) {
    throw DimensionError("entry_errors: generators differ in shape");
  }
  Json entries = Json::array();
  const Matrix &e = estimate.matrix();
  const Matrix &t = reference.matrix();
  for (Index a = 0; a < e.rows(); ++a) {
    for (Index b = 0; b < e.cols(); ++b) {
      Json row;
      row["entry"] = entry_label(estimate.r(), estimate.d(), a, b);
      row["reference"] = t(a, b);
      row["estimate"] = e(a, b);
      row["abs_error"] = std::abs(e(a, b) - t(a, b));
      if (t(a, b) != 0) {
        row["rel_error"] = std::abs(e(a, b) - t(a, b)) / std::abs(t(a, b));
      } else {
        row["rel_error"] = nullptr;
      }
      entries.push_back(std::move(row));
    }
  }
  Json j;
  j["max_abs_error"] = max_abs_distance(e, t);
  j["entries"] = std::move(entries);
  return j;
}

namespace {

struct Options {
  std::string model;
  std::string init_model;
  std::string path;
  std::string out;
  std::string reference;
  std::string save_estimate;
  std::string save_path;
  double tol = 1e-7;
  int max_iters = 1000;
  std::vector<double> deltas;
  std::uint64_t seed = 12345;
  std::size_t target_jumps = 0;
  std::size_t experiment_jumps = 10000;
  double horizon = 0;
  bool mask = false;
  int x0 = 1;
  bool timings = false;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

GeneratorFile read_generator(const std::string &file) {
  return load_generator_file(read_text_file(file));
}

PathFile read_path(const std::string &file) {
  return load_path(read_text_file(file));
}

Json report_header(const std::string &command) {
  Json j;
  j["tool"] = "bmc";
  j["version"] = kToolVersion;
  j["command"] = command;
  return j;
}

void write_report(const Options &opt, const Json &report, std::ostream &out) {
  if (!opt.out.empty()) {
    write_text_file(opt.out, report.dump(2) + "\n");
    out << "report written to " << opt.out << "\n";
  }
}

Json row_vector_json(const RowVector &v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) {
    a.push_back(v(i));
  }
  return a;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string fmt_loglik(const std::optional<double> &v) {
  if (!v) {
    return "-inf";
  }
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << *v;
  return os.str();
}

Json loglik_json(const std::optional<double> &v) {
  return v ? Json(*v) : Json(nullptr);
}

// Prints one row per generator entry and one column per matrix.
void print_entry_table(std::ostream &out, Index r, Index d,
                       const std::vector<std::string> &headers,
                       const std::vector<const Matrix *> &columns) {
  constexpr int label_width = 12;
  constexpr int width = 14;
  out << std::left << std::setw(label_width) << "entry" << std::right;
  for (const auto &h : headers) {
    out << std::setw(width) << h;
  }
  out << "\n";
  const Index n = r * d;
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      out << std::left << std::setw(label_width) << entry_label(r, d, a, b)
          << std::right;
      for (const Matrix *m : columns) {
        out << std::setw(width) << fmt((*m)(a, b));
      }
      out << "\n";
    }
  }
}

std::optional<double> safe_loglik(const Generator &g,
                                  const InitialDistribution &init,
                                  const ObservedPath &path) {
  try {
    return log_likelihood(g, init, path);
  } catch (const ZeroLikelihood &) {
    return std::nullopt;
  }
}

bool below(const std::optional<double> &x, const std::optional<double> &y) {
  if (!x) {
    return y.has_value();
  }
  return y && *x < *y;
}

std::optional<Mask> resolve_mask(const GeneratorFile &file,
                                 bool from_zero_pattern) {
  if (file.mask) {
    return file.mask;
  }
  if (!from_zero_pattern) {
    return std::nullopt;
  }
  Mask m = (file.generator.matrix().array() != 0.0).matrix();
  m.diagonal().setConstant(false);
  return m;
}

void require_same_shape(const Generator &x, const Generator &y,
                        const char *what) {
  if (x.r() != y.r() || x.d() != y.d()) {
    throw DimensionError(std::string(what) + ": models differ in r or d");
  }
}

void print_fit_summary(std::ostream &out, const FitResult &fit) {
  out << "EM: " << to_string(fit.termination) << " after " << fit.iterations
      << " iterations, log-likelihood " << fmt_loglik(fit.loglik_trace.back())
      << "\n";
  if (!fit.message.empty()) {
    out << "EM: " << fit.message << "\n";
  }
  for (Index a : fit.frozen_states) {
    out << "EM: state " << joint_label(a / fit.estimate.r(), a % fit.estimate.r())
        << " received no dwell time and was frozen\n";
  }
}

int fit_exit_code(const FitResult &fit) {
  switch (fit.termination) {
  case Termination::degenerate_state:
    return kExitDegenerate;
  case Termination::numerical_breakdown:
    return kExitNumerical;
  default:
    return kExitOk;
  }
}

int cmd_simulate(const Options &opt, std::ostream &out) {
  if ((opt.target_jumps > 0) == (opt.horizon > 0)) {
    throw CLI::ValidationError("simulate",
                               "exactly one of --T (> 0) or --target-jumps "
                               "(> 0) is required");
  }
  const GeneratorFile model = read_generator(opt.model);
  const Generator &g = model.generator;
  if (opt.x0 < 1 || opt.x0 > g.d()) {
    throw CLI::ValidationError("--x0", "must be in 1.." + std::to_string(g.d()));
  }
  const auto init = InitialDistribution::uniform(opt.x0 - 1, g.r());
  const JointPath joint =
      opt.target_jumps > 0
          ? simulate_until_jumps(g, init, opt.target_jumps, opt.seed)
          : simulate_joint(g, init, opt.horizon, opt.seed);
  PathFile file{observe(joint), {}};
  file.metadata["seed"] = std::to_string(opt.seed);
  if (!model.metadata.name.empty()) {
    file.metadata["generator"] = model.metadata.name;
  }
  write_text_file(opt.out, save_path(file));
  out << "simulated " << file.path.size() << " observable jumps over T = "
      << fmt(file.path.horizon) << " (" << joint.events.size()
      << " joint transitions, " << count_simultaneous_jumps(joint)
      << " simultaneous)\n";
  if (joint.tie_warnings > 0) {
    out << "warning: " << joint.tie_warnings
        << " tied event times were nudged by one ulp\n";
  }
  out << "path written to " << opt.out << "\n";
  return kExitOk;
}

int cmd_fit_em(const Options &opt, std::ostream &out) {
  const GeneratorFile init_file = read_generator(opt.init_model);
  const PathFile path = read_path(opt.path);
  const Generator &g0 = init_file.generator;
  path.path.check(g0.d());

  EmConfig cfg;
  cfg.rel_tol = opt.tol;
  cfg.max_iters = opt.max_iters;
  cfg.structural_mask = resolve_mask(init_file, opt.mask);
  const auto init = InitialDistribution::uniform(path.path.x0, g0.r());

  const auto start = Clock::now();
  const FitResult fit = bmc::fit(g0, init, path.path, cfg);
  const double elapsed = seconds_since(start);

  Json report = report_header("fit-em");
  report["inputs"] = {{"init_model", opt.init_model},
                      {"path", opt.path},
                      {"path_metadata", path.metadata},
                      {"jumps", path.path.size()},
                      {"horizon", path.path.horizon}};
  report["config"] = em_config_to_json(cfg);
  report["initial"] = generator_to_json(g0);
  report["fit"] = fit_result_to_json(fit);

  std::vector<std::string> headers{"initial", "estimate"};
  std::vector<const Matrix *> columns{&g0.matrix(), &fit.estimate.matrix()};
  std::optional<GeneratorFile> reference;
  if (!opt.reference.empty()) {
    reference = read_generator(opt.reference);
    require_same_shape(reference->generator, g0, "fit-em");
    report["errors"] = entry_errors(fit.estimate, reference->generator);
    headers.insert(headers.begin(), "reference");
    columns.insert(columns.begin(), &reference->generator.matrix());
  }
  if (opt.timings) {
    report["timings"] = {{"em_seconds", elapsed}};
  }

  print_entry_table(out, g0.r(), g0.d(), headers, columns);
  print_fit_summary(out, fit);
  out << "EM: " << fmt(elapsed) << " s\n";
  if (!opt.save_estimate.empty()) {
    GeneratorMetadata meta{"em-estimate", "fit-em on " + opt.path, std::nullopt};
    write_text_file(opt.save_estimate,
                    save_generator(fit.estimate, meta, cfg.structural_mask));
  }
  write_report(opt, report, out);
  return fit_exit_code(fit);
}

struct BaumRun {
  double delta;
  BaumResult result;
  std::optional<double> continuous_loglik;
  double seconds;
};

BaumRun run_baum(const Generator &g0, const ObservedPath &path, double delta,
                 const Options &opt) {
  DiscreteFitConfig cfg{opt.tol, opt.max_iters};
  const auto start = Clock::now();
  BaumResult result = fit_baum(g0, path, delta, cfg);
  const double elapsed = seconds_since(start);
  const auto init = InitialDistribution::uniform(path.x0, g0.r());
  auto ll = safe_loglik(result.recovered.generator, init, path);
  return {delta, std::move(result), ll, elapsed};
}

Json baum_run_json(const BaumRun &run, const std::optional<double> &initial_ll,
                   const Generator *reference, const Generator *em_estimate,
                   bool timings) {
  Json j = baum_result_to_json(run.result);
  j["continuous_loglik"] = loglik_json(run.continuous_loglik);
  j["below_initial_loglik"] = below(run.continuous_loglik, initial_ll);
  if (reference) {
    j["errors"] = entry_errors(run.result.recovered.generator, *reference);
  }
  if (em_estimate) {
    j["distance_to_em"] =
        max_abs_distance(run.result.recovered.generator.matrix(),
                         em_estimate->matrix());
  }
  if (timings) {
    j["seconds"] = run.seconds;
  }
  return j;
}

void print_baum_runs(std::ostream &out, const std::vector<BaumRun> &runs,
                     const std::optional<double> &initial_ll,
                     const Generator *em_estimate) {
  out << std::left << std::setw(10) << "delta" << std::right << std::setw(8)
      << "iters" << std::setw(32) << "recovery" << std::setw(18)
      << "loglik(H)" << std::setw(10) << "<init";
  if (em_estimate) {
    out << std::setw(14) << "dist_to_em";
  }
  out << "\n";
  for (const auto &run : runs) {
    out << std::left << std::setw(10) << fmt(run.delta) << std::right
        << std::setw(8) << run.result.discrete.iterations << std::setw(32)
        << to_string(run.result.recovered.report.method) << std::setw(18)
        << fmt_loglik(run.continuous_loglik) << std::setw(10)
        << (below(run.continuous_loglik, initial_ll) ? "yes" : "no");
    if (em_estimate) {
      out << std::setw(14)
          << fmt(max_abs_distance(run.result.recovered.generator.matrix(),
                                  em_estimate->matrix()));
    }
    out << "\n";
    if (!run.result.recovered.report.warning.empty()) {
      out << "  warning: " << run.result.recovered.report.warning << "\n";
    }
  }
  out << "initial log-likelihood: " << fmt_loglik(initial_ll) << "\n";
}

void print_baum_table(std::ostream &out, const Generator &shape,
                      const std::vector<BaumRun> &runs,
                      std::vector<std::string> headers,
                      std::vector<const Matrix *> columns) {
  for (const auto &run : runs) {
    headers.push_back("d=" + fmt(run.delta));
    columns.push_back(&run.result.recovered.generator.matrix());
  }
  print_entry_table(out, shape.r(), shape.d(), headers, columns);
}

int cmd_fit_baum(const Options &opt, std::ostream &out) {
  const GeneratorFile init_file = read_generator(opt.init_model);
  const PathFile path = read_path(opt.path);
  const Generator &g0 = init_file.generator;
  path.path.check(g0.d());
  const auto init = InitialDistribution::uniform(path.path.x0, g0.r());
  const auto initial_ll = safe_loglik(g0, init, path.path);

  std::optional<GeneratorFile> reference;
  if (!opt.reference.empty()) {
    reference = read_generator(opt.reference);
    require_same_shape(reference->generator, g0, "fit-baum");
  }

  std::vector<BaumRun> runs;
  for (double delta : opt.deltas) {
    runs.push_back(run_baum(g0, path.path, delta, opt));
  }

  Json report = report_header("fit-baum");
  report["inputs"] = {{"init_model", opt.init_model},
                      {"path", opt.path},
                      {"path_metadata", path.metadata},
                      {"jumps", path.path.size()},
                      {"horizon", path.path.horizon}};
  report["config"] = {{"rel_tol", opt.tol}, {"max_iters", opt.max_iters}};
  report["initial"] = generator_to_json(g0);
  report["initial_loglik"] = loglik_json(initial_ll);
  Json sweep = Json::array();
  for (const auto &run : runs) {
    sweep.push_back(baum_run_json(
        run, initial_ll, reference ? &reference->generator : nullptr, nullptr,
        opt.timings));
  }
  report["runs"] = std::move(sweep);

  std::vector<std::string> headers{"initial"};
  std::vector<const Matrix *> columns{&g0.matrix()};
  if (reference) {
    headers.insert(headers.begin(), "reference");
    columns.insert(columns.begin(), &reference->generator.matrix());
  }
  print_baum_table(out, g0, runs, headers, columns);
  print_baum_runs(out, runs, initial_ll, nullptr);
  write_report(opt, report, out);
  return kExitOk;
}

int cmd_analyze(const Options &opt, std::ostream &out) {
  const GeneratorFile file = read_generator(opt.model);
  const Generator &g = file.generator;
  const StationaryAnalysis stat = stationary(g);
  const StructureFlags flags = detect_structure(g);
  const auto q = underlying_is_markov(g);

  Json report = report_header("analyze");
  report["inputs"] = {{"model", opt.model}};
  report["generator"] = generator_to_json(g);
  report["pi"] = row_vector_json(stat.pi);
  report["nu"] = row_vector_json(stat.nu);
  report["embedded_chain"] = matrix_to_json(stat.embedded);
  report["structure"] = {{"general", flags.general}, {"mmmp", flags.mmmp},
                         {"bmap", flags.bmap},       {"map", flags.map},
                         {"mmpp", flags.mmpp}};
  report["underlying_is_markov"] = q.has_value();
  if (q) {
    report["underlying_generator"] = matrix_to_json(*q);
  }

  out << std::left << std::setw(10) << "state" << std::right << std::setw(14)
      << "pi" << std::setw(14) << "nu" << "\n";
  for (Index a = 0; a < g.states(); ++a) {
    out << std::left << std::setw(10) << joint_label(a / g.r(), a % g.r())
        << std::right << std::setw(14) << fmt(stat.pi(a)) << std::setw(14)
        << fmt(stat.nu(a)) << "\n";
  }

  Json dwell = Json::array();
  out << "\n" << std::left << std::setw(10) << "dwell" << std::right
      << std::setw(14) << "mean" << std::setw(14) << "variance"
      << std::setw(14) << "mass" << "\n";
  for (Index l = 0; l < g.d(); ++l) {
    const PhaseTypeDwell ph = dwell_distribution(g, stat, l);
    const double mean = ph.mean();
    const double variance = ph.moment(2) - mean * mean;
    out << std::left << std::setw(10) << ("X=" + std::to_string(l + 1))
        << std::right << std::setw(14) << fmt(mean) << std::setw(14)
        << fmt(variance) << std::setw(14) << fmt(ph.total_mass()) << "\n";
    dwell.push_back({{"observable", l + 1},
                     {"alpha", row_vector_json(ph.alpha)},
                     {"exit_vector", row_vector_json(ph.exit_vector.transpose())},
                     {"mean", mean},
                     {"second_moment", ph.moment(2)},
                     {"variance", variance},
                     {"total_mass", ph.total_mass()}});
  }
  report["dwell"] = std::move(dwell);

  out << "\nstructure: " << flags.to_string() << "\n";
  out << "underlying process Markov: " << (q ? "yes" : "no") << "\n";
  if (q) {
    out << *q << "\n";
  }
  write_report(opt, report, out);
  return kExitOk;
}

int cmd_loglik(const Options &opt, std::ostream &out) {
  const GeneratorFile file = read_generator(opt.model);
  const PathFile path = read_path(opt.path);
  const auto init = InitialDistribution::uniform(path.path.x0, file.generator.r());
  const double ll = log_likelihood(file.generator, init, path.path);
  out << "log-likelihood: " << fmt_loglik(ll) << " (" << path.path.size()
      << " jumps, T = " << fmt(path.path.horizon) << ")\n";
  Json report = report_header("loglik");
  report["inputs"] = {{"model", opt.model}, {"path", opt.path}};
  report["loglik"] = ll;
  write_report(opt, report, out);
  return kExitOk;
}

int cmd_experiment(const Options &opt, std::ostream &out) {
  const GeneratorFile truth_file = read_generator(opt.model);
  const GeneratorFile init_file = read_generator(opt.init_model);
  const Generator &truth = truth_file.generator;
  const Generator &g0 = init_file.generator;
  require_same_shape(truth, g0, "experiment");
  if (opt.experiment_jumps == 0) {
    throw CLI::ValidationError("--target-jumps", "must be > 0");
  }
  if (opt.x0 < 1 || opt.x0 > truth.d()) {
    throw CLI::ValidationError("--x0",
                               "must be in 1.." + std::to_string(truth.d()));
  }

  const auto sim_init = InitialDistribution::uniform(opt.x0 - 1, truth.r());
  const auto sim_start = Clock::now();
  const JointPath joint =
      simulate_until_jumps(truth, sim_init, opt.experiment_jumps, opt.seed);
  const ObservedPath path = observe(joint);
  const double sim_seconds = seconds_since(sim_start);
  if (!opt.save_path.empty()) {
    PathFile pf{path, {{"seed", std::to_string(opt.seed)}}};
    if (!truth_file.metadata.name.empty()) {
      pf.metadata["generator"] = truth_file.metadata.name;
    }
    write_text_file(opt.save_path, save_path(pf));
  }

  EmConfig cfg;
  cfg.rel_tol = opt.tol;
  cfg.max_iters = opt.max_iters;
  cfg.structural_mask = resolve_mask(init_file, opt.mask);
  const auto init = InitialDistribution::uniform(path.x0, g0.r());
  const auto em_start = Clock::now();
  const FitResult em = fit(g0, init, path, cfg);
  const double em_seconds = seconds_since(em_start);

  const auto initial_ll = safe_loglik(g0, init, path);
  const auto true_ll = safe_loglik(truth, init, path);
  std::vector<BaumRun> runs;
  for (double delta : opt.deltas) {
    runs.push_back(run_baum(g0, path, delta, opt));
  }

  Json report = report_header("experiment");
  report["inputs"] = {{"model", opt.model},
                      {"init_model", opt.init_model},
                      {"seed", opt.seed},
                      {"target_jumps", opt.experiment_jumps},
                      {"x0", opt.x0}};
  report["simulation"] = {{"jumps", path.size()},
                          {"horizon", path.horizon},
                          {"joint_transitions", joint.events.size()},
                          {"simultaneous_jumps", count_simultaneous_jumps(joint)},
                          {"tie_warnings", joint.tie_warnings}};
  report["true"] = generator_to_json(truth);
  report["initial"] = generator_to_json(g0);
  report["true_loglik"] = loglik_json(true_ll);
  report["initial_loglik"] = loglik_json(initial_ll);
  report["em"] = fit_result_to_json(em);
  report["em"]["config"] = em_config_to_json(cfg);
  report["em"]["errors"] = entry_errors(em.estimate, truth);
  Json sweep = Json::array();
  for (const auto &run : runs) {
    sweep.push_back(
        baum_run_json(run, initial_ll, &truth, &em.estimate, opt.timings));
  }
  report["baum"] = std::move(sweep);
  if (opt.timings) {
    report["timings"] = {{"simulate_seconds", sim_seconds},
                         {"em_seconds", em_seconds}};
  }

  out << "simulated " << path.size() << " observable jumps, T = "
      << fmt(path.horizon) << ", seed " << opt.seed << "\n\n";
  print_entry_table(out, truth.r(), truth.d(), {"true", "initial", "em"},
                    {&truth.matrix(), &g0.matrix(), &em.estimate.matrix()});
  print_fit_summary(out, em);
  out << "EM: max abs error " << fmt(max_abs_distance(em.estimate.matrix(),
                                                      truth.matrix()))
      << ", " << fmt(em_seconds) << " s\n";
  out << "true log-likelihood: " << fmt_loglik(true_ll) << "\n\n";
  if (!runs.empty()) {
    print_baum_table(out, truth, runs, {"true", "em"},
                     {&truth.matrix(), &em.estimate.matrix()});
    print_baum_runs(out, runs, initial_ll, &em.estimate);
  }
  write_report(opt, report, out);
  return fit_exit_code(em);
}

int report_error(std::ostream &err, const std::exception &e, int code) {
  err << "error: " << e.what() << "\n";
  return code;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err) {
  Options opt;
  CLI::App app{"Simulation and estimation for bivariate Markov chains", "bmc"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  auto add_tol = [&](CLI::App *cmd) {
    cmd->add_option("--tol", opt.tol, "relative log-likelihood tolerance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--max-iters", opt.max_iters, "iteration cap")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
  };

  auto *simulate = app.add_subcommand("simulate", "simulate a sample path");
  simulate->add_option("--model", opt.model, "generator file")->required();
  simulate->add_option("--seed", opt.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--T", opt.horizon, "time horizon");
  simulate->add_option("--target-jumps", opt.target_jumps,
                       "simulate until this many observable jumps");
  simulate->add_option("--x0", opt.x0, "initial observable state (1-based)")
      ->capture_default_str();
  simulate->add_option("--out", opt.out, "path file to write")->required();

  auto *fit_em = app.add_subcommand("fit-em", "fit a generator by EM");
  fit_em->add_option("--init-model", opt.init_model, "initial generator file")
      ->required();
  fit_em->add_option("--path", opt.path, "observed path file")->required();
  add_tol(fit_em);
  fit_em->add_flag("--mask", opt.mask,
                   "keep the zero pattern of the initial generator");
  fit_em->add_option("--reference", opt.reference,
                     "generator to report per-entry errors against");
  fit_em->add_option("--save-estimate", opt.save_estimate,
                     "write the estimate as a generator file");
  fit_em->add_flag("--timings", opt.timings, "include wall-clock times in the report");
  fit_em->add_option("--out", opt.out, "JSON report");

  auto *fit_baum = app.add_subcommand("fit-baum", "time-sampled Baum-Welch fit");
  fit_baum->add_option("--init-model", opt.init_model, "initial generator file")
      ->required();
  fit_baum->add_option("--path", opt.path, "observed path file")->required();
  fit_baum->add_option("--delta", opt.deltas, "sampling interval (repeatable)")
      ->required()
      ->check(CLI::PositiveNumber);
  add_tol(fit_baum);
  fit_baum->add_option("--reference", opt.reference,
                       "generator to report per-entry errors against");
  fit_baum->add_flag("--timings", opt.timings, "include wall-clock times in the report");
  fit_baum->add_option("--out", opt.out, "JSON report");

  auto *analyze = app.add_subcommand("analyze", "stationary and structural analysis");
  analyze->add_option("--model", opt.model, "generator file")->required();
  analyze->add_option("--out", opt.out, "JSON report");

  auto *loglik = app.add_subcommand("loglik", "log-likelihood of a path");
  loglik->add_option("--model", opt.model, "generator file")->required();
  loglik->add_option("--path", opt.path, "observed path file")->required();
  loglik->add_option("--out", opt.out, "JSON report");

  auto *experiment = app.add_subcommand(
      "experiment", "simulate from a true model and compare both estimators");
  experiment->add_option("--model", opt.model, "true generator file")->required();
  experiment->add_option("--init-model", opt.init_model, "initial generator file")
      ->required();
  experiment->add_option("--seed", opt.seed, "RNG seed")->capture_default_str();
  experiment->add_option("--target-jumps", opt.experiment_jumps, "observable jumps")
      ->capture_default_str();
  experiment->add_option("--x0", opt.x0, "initial observable state (1-based)")
      ->capture_default_str();
  experiment->add_option("--delta", opt.deltas,
                         "Baum sampling intervals (default 0.1 0.01 0.005 0.0025)")
      ->check(CLI::PositiveNumber);
  add_tol(experiment);
  experiment->add_flag("--mask", opt.mask,
                       "keep the zero pattern of the initial generator");
  experiment->add_option("--save-path", opt.save_path, "write the simulated path");
  experiment->add_flag("--timings", opt.timings, "include wall-clock times in the report");
  experiment->add_option("--out", opt.out, "JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (experiment->parsed() && opt.deltas.empty()) {
    opt.deltas = {0.1, 0.01, 0.005, 0.0025};
  }

  try {
    if (simulate->parsed()) {
      return cmd_simulate(opt, out);
    }
    if (fit_em->parsed()) {
      return cmd_fit_em(opt, out);
    }
    if (fit_baum->parsed()) {
      return cmd_fit_baum(opt, out);
    }
    if (analyze->parsed()) {
      return cmd_analyze(opt, out);
    }
    if (loglik->parsed()) {
      return cmd_loglik(opt, out);
    }
    return cmd_experiment(opt, out);
  } catch (const CLI::Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError &e) {
    return report_error(err, e, kExitParse);
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << "\n";
    for (const auto &v : e.violations()) {
      err << "  " << v << "\n";
    }
    return kExitValidation;
  } catch (const DegenerateState &e) {
    return report_error(err, e, kExitDegenerate);
  } catch (const ZeroLikelihood &e) {
    return report_error(err, e, kExitNumerical);
  } catch (const NumericalBreakdown &e) {
    return report_error(err, e, kExitNumerical);
  } catch (const LogmFailure &e) {
    return report_error(err, e, kExitNumerical);
  } catch (const NonUniqueStationary &e) {
    return report_error(err, e, kExitNumerical);
  } catch (const IoError &e) {
    return report_error(err, e, kExitIo);
  } catch (const Error &e) {
    return report_error(err, e, kExitUsage);
  }
}

} // namespace bmc
