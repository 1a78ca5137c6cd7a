#include "cli.hpp"

#include "dspl/async_runtime.hpp"
#include "dspl/delay.hpp"
#include "dspl/kernels.hpp"
#include "dspl/metrics.hpp"
#include "dspl/model.hpp"
#include "dspl/sweep.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace dspl::cli {

namespace {

// Instance source shared by run, sweep and bench-async: either a saved file or
// generator flags.
struct ProblemFlags {
  std::string instance;
  std::string problem = "pr";
  Index m = 300;
  Index n = 100;
  double kappa = 1.0;
  double pfail = 0.0;
  double noise_sd = 5.0;
  std::string signal;
  std::string ball_mode = "per-block";
};

void add_problem_flags(CLI::App* app, ProblemFlags& f, bool with_instance_file) {
  if (with_instance_file)
    app->add_option("--instance", f.instance, "Load a saved instance instead of generating one")
        ->check(CLI::ExistingFile);
  app->add_option("--problem", f.problem, "pr | bd | hadamard")
      ->check(CLI::IsMember({"pr", "bd", "hadamard"}));
  app->add_option("--m", f.m, "Measurements")->check(CLI::PositiveNumber);
  app->add_option("--n", f.n, "Signal dimension")->check(CLI::PositiveNumber);
  app->add_option("--kappa", f.kappa, "Conditioning parameter (>= 1)");
  app->add_option("--pfail", f.pfail, "Corrupted fraction in [0, 1)");
  app->add_option("--noise-sd", f.noise_sd, "Standard deviation of the corruption noise");
  app->add_option("--signal", f.signal, "Signal file (one value per line) for --problem hadamard");
  app->add_option("--ball-mode", f.ball_mode, "Blind deconvolution ball: per-block | joint")
      ->check(CLI::IsMember({"per-block", "joint"}));
}

ProblemInstance build_instance(const ProblemFlags& f, std::uint64_t seed) {
  if (!f.instance.empty()) {
    ProblemInstance inst = load_instance(f.instance);
    validate_instance(inst);
    return inst;
  }
  if (f.problem == "pr") {
    PhaseRetrievalParams p;
    p.m = f.m;
    p.n = f.n;
    p.kappa = f.kappa;
    p.p_fail = f.pfail;
    p.noise_sd = f.noise_sd;
    p.seed = seed;
    return generate_phase_retrieval(p);
  }
  if (f.problem == "bd") {
    BlindDeconvolutionParams p;
    p.m = f.m;
    p.n = f.n;
    p.kappa = f.kappa;
    p.p_fail = f.pfail;
    p.noise_sd = f.noise_sd;
    p.seed = seed;
    p.ball_mode = f.ball_mode == "joint" ? BallMode::Joint : BallMode::PerBlock;
    return generate_blind_deconvolution(p);
  }
  require(!f.signal.empty(), "--problem hadamard needs --signal");
  return generate_hadamard_instance(load_signal(f.signal), f.pfail, seed);
}

std::vector<Algorithm> parse_algorithms(const std::vector<std::string>& names) {
  std::vector<Algorithm> out;
  for (const auto& name : names) out.push_back(parse_algorithm(name));
  return out;
}

BusyWorkMode parse_busy_mode(const std::string& text) {
  if (text == "compute") return BusyWorkMode::Compute;
  if (text == "latency") return BusyWorkMode::Latency;
  throw InvalidArgument("unknown busy-work mode '" + text + "'");
}

void print_summary_line(std::ostream& out, const RunRecord& record) {
  const auto& s = record.summary;
  out << std::setprecision(6) << "iterations_used=" << s.iterations_used << " stopped_early=" << s.stopped_early
      << " diverged=" << s.diverged << " boundary_hits=" << s.boundary_hits
      << " final_objective=" << s.final_objective << " final_recovery=" << s.final_recovery;
  if (!std::isnan(s.final_stationarity)) out << " final_stationarity=" << s.final_stationarity;
  out << " mean_delay=" << record.mean_delay() << " wall_seconds=" << s.wall_seconds;
  if (!s.diagnostic.empty()) out << " diagnostic=\"" << s.diagnostic << '"';
  out << '\n';
}

void print_cells(std::ostream& out, const std::vector<SummaryCell>& cells) {
  out << std::left << std::setw(7) << "algo" << std::setw(10) << "tau_mean" << std::setw(10) << "alpha"
      << std::setw(8) << "beta" << std::setw(14) << "mean_iters" << std::setw(6) << "runs"
      << "diverged\n";
  for (const auto& c : cells)
    out << std::setw(7) << c.algo << std::setw(10) << c.tau_mean << std::setw(10) << c.alpha << std::setw(8)
        << c.beta << std::setw(14) << std::setprecision(8) << c.mean_iters << std::setw(6) << c.runs
        << c.diverged_count << '\n';
  out << std::right;
}

// ---------------------------------------------------------------------------

struct GenerateFlags {
  ProblemFlags problem;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_generate(const GenerateFlags& f, std::ostream& out) {
  const ProblemInstance inst = build_instance(f.problem, f.seed);
  validate_instance(inst);
  save_instance(inst, f.out);
  out << "wrote " << f.out << ": " << to_string(inst.kind) << " m=" << inst.m() << " n=" << inst.n()
      << " corrupted=" << inst.corrupted_count() << " f_star=" << std::setprecision(17)
      << objective_at_truth(inst) << '\n';
  return kExitOk;
}

struct RunFlags {
  ProblemFlags problem;
  std::string algo = "dspl";
  std::string delay = "const:0";
  double alpha = 1.0;
  double beta = 0.0;
  std::string schedule = "experiment";
  Index horizon = 0;
  std::uint64_t seed = 1;
  double stop_factor = 1.5;
  double divergence_factor = 1e6;
  bool no_stop = false;
  bool fresh_sample = false;
  std::string mode = "sim";
  Index workers = 1;
  Index queue_capacity = 0;
  double busy_us = 0.0;
  std::string busy_mode = "compute";
  Index record_stride = 0;
  bool stationarity = false;
  std::string out;
};

int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  const Algorithm algo = parse_algorithm(f.algo);
  require(f.beta == 0.0 || uses_momentum(algo),
          "--beta " + std::to_string(f.beta) + " conflicts with --algo " + f.algo + " (use dsepl or dsegd)");
  const ProblemInstance inst = build_instance(f.problem, f.seed);
  const AlgoConfig config =
      make_config(inst, algo, f.alpha, f.beta, f.horizon, parse_schedule_kind(f.schedule));

  RunRecord record;
  if (f.mode == "sim") {
    const DelayModel delay = DelayModel::parse(f.delay);
    SimulationOptions opt;
    opt.stop_factor = f.stop_factor;
    opt.divergence_factor = f.divergence_factor;
    opt.stop_early = !f.no_stop;
    opt.fresh_sample = f.fresh_sample;
    opt.record_stride = f.record_stride;
    opt.compute_stationarity = f.stationarity;
    record = run_simulated(inst, config, delay, f.seed, opt);
  } else {
    require(f.delay == "const:0", "--delay applies to --mode sim only; async delays come from the workers");
    RuntimeConfig rc;
    rc.n_workers = f.workers;
    rc.algo = config;
    rc.queue_capacity = f.queue_capacity > 0 ? f.queue_capacity : f.workers;
    rc.busy = {parse_busy_mode(f.busy_mode), f.busy_us};
    rc.record_stride = f.record_stride;
    AsyncRunRecord run = run_async(inst, rc, f.seed, config.horizon);
    record = std::move(run.record);
    if (f.stationarity)
      record.summary.final_stationarity =
          moreau_stationarity(inst, record.final_point, config.rho).stationarity;
  }

  if (f.out.empty()) {
    write_csv(record, out);
    print_summary_line(err, record);
  } else {
    write_csv(record, f.out);
    print_summary_line(out, record);
  }
  return record.summary.diverged ? kExitDiverged : kExitOk;
}

struct SweepFlags {
  ProblemFlags problem;
  std::vector<std::string> algos{"dspl", "dsgd"};
  std::string delay_family = "poisson";
  std::vector<double> delay_means{0, 5, 10, 20};
  std::vector<double> alphas{1.0};
  std::vector<double> betas{0.0};
  Index seeds = 20;
  std::uint64_t first_seed = 1;
  Index horizon = 0;
  std::string schedule = "experiment";
  double stop_factor = 1.5;
  double divergence_factor = 1e6;
  bool fresh_sample = false;
  Index threads = std::max(1u, std::thread::hardware_concurrency());
  std::string outcomes = "outcomes.csv";
  std::string summary = "summary.csv";
  std::string runs_dir;
};

int cmd_sweep(const SweepFlags& f, std::ostream& out, std::ostream& err) {
  SweepGrid grid;
  grid.algos = parse_algorithms(f.algos);
  grid.delay_family = f.delay_family;
  grid.delay_means = f.delay_means;
  grid.alphas = f.alphas;
  grid.betas = f.betas;
  grid.seeds = f.seeds;
  grid.first_seed = f.first_seed;
  grid.horizon = f.horizon;
  grid.schedule = parse_schedule_kind(f.schedule);
  grid.options.stop_factor = f.stop_factor;
  grid.options.divergence_factor = f.divergence_factor;
  grid.options.fresh_sample = f.fresh_sample;

  if (!f.runs_dir.empty()) std::filesystem::create_directories(f.runs_dir);
  std::function<void(std::size_t, const SweepJob&, const RunRecord&)> on_record;
  if (!f.runs_dir.empty())
    on_record = [&](std::size_t, const SweepJob& job, const RunRecord& record) {
      std::ostringstream name;
      name << to_string(job.algo) << "_tau" << job.tau_mean << "_a" << job.alpha << "_b" << job.beta << "_s"
           << job.seed << ".csv";
      write_csv(record, (std::filesystem::path(f.runs_dir) / name.str()).string());
    };

  const bool per_seed = f.problem.instance.empty();
  const SweepResult result =
      run_sweep(grid, [&](std::uint64_t seed) { return build_instance(f.problem, seed); }, per_seed, f.threads,
                on_record);
  write_outcomes_csv(result.outcomes, f.outcomes);
  const auto cells = summarize(result.outcomes);
  write_summary_csv(cells, f.summary);
  print_cells(out, cells);
  out << result.outcomes.size() << " runs, " << cells.size() << " cells, " << result.diverged << " diverged\n";
  if (2 * result.diverged > static_cast<Index>(result.outcomes.size())) {
    err << "more than half of the runs diverged\n";
    return kExitDiverged;
  }
  return kExitOk;
}

struct BenchFlags {
  ProblemFlags problem;
  std::string algo = "dspl";
  double alpha = 0.5;
  double beta = 0.0;
  std::vector<Index> workers{1, 2, 4, 8};
  Index horizon = 2000;
  double busy_us = 200.0;
  std::string busy_mode = "latency";
  std::uint64_t seed = 1;
  std::string timing = "timing.csv";
};

int cmd_bench(const BenchFlags& f, std::ostream& out) {
  const Algorithm algo = parse_algorithm(f.algo);
  require(f.beta == 0.0 || uses_momentum(algo), "--beta conflicts with --algo " + f.algo);
  require(!f.workers.empty(), "--workers needs at least one count");
  const ProblemInstance inst = build_instance(f.problem, f.seed);
  const AlgoConfig config = make_config(inst, algo, f.alpha, f.beta, f.horizon);
  std::vector<AsyncRunRecord> runs;
  out << "workers  wall_seconds  updates_per_second  final_recovery\n";
  for (Index w : f.workers) {
    RuntimeConfig rc;
    rc.n_workers = w;
    rc.algo = config;
    rc.queue_capacity = w;
    rc.busy = {parse_busy_mode(f.busy_mode), f.busy_us};
    runs.push_back(run_async(inst, rc, f.seed, config.horizon));
    const auto& r = runs.back();
    out << std::setw(7) << w << std::setw(14) << std::setprecision(4) << r.record.summary.wall_seconds
        << std::setw(20) << r.updates_per_second << std::setw(16) << r.record.summary.final_recovery << '\n';
  }
  write_timing_csv(runs, f.timing);
  return kExitOk;
}

struct ReportFlags {
  std::string outcomes;
  std::string summary;
  std::string kernel;
};

int cmd_report(const ReportFlags& f, std::ostream& out) {
  require(!f.outcomes.empty() || !f.kernel.empty(), "report needs --outcomes and/or --kernel");
  if (!f.outcomes.empty()) {
    const auto cells = summarize(read_outcomes_csv(f.outcomes));
    if (!f.summary.empty()) write_summary_csv(cells, f.summary);
    print_cells(out, cells);
  }
  if (!f.kernel.empty()) {
    const auto growth = parse_growth_spec(f.kernel);
    out << PolynomialKernel::from_growth(growth).describe() << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Delayed stochastic prox-linear and subgradient experiments"};
  app.name("dspl");
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML/INI file with one key per flag (flags take precedence)");
  app.require_subcommand(1);

  GenerateFlags gen;
  auto* generate = app.add_subcommand("generate", "Write a problem instance");
  add_problem_flags(generate, gen.problem, false);
  generate->add_option("--seed", gen.seed, "Generator seed");
  generate->add_option("--out", gen.out, "Output path")->required();

  RunFlags rf;
  auto* run_cmd = app.add_subcommand("run", "One configuration; writes the run CSV");
  add_problem_flags(run_cmd, rf.problem, true);
  run_cmd->add_option("--algo", rf.algo, "dspl | dsepl | dsgd | dsegd");
  run_cmd->add_option("--delay", rf.delay, "Simulated delay family:mean (const, geom, poisson)");
  run_cmd->add_option("--alpha", rf.alpha, "Stepsize parameter")->check(CLI::PositiveNumber);
  run_cmd->add_option("--beta", rf.beta, "Momentum for dsepl/dsegd")->check(CLI::Range(0.0, 0.999999));
  run_cmd->add_option("--schedule", rf.schedule, "experiment: sqrt(K/alpha); theory: 2 lambda + sqrt(K)/alpha")
      ->check(CLI::IsMember({"experiment", "theory"}));
  run_cmd->add_option("--horizon", rf.horizon, "Iterations K (0 = 400 epochs)")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--seed", rf.seed, "Seed for the instance and the run");
  run_cmd->add_option("--stop-factor", rf.stop_factor, "Stop once f <= factor * f(x*)");
  run_cmd->add_option("--divergence-factor", rf.divergence_factor, "Declare divergence once f exceeds this multiple of f(x^1)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_flag("--no-stop", rf.no_stop, "Run the full horizon");
  run_cmd->add_flag("--fresh-sample", rf.fresh_sample, "Draw a fresh sample at the stale point");
  run_cmd->add_option("--mode", rf.mode, "sim | async")->check(CLI::IsMember({"sim", "async"}));
  run_cmd->add_option("--workers", rf.workers, "Async worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--queue-capacity", rf.queue_capacity, "Async queue capacity (0 = workers)");
  run_cmd->add_option("--busy-us", rf.busy_us, "Per-message worker busy-work in microseconds");
  run_cmd->add_option("--busy-mode", rf.busy_mode, "compute | latency")
      ->check(CLI::IsMember({"compute", "latency"}));
  run_cmd->add_option("--record-stride", rf.record_stride, "Rows every this many iterations (0 = per epoch)");
  run_cmd->add_flag("--stationarity", rf.stationarity, "Report the Moreau stationarity of the final point");
  run_cmd->add_option("--out", rf.out, "CSV path (stdout when empty)");

  SweepFlags sf;
  auto* sweep = app.add_subcommand("sweep", "Cartesian delay/stepsize sweep over seeds");
  add_problem_flags(sweep, sf.problem, true);
  sweep->add_option("--algos", sf.algos, "Algorithms")->delimiter(',');
  sweep->add_option("--delay-family", sf.delay_family, "const | geom | poisson");
  sweep->add_option("--delay-means", sf.delay_means, "Delay means")->delimiter(',');
  sweep->add_option("--alphas", sf.alphas, "Stepsize parameters")->delimiter(',');
  sweep->add_option("--betas", sf.betas, "Momentum values")->delimiter(',');
  sweep->add_option("--seeds", sf.seeds, "Trials per cell")->check(CLI::PositiveNumber);
  sweep->add_option("--first-seed", sf.first_seed, "Seed of the first trial");
  sweep->add_option("--horizon", sf.horizon, "Iterations K (0 = 400 epochs)")->check(CLI::NonNegativeNumber);
  sweep->add_option("--schedule", sf.schedule, "experiment | theory")
      ->check(CLI::IsMember({"experiment", "theory"}));
  sweep->add_option("--stop-factor", sf.stop_factor, "Stop once f <= factor * f(x*)");
  sweep->add_option("--divergence-factor", sf.divergence_factor, "Declare divergence once f exceeds this multiple of f(x^1)")
      ->check(CLI::PositiveNumber);
  sweep->add_flag("--fresh-sample", sf.fresh_sample, "Draw a fresh sample at the stale point");
  sweep->add_option("--threads", sf.threads, "Parallel runs")->check(CLI::PositiveNumber);
  sweep->add_option("--outcomes", sf.outcomes, "Per-run outcomes CSV");
  sweep->add_option("--summary", sf.summary, "Per-cell summary CSV");
  sweep->add_option("--runs-dir", sf.runs_dir, "Directory for per-run CSVs (skipped when empty)");

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench-async", "Async throughput against the worker count");
  add_problem_flags(bench, bf.problem, true);
  bench->add_option("--algo", bf.algo, "dspl | dsepl | dsgd | dsegd");
  bench->add_option("--alpha", bf.alpha, "Stepsize parameter")->check(CLI::PositiveNumber);
  bench->add_option("--beta", bf.beta, "Momentum for dsepl/dsegd")->check(CLI::Range(0.0, 0.999999));
  bench->add_option("--workers", bf.workers, "Worker counts")->delimiter(',');
  bench->add_option("--horizon", bf.horizon, "Updates per run")->check(CLI::PositiveNumber);
  bench->add_option("--busy-us", bf.busy_us, "Per-message worker busy-work in microseconds");
  bench->add_option("--busy-mode", bf.busy_mode, "compute | latency")
      ->check(CLI::IsMember({"compute", "latency"}));
  bench->add_option("--seed", bf.seed, "Seed for the instance and the workers");
  bench->add_option("--timing", bf.timing, "Timing CSV path");

  ReportFlags rp;
  auto* report = app.add_subcommand("report", "Re-aggregate a sweep, or describe a kernel");
  report->add_option("--outcomes", rp.outcomes, "Outcomes CSV from sweep")->check(CLI::ExistingFile);
  report->add_option("--summary", rp.summary, "Write the recomputed summary here");
  report->add_option("--kernel", rp.kernel, "Growth terms k:p,... for the Bregman kernel");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen, out);
    if (run_cmd->parsed()) return cmd_run(rf, out, err);
    if (sweep->parsed()) return cmd_sweep(sf, out, err);
    if (bench->parsed()) return cmd_bench(bf, out);
    return cmd_report(rp, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace dspl::cli
