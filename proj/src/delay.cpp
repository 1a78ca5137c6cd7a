#include "dspl/delay.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace dspl {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

DelayModel::DelayModel(DelayFamily family) : family_(family) {
  std::visit(Overloaded{
                 [](const ConstantDelay& c) { require(c.tau >= 0, "constant delay must be nonnegative"); },
                 [](const GeometricDelay& g) {
                   require(g.p > 0.0 && g.p <= 1.0, "geometric delay needs p in (0, 1]");
                 },
                 [](const PoissonDelay& p) {
                   require(p.mean > 0.0 && std::isfinite(p.mean), "poisson delay needs a positive mean");
                 },
             },
             family_);
  if (const auto* c = std::get_if<ConstantDelay>(&family_)) {
    truncation_ = c->tau;
  } else {
    truncation_ = static_cast<Index>(std::ceil(2.0 * nominal_mean() - 1e-9));
  }
}

DelayModel DelayModel::parse(const std::string& text) {
  const auto colon = text.find(':');
  require(colon != std::string::npos, "delay '" + text + "' must look like family:mean");
  const std::string family = text.substr(0, colon);
  double mean = 0.0;
  try {
    std::size_t used = 0;
    mean = std::stod(text.substr(colon + 1), &used);
    require(used == text.size() - colon - 1, "trailing characters");
  } catch (const std::exception&) {
    throw InvalidArgument("delay '" + text + "' has a non-numeric mean");
  }
  require(mean >= 0.0 && std::isfinite(mean), "delay mean must be nonnegative");
  if (family == "const" || family == "constant") {
    require(mean == std::floor(mean), "constant delay must be an integer");
    return constant(static_cast<Index>(mean));
  }
  if (family != "geom" && family != "geometric" && family != "poisson")
    throw InvalidArgument("unknown delay family '" + family + "' (expected const, geom, poisson)");
  if (mean == 0.0) return constant(0);
  if (family == "poisson") return poisson(mean);
  return geometric(1.0 / (mean + 1.0));
}

double DelayModel::nominal_mean() const {
  return std::visit(Overloaded{
                        [](const ConstantDelay& c) { return static_cast<double>(c.tau); },
                        [](const GeometricDelay& g) { return (1.0 - g.p) / g.p; },
                        [](const PoissonDelay& p) { return p.mean; },
                    },
                    family_);
}

std::vector<double> DelayModel::truncated_pmf() const {
  const Index t = truncation_;
  std::vector<double> pmf(static_cast<std::size_t>(t + 1), 0.0);
  if (const auto* c = std::get_if<ConstantDelay>(&family_)) {
    pmf[static_cast<std::size_t>(c->tau)] = 1.0;
    return pmf;
  }
  double below = 0.0;
  for (Index j = 0; j < t; ++j) {
    double pj = 0.0;
    if (const auto* g = std::get_if<GeometricDelay>(&family_)) {
      pj = g->p * std::pow(1.0 - g->p, static_cast<double>(j));
    } else {
      const double lam = std::get<PoissonDelay>(family_).mean;
      pj = std::exp(-lam + static_cast<double>(j) * std::log(lam) - std::lgamma(static_cast<double>(j) + 1.0));
    }
    pmf[static_cast<std::size_t>(j)] = pj;
    below += pj;
  }
  pmf[static_cast<std::size_t>(t)] = std::max(0.0, 1.0 - below);
  return pmf;
}

double DelayModel::truncated_mean() const {
  const auto pmf = truncated_pmf();
  double total = 0.0;
  for (std::size_t j = 0; j < pmf.size(); ++j) total += static_cast<double>(j) * pmf[j];
  return total;
}

double DelayModel::truncated_second_moment() const {
  const auto pmf = truncated_pmf();
  double total = 0.0;
  for (std::size_t j = 0; j < pmf.size(); ++j) total += static_cast<double>(j * j) * pmf[j];
  return total;
}

std::string DelayModel::describe() const {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const ConstantDelay& c) { out << "const:" << c.tau; },
                 [&](const GeometricDelay& g) { out << "geom(p=" << g.p << ")"; },
                 [&](const PoissonDelay& p) { out << "poisson(mean=" << p.mean << ")"; },
             },
             family_);
  out << " truncated at " << truncation_;
  return out.str();
}

Index DelayModel::sample(std::mt19937_64& rng) const {
  const Index raw = std::visit(Overloaded{
                                   [](const ConstantDelay& c) { return c.tau; },
                                   [&](const GeometricDelay& g) {
                                     if (g.p >= 1.0) return Index{0};
                                     return static_cast<Index>(std::geometric_distribution<long long>(g.p)(rng));
                                   },
                                   [&](const PoissonDelay& p) {
                                     return static_cast<Index>(std::poisson_distribution<long long>(p.mean)(rng));
                                   },
                               },
                               family_);
  return std::min(raw, truncation_);
}

HistoryBuffer::HistoryBuffer(Index capacity) : capacity_(capacity) {
  require(capacity >= 1, "history capacity must be at least 1");
}

void HistoryBuffer::push(Index k, Vector iterate, Index sample) {
  require(entries_.empty() || k == newest_ + 1, "history entries must be pushed in order");
  if (static_cast<Index>(entries_.size()) == capacity_) entries_.pop_front();
  entries_.push_back({std::move(iterate), sample});
  newest_ = k;
}

const HistoryBuffer::Entry& HistoryBuffer::lookup(Index k) const {
  if (entries_.empty() || k > newest_ || k < oldest())
    throw InvalidArgument("history lookup of iteration " + std::to_string(k) + " outside [" +
                          std::to_string(oldest()) + ", " + std::to_string(newest_) + "]");
  return entries_[static_cast<std::size_t>(k - oldest())];
}

std::mt19937_64 sample_stream(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 1u};
  return std::mt19937_64(seq);
}

std::mt19937_64 delay_stream(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 2u};
  return std::mt19937_64(seq);
}

RunRecord run_simulated(const ProblemInstance& instance, const AlgoConfig& config,
                        const DelayModel& delay, std::uint64_t seed, const SimulationOptions& options) {
  config.validate();
  require(options.check_stride >= 1, "check_stride must be at least 1");
  const auto started = std::chrono::steady_clock::now();
  require(options.stop_after >= 0, "stop_after must be nonnegative");
  const Index horizon = options.stop_after > 0 ? std::min(options.stop_after, config.horizon) : config.horizon;
  const Index m = instance.m();
  const Index record_stride = options.record_stride > 0 ? options.record_stride : m;

  auto samples = sample_stream(seed);
  auto delays = delay_stream(seed);
  std::uniform_int_distribution<Index> pick(0, m - 1);
  HistoryBuffer history(delay.truncation() + 1);

  RunRecord record;
  AlgoState state = AlgoState::start(instance.initial);
  StepTelemetry telemetry;

  const double f_star = objective_at_truth(instance);
  const double target = std::max(options.stop_factor * f_star, options.absolute_floor);
  const double f_initial = full_objective(instance, state.x_curr);
  double objective = f_initial;
  record.rows.push_back({0, f_initial, recovery_distance(instance, state.x_curr), 0, 0.0});
  if (options.keep_iterates) record.iterates.push_back(state.x_curr);

  Index k = 1;
  Index last_delay = 0;
  for (; k <= horizon; ++k) {
    const Index fresh = pick(samples);
    history.push(k, state.x_curr, fresh);
    const Index tau = delay.sample(delays);
    const Index issued = std::max({Index{1}, k - tau, history.oldest()});
    const auto& entry = history.lookup(issued);
    const Index sample = options.fresh_sample ? fresh : entry.sample;
    const DelayedInfo info = make_info(config.algorithm, instance, entry.iterate, sample, issued);
    last_delay = k - issued;
    record.count_delay(last_delay);

    try {
      state = step(config, std::move(state), info, instance, &telemetry);
    } catch (const DivergenceError& err) {
      record.summary.diverged = true;
      record.summary.diagnostic = err.what();
      break;
    }
    if (options.keep_iterates) record.iterates.push_back(state.x_curr);

    const bool checkpoint = k % options.check_stride == 0 || k == horizon;
    const bool recording = k % record_stride == 0 || k == horizon;
    if (checkpoint || recording) objective = full_objective(instance, state.x_curr);
    bool stop = false;
    if (checkpoint) {
      if (!std::isfinite(objective) || objective > options.divergence_factor * f_initial) {
        record.summary.diverged = true;
        record.summary.diagnostic = "objective " + std::to_string(objective) + " exceeded " +
                                    std::to_string(options.divergence_factor) + "x its initial value at k = " +
                                    std::to_string(k);
        stop = true;
      } else if (options.stop_early && objective <= target) {
        record.summary.stopped_early = true;
        stop = true;
      }
    }
    if (recording || stop)
      record.rows.push_back(
          {k, objective, recovery_distance(instance, state.x_curr), last_delay, telemetry.last_step_norm});
    if (stop) break;
  }

  record.summary.iterations_used = std::min(k, horizon);
  record.summary.boundary_hits = telemetry.boundary_hits;
  record.summary.final_objective = full_objective(instance, state.x_curr);
  record.summary.final_recovery = recovery_distance(instance, state.x_curr);
  record.summary.final_stationarity =
      options.compute_stationarity
          ? moreau_stationarity(instance, state.x_curr, config.rho, options.moreau).stationarity
          : std::numeric_limits<double>::quiet_NaN();
  record.final_point = std::move(state.x_curr);
  record.summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

}  // namespace dspl
