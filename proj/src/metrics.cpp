#include "dspl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace dspl {

void RunRecord::count_delay(Index tau) {
  if (tau < 0) throw InvalidArgument("observed delay is negative");
  if (static_cast<Index>(delay_counts.size()) <= tau) delay_counts.resize(static_cast<std::size_t>(tau + 1), 0);
  ++delay_counts[static_cast<std::size_t>(tau)];
}

double RunRecord::mean_delay() const {
  double total = 0.0, count = 0.0;
  for (std::size_t t = 0; t < delay_counts.size(); ++t) {
    total += static_cast<double>(t) * static_cast<double>(delay_counts[t]);
    count += static_cast<double>(delay_counts[t]);
  }
  return count > 0.0 ? total / count : 0.0;
}

double RunRecord::second_moment_delay() const {
  double total = 0.0, count = 0.0;
  for (std::size_t t = 0; t < delay_counts.size(); ++t) {
    total += static_cast<double>(t * t) * static_cast<double>(delay_counts[t]);
    count += static_cast<double>(delay_counts[t]);
  }
  return count > 0.0 ? total / count : 0.0;
}

CompositeLoss composite_loss(const ProblemInstance& instance) {
  CompositeLoss loss;
  loss.terms = instance.m();
  loss.dim = instance.dim();
  loss.weak_convexity = weak_convexity_estimate(instance);
  loss.eval = [&instance](const Vector& x, Index i) { return inner_eval(instance, x, i); };
  return loss;
}

double default_rho(const ProblemInstance& instance) { return 2.0 * weak_convexity_estimate(instance) + 1.0; }

namespace {

// Solves  min_y (1/m) sum_i |<g_i, y> + e_i| + (mu/2)||y - c||^2  by dual
// coordinate ascent over lambda in [-1/m, 1/m]^m, where y = c - G^T lambda / mu.
// The duality gap is sum_i (|r_i|/m - lambda_i r_i) with r = G y + e.
Vector solve_l1_quadratic(const RowMatrix& g, const Vector& e, const Vector& c, double mu, Vector& lambda) {
  const Index m = g.rows();
  const double bound = 1.0 / static_cast<double>(m);
  Vector y = c - g.transpose() * lambda / mu;
  const Vector row_sq = g.rowwise().squaredNorm();
  for (int sweep = 0; sweep < 2000; ++sweep) {
    for (Index i = 0; i < m; ++i) {
      if (row_sq(i) == 0.0) continue;
      const double r = g.row(i).dot(y) + e(i);
      const double updated = std::clamp(lambda(i) + mu * r / row_sq(i), -bound, bound);
      const double change = updated - lambda(i);
      if (change != 0.0) {
        y.noalias() -= (change / mu) * g.row(i).transpose();
        lambda(i) = updated;
      }
    }
    const Vector r = g * y + e;
    const double primal_l1 = r.cwiseAbs().sum() * bound;
    const double gap = primal_l1 - lambda.dot(r);
    if (gap <= 1e-15 * std::max(1.0, primal_l1)) break;
  }
  return y;
}

}  // namespace

MoreauResult moreau_stationarity(const CompositeLoss& loss, const Vector& x, double rho,
                                 const MoreauOptions& options) {
  require(x.allFinite(), "moreau_stationarity needs a finite point");
  require(rho > 0.0 && std::isfinite(rho), "rho must be positive");
  require(loss.terms >= 1 && x.size() == loss.dim, "point dimension does not match the loss");
  const double gamma = options.inner_gamma >= 0.0 ? options.inner_gamma : rho + 2.0 * loss.weak_convexity;
  const double mu = rho + gamma;

  RowMatrix grads(loss.terms, loss.dim);
  Vector offsets(loss.terms);
  Vector lambda = Vector::Zero(loss.terms);
  MoreauResult out;
  Vector y = x;
  for (Index t = 0; t < options.inner_iters; ++t) {
    for (Index i = 0; i < loss.terms; ++i) {
      InnerValue inner = loss.eval(y, i);
      grads.row(i) = inner.gradient.transpose();
      offsets(i) = inner.value - inner.gradient.dot(y);
    }
    const Vector center = (rho * x + gamma * y) / mu;
    Vector next = solve_l1_quadratic(grads, offsets, center, mu, lambda);
    out.last_movement = (next - y).norm();
    y = std::move(next);
    out.iterations = t + 1;
    if (out.last_movement <= options.inner_tol) break;
  }
  out.stationarity = rho * rho * (x - y).squaredNorm();
  out.prox_point = std::move(y);
  return out;
}

MoreauResult moreau_stationarity(const ProblemInstance& instance, const Vector& x, double rho,
                                 const MoreauOptions& options) {
  return moreau_stationarity(composite_loss(instance), x, rho, options);
}

double recovery_distance(const ProblemInstance& instance, const Vector& point) {
  require(instance.truth.size() == instance.dim(), "instance has no ground truth");
  require(point.size() == instance.dim(), "point dimension mismatch");
  if (instance.kind == ProblemKind::PhaseRetrieval)
    return std::min((point - instance.truth).norm(), (point + instance.truth).norm());
  const Index n = instance.n();
  const auto x = point.head(n), y = point.tail(n);
  const auto xs = instance.truth.head(n), ys = instance.truth.tail(n);
  double diff = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double d = x(i) * y(j) - xs(i) * ys(j);
      diff += d * d;
    }
  return std::sqrt(diff) / (xs.norm() * ys.norm());
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << std::setprecision(17);
  return out;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_real(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

void write_real(std::ostream& out, double v) {
  if (std::isnan(v)) out << "nan";
  else if (std::isinf(v)) out << (v > 0 ? "inf" : "-inf");
  else out << v;
}

std::vector<std::vector<std::string>> read_table(const std::string& path, const std::string& header,
                                                 std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw InvalidArgument("'" + path + "' does not start with header '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != columns) throw InvalidArgument("'" + path + "': malformed row '" + line + "'");
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

void write_csv(const RunRecord& record, std::ostream& out) {
  const auto precision = out.precision(17);
  out << kRunCsvHeader << '\n';
  for (const auto& row : record.rows) {
    out << row.k << ',';
    write_real(out, row.objective);
    out << ',';
    write_real(out, row.recovery);
    out << ',' << row.delay << ',';
    write_real(out, row.step_norm);
    out << '\n';
  }
  out.precision(precision);
}

void write_csv(const RunRecord& record, const std::string& path) {
  auto out = open_for_write(path);
  write_csv(record, out);
  if (!out) throw InvalidArgument("failed writing '" + path + "'");
}

std::vector<RunRow> read_csv(const std::string& path) {
  std::vector<RunRow> rows;
  for (const auto& f : read_table(path, kRunCsvHeader, 5))
    rows.push_back({std::stoll(f[0]), parse_real(f[1]), parse_real(f[2]), std::stoll(f[3]), parse_real(f[4])});
  return rows;
}

std::vector<SummaryCell> summarize(const std::vector<RunOutcome>& outcomes) {
  using Key = std::tuple<std::string, double, double, double>;
  std::vector<SummaryCell> cells;
  std::map<Key, std::size_t> where;
  std::vector<double> sums;
  std::vector<Index> finished;
  for (const auto& o : outcomes) {
    const Key key{o.algo, o.tau_mean, o.alpha, o.beta};
    auto [it, inserted] = where.try_emplace(key, cells.size());
    if (inserted) {
      cells.push_back({o.algo, o.tau_mean, o.alpha, o.beta, 0.0, 0, 0});
      sums.push_back(0.0);
      finished.push_back(0);
    }
    const std::size_t c = it->second;
    ++cells[c].runs;
    if (o.diverged) {
      ++cells[c].diverged_count;
    } else {
      sums[c] += static_cast<double>(o.iterations_used);
      ++finished[c];
    }
  }
  for (std::size_t c = 0; c < cells.size(); ++c)
    cells[c].mean_iters = finished[c] > 0 ? sums[c] / static_cast<double>(finished[c])
                                          : std::numeric_limits<double>::quiet_NaN();
  return cells;
}

void write_summary_csv(const std::vector<SummaryCell>& cells, const std::string& path) {
  auto out = open_for_write(path);
  out << kSummaryCsvHeader << '\n';
  for (const auto& c : cells) {
    out << c.algo << ',';
    write_real(out, c.tau_mean);
    out << ',';
    write_real(out, c.alpha);
    out << ',';
    write_real(out, c.beta);
    out << ',';
    write_real(out, c.mean_iters);
    out << ',' << c.diverged_count << '\n';
  }
  if (!out) throw InvalidArgument("failed writing '" + path + "'");
}

std::vector<SummaryCell> read_summary_csv(const std::string& path) {
  std::vector<SummaryCell> cells;
  for (const auto& f : read_table(path, kSummaryCsvHeader, 6)) {
    SummaryCell c;
    c.algo = f[0];
    c.tau_mean = parse_real(f[1]);
    c.alpha = parse_real(f[2]);
    c.beta = parse_real(f[3]);
    c.mean_iters = parse_real(f[4]);
    c.diverged_count = std::stoll(f[5]);
    cells.push_back(std::move(c));
  }
  return cells;
}

void write_outcomes_csv(const std::vector<RunOutcome>& outcomes, const std::string& path) {
  auto out = open_for_write(path);
  out << kOutcomeCsvHeader << '\n';
  for (const auto& o : outcomes) {
    out << o.algo << ',';
    write_real(out, o.tau_mean);
    out << ',';
    write_real(out, o.alpha);
    out << ',';
    write_real(out, o.beta);
    out << ',' << o.seed << ',' << o.iterations_used << ',' << int{o.stopped_early} << ',' << int{o.diverged}
        << '\n';
  }
  if (!out) throw InvalidArgument("failed writing '" + path + "'");
}

std::vector<RunOutcome> read_outcomes_csv(const std::string& path) {
  std::vector<RunOutcome> outcomes;
  for (const auto& f : read_table(path, kOutcomeCsvHeader, 8)) {
    RunOutcome o;
    o.algo = f[0];
    o.tau_mean = parse_real(f[1]);
    o.alpha = parse_real(f[2]);
    o.beta = parse_real(f[3]);
    o.seed = std::stoull(f[4]);
    o.iterations_used = std::stoll(f[5]);
    o.stopped_early = f[6] == "1";
    o.diverged = f[7] == "1";
    outcomes.push_back(std::move(o));
  }
  return outcomes;
}

}  // namespace dspl
