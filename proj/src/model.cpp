#include "dspl/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace dspl {

std::string to_string(ProblemKind kind) {
  return kind == ProblemKind::PhaseRetrieval ? "pr" : "bd";
}

ProblemKind parse_problem_kind(const std::string& text) {
  if (text == "pr" || text == "phase-retrieval") return ProblemKind::PhaseRetrieval;
  if (text == "bd" || text == "blind-deconvolution") return ProblemKind::BlindDeconvolution;
  throw InvalidArgument("unknown problem kind '" + text + "' (expected pr or bd)");
}

Ball ProblemInstance::ball() const {
  const bool blocked = kind == ProblemKind::BlindDeconvolution && ball_mode == BallMode::PerBlock;
  return Ball{radius, blocked ? n() : 0};
}

Index ProblemInstance::corrupted_count() const {
  return static_cast<Index>(std::count(corrupted.begin(), corrupted.end(), true));
}

namespace {

using Rng = std::mt19937_64;

RowMatrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

Vector gaussian_vector(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(n);
  for (Index j = 0; j < n; ++j) out(j) = normal(rng);
  return out;
}

Vector unit_gaussian(Index n, Rng& rng) {
  Vector v = gaussian_vector(n, rng);
  return v / v.norm();
}

Vector condition_diagonal(Index n, double kappa, Rng& rng) {
  std::uniform_real_distribution<double> uniform(1.0 / kappa, 1.0);
  Vector d(n);
  for (Index j = 0; j < n; ++j) d(j) = kappa == 1.0 ? 1.0 : uniform(rng);
  return d;
}

// Uniformly random floor(p_fail * m)-subset of the rows.
std::vector<bool> choose_corrupted(Index m, double p_fail, Rng& rng) {
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto count = static_cast<Index>(std::floor(p_fail * static_cast<double>(m)));
  std::vector<bool> mask(static_cast<std::size_t>(m), false);
  for (Index i = 0; i < count; ++i) mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
  return mask;
}

void check_common(Index m, Index n, double kappa, double p_fail, double noise_sd) {
  require(n >= 1, "n must be at least 1");
  require(m >= n, "m must be at least n");
  require(kappa >= 1.0 && std::isfinite(kappa), "kappa must be a finite value >= 1");
  require(p_fail >= 0.0 && p_fail <= 1.0, "p_fail must lie in [0, 1]");
  require(noise_sd >= 0.0 && std::isfinite(noise_sd), "noise_sd must be nonnegative");
}

bool is_power_of_two(Index n) { return n >= 1 && (n & (n - 1)) == 0; }

void check_sample(const ProblemInstance& instance, Index sample) {
  if (sample < 0 || sample >= instance.m())
    throw InvalidArgument("sample index " + std::to_string(sample) + " out of range [0, " +
                          std::to_string(instance.m()) + ")");
}

}  // namespace

ProblemInstance generate_phase_retrieval(const PhaseRetrievalParams& p) {
  check_common(p.m, p.n, p.kappa, p.p_fail, p.noise_sd);
  Rng rng(p.seed);
  ProblemInstance inst;
  inst.kind = ProblemKind::PhaseRetrieval;
  inst.seed = p.seed;
  inst.kappa = p.kappa;
  inst.p_fail = p.p_fail;
  inst.noise_sd = p.noise_sd;

  const RowMatrix q = gaussian_matrix(p.m, p.n, rng);
  const Vector d = condition_diagonal(p.n, p.kappa, rng);
  inst.sensing = q * d.asDiagonal();
  inst.truth = gaussian_vector(p.n, rng);
  inst.measurements = (inst.sensing * inst.truth).array().square().matrix();

  inst.corrupted = choose_corrupted(p.m, p.p_fail, rng);
  std::normal_distribution<double> noise(0.0, p.noise_sd);
  for (Index i = 0; i < p.m; ++i)
    if (inst.corrupted[static_cast<std::size_t>(i)]) inst.measurements(i) += noise(rng);

  inst.initial = unit_gaussian(p.n, rng);
  inst.radius = 1000.0 * inst.initial.norm();
  return inst;
}

RowMatrix normalized_hadamard(Index n) {
  require(is_power_of_two(n), "Hadamard size must be a power of two");
  RowMatrix h(n, n);
  h(0, 0) = 1.0;
  for (Index len = 1; len < n; len *= 2) {
    h.block(0, len, len, len) = h.block(0, 0, len, len);
    h.block(len, 0, len, len) = h.block(0, 0, len, len);
    h.block(len, len, len, len) = -h.block(0, 0, len, len);
  }
  return h / std::sqrt(static_cast<double>(n));
}

ProblemInstance generate_hadamard_instance(const Vector& signal, double p_fail, std::uint64_t seed) {
  const Index n = signal.size();
  require(is_power_of_two(n), "signal length must be a power of two");
  require(signal.allFinite(), "signal must be finite");
  require(p_fail >= 0.0 && p_fail <= 1.0, "p_fail must lie in [0, 1]");
  Rng rng(seed);
  ProblemInstance inst;
  inst.kind = ProblemKind::PhaseRetrieval;
  inst.seed = seed;
  inst.p_fail = p_fail;

  const RowMatrix h = normalized_hadamard(n);
  inst.sensing.resize(3 * n, n);
  std::bernoulli_distribution coin(0.5);
  for (Index j = 0; j < 3; ++j) {
    Vector signs(n);
    for (Index t = 0; t < n; ++t) signs(t) = coin(rng) ? 1.0 : -1.0;
    inst.sensing.block(j * n, 0, n, n) = h * signs.asDiagonal();
  }
  inst.truth = signal;
  inst.measurements = (inst.sensing * signal).array().square().matrix();
  inst.corrupted = choose_corrupted(3 * n, p_fail, rng);
  for (Index i = 0; i < 3 * n; ++i)
    if (inst.corrupted[static_cast<std::size_t>(i)]) inst.measurements(i) = 0.0;

  inst.initial = signal + gaussian_vector(n, rng);
  inst.radius = 1000.0 * inst.initial.norm();
  return inst;
}

ProblemInstance generate_blind_deconvolution(const BlindDeconvolutionParams& p) {
  check_common(p.m, p.n, p.kappa, p.p_fail, p.noise_sd);
  Rng rng(p.seed);
  ProblemInstance inst;
  inst.kind = ProblemKind::BlindDeconvolution;
  inst.ball_mode = p.ball_mode;
  inst.seed = p.seed;
  inst.kappa = p.kappa;
  inst.p_fail = p.p_fail;
  inst.noise_sd = p.noise_sd;

  const RowMatrix q1 = gaussian_matrix(p.m, p.n, rng);
  const RowMatrix q2 = gaussian_matrix(p.m, p.n, rng);
  const Vector d = condition_diagonal(p.n, p.kappa, rng);
  inst.sensing = q1 * d.asDiagonal();
  inst.sensing_aux = q2 * d.asDiagonal();

  const Vector x = unit_gaussian(p.n, rng);
  const Vector y = unit_gaussian(p.n, rng);
  inst.truth.resize(2 * p.n);
  inst.truth << x, y;
  inst.measurements = ((inst.sensing * x).array() * (inst.sensing_aux * y).array()).matrix();

  inst.corrupted = choose_corrupted(p.m, p.p_fail, rng);
  std::normal_distribution<double> noise(0.0, p.noise_sd);
  for (Index i = 0; i < p.m; ++i)
    if (inst.corrupted[static_cast<std::size_t>(i)]) inst.measurements(i) += noise(rng);

  inst.initial.resize(2 * p.n);
  inst.initial << unit_gaussian(p.n, rng), unit_gaussian(p.n, rng);
  inst.radius = 1000.0 * inst.initial.norm();
  return inst;
}

InnerValue inner_eval(const ProblemInstance& instance, const Vector& point, Index sample) {
  check_sample(instance, sample);
  const auto a = instance.sensing.row(sample);
  const double b = instance.measurements(sample);
  InnerValue out;
  if (instance.kind == ProblemKind::PhaseRetrieval) {
    const double ax = a.dot(point);
    out.value = ax * ax - b;
    out.gradient = (2.0 * ax) * a.transpose();
    return out;
  }
  const Index n = instance.n();
  const auto v = instance.sensing_aux.row(sample);
  const double ux = a.dot(point.head(n));
  const double vy = v.dot(point.tail(n));
  out.value = ux * vy - b;
  out.gradient.resize(2 * n);
  out.gradient.head(n) = vy * a.transpose();
  out.gradient.tail(n) = ux * v.transpose();
  return out;
}

double full_objective(const ProblemInstance& instance, const Vector& point) {
  if (!instance.ball().contains(point)) return std::numeric_limits<double>::infinity();
  Vector residual;
  if (instance.kind == ProblemKind::PhaseRetrieval) {
    residual = (instance.sensing * point).array().square().matrix() - instance.measurements;
  } else {
    const Index n = instance.n();
    residual = ((instance.sensing * point.head(n)).array() *
                (instance.sensing_aux * point.tail(n)).array())
                   .matrix() -
               instance.measurements;
  }
  return residual.cwiseAbs().sum() / static_cast<double>(instance.m());
}

double objective_at_truth(const ProblemInstance& instance) {
  return full_objective(instance, instance.truth);
}

Vector subgradient(const ProblemInstance& instance, const Vector& point, Index sample) {
  InnerValue inner = inner_eval(instance, point, sample);
  const double s = inner.value > 0.0 ? 1.0 : (inner.value < 0.0 ? -1.0 : 0.0);
  return s * inner.gradient;
}

DelayedInfo make_prox_linear_info(const ProblemInstance& instance, const Vector& base,
                                  Index sample, Index issued_at) {
  InnerValue inner = inner_eval(instance, base, sample);
  LinearModel model;
  model.intercept = inner.value - inner.gradient.dot(base);
  model.gradient = std::move(inner.gradient);
  return DelayedInfo{std::move(model), issued_at, sample};
}

DelayedInfo make_subgradient_info(const ProblemInstance& instance, const Vector& base,
                                  Index sample, Index issued_at) {
  return DelayedInfo{SubgradientInfo{subgradient(instance, base, sample)}, issued_at, sample};
}

double model_value(const DelayedInfo& info, const Vector& x) {
  const auto* model = std::get_if<LinearModel>(&info.payload);
  if (model == nullptr) throw InvalidArgument("model_value needs prox-linear information");
  return std::abs(model->gradient.dot(x) + model->intercept);
}

double weak_convexity_estimate(const ProblemInstance& instance) {
  if (instance.kind == ProblemKind::PhaseRetrieval)
    return 2.0 * instance.sensing.rowwise().squaredNorm().maxCoeff();
  return (instance.sensing.rowwise().norm().array() * instance.sensing_aux.rowwise().norm().array())
      .maxCoeff();
}

Vector load_signal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open signal file '" + path + "'");
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double v = 0.0;
    if (!(ls >> v)) throw InvalidArgument("malformed signal line: '" + line + "'");
    values.push_back(v);
  }
  require(!values.empty(), "signal file '" + path + "' is empty");
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kMagic = "dspl-instance";
constexpr int kVersion = 1;

void write_row(std::ostream& out, const auto& row) {
  for (Index j = 0; j < row.size(); ++j) {
    if (j) out << ' ';
    out << row(j);
  }
  out << '\n';
}

void write_matrix(std::ostream& out, const char* name, const RowMatrix& mat) {
  out << name << ' ' << mat.rows() << ' ' << mat.cols() << '\n';
  for (Index i = 0; i < mat.rows(); ++i) write_row(out, mat.row(i));
}

void write_vector(std::ostream& out, const char* name, const Vector& v) {
  out << name << ' ' << v.size() << '\n';
  write_row(out, v);
}

void expect_token(std::istream& in, const std::string& want) {
  std::string got;
  if (!(in >> got) || got != want)
    throw InvalidArgument("instance file: expected '" + want + "', found '" + got + "'");
}

double read_double(std::istream& in) {
  // operator>> rejects "inf"/"nan"; values here are always finite.
  std::string token;
  if (!(in >> token)) throw InvalidArgument("instance file: unexpected end of data");
  std::size_t used = 0;
  const double v = std::stod(token, &used);
  if (used != token.size()) throw InvalidArgument("instance file: bad number '" + token + "'");
  return v;
}

RowMatrix read_matrix(std::istream& in, const char* name) {
  expect_token(in, name);
  Index rows = 0, cols = 0;
  in >> rows >> cols;
  require(static_cast<bool>(in) && rows >= 0 && cols >= 0, "instance file: bad matrix shape");
  RowMatrix mat(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) mat(i, j) = read_double(in);
  return mat;
}

Vector read_vector(std::istream& in, const char* name) {
  expect_token(in, name);
  Index size = 0;
  in >> size;
  require(static_cast<bool>(in) && size >= 0, "instance file: bad vector size");
  Vector v(size);
  for (Index j = 0; j < size; ++j) v(j) = read_double(in);
  return v;
}

}  // namespace

void save_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write instance file '" + path + "'");
  out << std::setprecision(17);
  out << kMagic << ' ' << kVersion << '\n';
  out << "kind " << to_string(inst.kind) << '\n';
  out << "m " << inst.m() << '\n';
  out << "n " << inst.n() << '\n';
  out << "radius " << inst.radius << '\n';
  out << "ball_mode " << (inst.ball_mode == BallMode::PerBlock ? "per_block" : "joint") << '\n';
  out << "seed " << inst.seed << '\n';
  out << "kappa " << inst.kappa << '\n';
  out << "p_fail " << inst.p_fail << '\n';
  out << "noise_sd " << inst.noise_sd << '\n';
  out << "corrupted_count " << inst.corrupted_count() << '\n';
  out << "f_star " << objective_at_truth(inst) << '\n';
  out << "end_header\n";
  write_matrix(out, "sensing", inst.sensing);
  if (inst.kind == ProblemKind::BlindDeconvolution) write_matrix(out, "sensing_aux", inst.sensing_aux);
  write_vector(out, "measurements", inst.measurements);
  write_vector(out, "truth", inst.truth);
  write_vector(out, "initial", inst.initial);
  out << "corrupted " << inst.corrupted.size() << '\n';
  for (std::size_t i = 0; i < inst.corrupted.size(); ++i) out << (i ? " " : "") << int{inst.corrupted[i]};
  out << '\n';
  if (!out) throw InvalidArgument("failed writing instance file '" + path + "'");
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open instance file '" + path + "'");
  std::string magic;
  int version = 0;
  in >> magic >> version;
  require(magic == kMagic && version == kVersion, "'" + path + "' is not a dspl instance file");

  ProblemInstance inst;
  Index m = -1, n = -1;
  std::string key;
  while (in >> key && key != "end_header") {
    std::string value;
    in >> value;
    if (key == "kind") inst.kind = parse_problem_kind(value);
    else if (key == "m") m = std::stoll(value);
    else if (key == "n") n = std::stoll(value);
    else if (key == "radius") inst.radius = std::stod(value);
    else if (key == "ball_mode") inst.ball_mode = value == "joint" ? BallMode::Joint : BallMode::PerBlock;
    else if (key == "seed") inst.seed = std::stoull(value);
    else if (key == "kappa") inst.kappa = std::stod(value);
    else if (key == "p_fail") inst.p_fail = std::stod(value);
    else if (key == "noise_sd") inst.noise_sd = std::stod(value);
    // corrupted_count and f_star are derived; ignored on load.
  }
  require(key == "end_header", "instance file: missing end_header");

  inst.sensing = read_matrix(in, "sensing");
  if (inst.kind == ProblemKind::BlindDeconvolution) inst.sensing_aux = read_matrix(in, "sensing_aux");
  inst.measurements = read_vector(in, "measurements");
  inst.truth = read_vector(in, "truth");
  inst.initial = read_vector(in, "initial");
  expect_token(in, "corrupted");
  Index count = 0;
  in >> count;
  inst.corrupted.resize(static_cast<std::size_t>(std::max<Index>(count, 0)));
  for (Index i = 0; i < count; ++i) {
    int flag = 0;
    in >> flag;
    inst.corrupted[static_cast<std::size_t>(i)] = flag != 0;
  }
  require(static_cast<bool>(in), "instance file: truncated corruption mask");
  require(inst.m() == m && inst.n() == n, "instance file: header shape disagrees with data");
  validate_instance(inst);
  return inst;
}

void validate_instance(const ProblemInstance& inst, double rel_tol) {
  const Index m = inst.m();
  const Index n = inst.n();
  require(m >= 1 && n >= 1, "instance has empty sensing data");
  require(inst.measurements.size() == m, "measurement count differs from m");
  require(static_cast<Index>(inst.corrupted.size()) == m, "corruption mask length differs from m");
  require(inst.truth.size() == inst.dim() && inst.initial.size() == inst.dim(),
          "truth/initial dimension mismatch");
  if (inst.kind == ProblemKind::BlindDeconvolution)
    require(inst.sensing_aux.rows() == m && inst.sensing_aux.cols() == n, "V shape mismatch");
  require(inst.radius > 0.0 && inst.ball().max_norm(inst.initial) < inst.radius,
          "radius must exceed the start point norm");
  for (Index i = 0; i < m; ++i) {
    if (inst.corrupted[static_cast<std::size_t>(i)]) continue;
    const double clean = inner_eval(inst, inst.truth, i).value + inst.measurements(i);
    const double scale = std::max(1.0, std::abs(clean));
    if (std::abs(clean - inst.measurements(i)) > rel_tol * scale)
      throw InvalidArgument("measurement " + std::to_string(i) + " inconsistent with ground truth");
  }
}

}  // namespace dspl
