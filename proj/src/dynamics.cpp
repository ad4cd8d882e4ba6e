#include "polyreach/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "polyreach/csv_io.hpp"

namespace polyreach {

Vector step(const SystemModel& model, int k, const Vector& x, const Vector& w) {
  if (k < 0) throw std::invalid_argument("step: negative time index");
  if (x.size() != model.state_dim) throw std::invalid_argument("step: state dimension mismatch");
  if (w.size() != model.dist_dim)
    throw std::invalid_argument("step: disturbance dimension mismatch");
  Vector next = model.step_fn(k, x, w);
  if (next.size() != model.state_dim)
    throw std::runtime_error("step: model returned wrong state dimension");
  return next;
}

Vector sample_true_conditional(const GroundTruthConditional& gt, const Vector& x,
                               RngStream& rng) {
  const Vector mean = gt.mean_fn(x);
  const Matrix cov = gt.cov_fn(x);
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sample_true_conditional: covariance not positive definite");
  return mean + llt.matrixL() * rng.normal_vector(mean.size());
}

Dataset generate_dataset(const GroundTruthConditional& gt, const StateSampler& x_marginal,
                         Index n_pairs, RngStream& rng) {
  if (n_pairs < 1) throw std::invalid_argument("generate_dataset: need N >= 1");
  Dataset ds;
  for (Index i = 0; i < n_pairs; ++i) {
    RngStream stream = rng.substream(static_cast<std::uint64_t>(i));
    const Vector x = x_marginal(stream);
    const Vector w = sample_true_conditional(gt, x, stream);
    if (i == 0) {
      ds.x.resize(n_pairs, x.size());
      ds.w.resize(n_pairs, w.size());
    }
    ds.x.row(i) = x.transpose();
    ds.w.row(i) = w.transpose();
  }
  return ds;
}

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
  std::vector<std::string> header;
  for (Index j = 0; j < dataset.x.cols(); ++j) header.push_back("x" + std::to_string(j + 1));
  for (Index j = 0; j < dataset.w.cols(); ++j) header.push_back("w" + std::to_string(j + 1));
  Matrix joined(dataset.count(), dataset.x.cols() + dataset.w.cols());
  joined << dataset.x, dataset.w;
  write_matrix_csv(joined, header, path);
}

Dataset read_dataset_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  Index n = 0, s = 0;
  for (const auto& name : table.header) {
    if (!name.empty() && name[0] == 'x')
      ++n;
    else if (!name.empty() && name[0] == 'w')
      ++s;
    else
      throw std::runtime_error("read_dataset_csv: unexpected column " + name);
  }
  if (n == 0 || s == 0) throw std::runtime_error("read_dataset_csv: missing x or w columns");
  Dataset ds;
  ds.x = table.values.leftCols(n);
  ds.w = table.values.rightCols(s);
  return ds;
}

// -- Built-in systems ---------------------------------------------------------

Matrix example1_dynamics_matrix() {
  Matrix a(2, 2);
  a << 0.99, 0.01, 0.01, 0.99;
  return a;
}

Vector example1_initial_state(int which) {
  Vector x0(2);
  if (which == 1)
    x0 << 3.0, 1.0;
  else if (which == 2)
    x0 << 2.5, 1.0;
  else
    throw std::invalid_argument("example1_initial_state: which must be 1 or 2");
  return x0;
}

Matrix example1_covariance(int which) {
  Matrix sigma(2, 2);
  if (which == 1)
    sigma << 0.425, 0.05, 0.05, 0.275;
  else if (which == 2)
    sigma << 0.15, -0.02, -0.02, 0.15;
  else
    throw std::invalid_argument("example1_covariance: which must be 1 or 2");
  return sigma;
}

BuiltinSystem example1_linear() {
  BuiltinSystem sys;
  sys.model.name = "example1_linear";
  sys.model.state_dim = 2;
  sys.model.dist_dim = 2;
  sys.model.step_fn = [a = example1_dynamics_matrix()](int, const Vector& x, const Vector& w) {
    return Vector(a * x + w);
  };
  // The disturbance law is only specified at the two reference states; the
  // conditional selects the branch of the nearer one.
  sys.ground_truth.mean_fn = [](const Vector&) { return Vector(Vector::Zero(2)); };
  sys.ground_truth.cov_fn = [](const Vector& x) {
    const double d1 = (x - example1_initial_state(1)).squaredNorm();
    const double d2 = (x - example1_initial_state(2)).squaredNorm();
    return example1_covariance(d1 <= d2 ? 1 : 2);
  };
  sys.default_marginal = [](RngStream& rng) {
    return example1_initial_state(rng.uniform01() < 0.5 ? 1 : 2);
  };
  return sys;
}

namespace {

double engine_w1_mean(const Vector& x) {
  return 0.5 + 0.1 * std::sin(std::numbers::pi *
                              std::sqrt(0.5 * x[0] * x[0] + 0.25 * x[1] * x[1]));
}

double engine_w2_mean(const Vector& x) {
  return std::numbers::pi +
         0.25 * std::numbers::pi *
             std::sin(std::numbers::pi * std::sqrt(0.15 * x[0] * x[0] + 0.35 * x[1] * x[1]));
}

double engine_w1_var(const Vector& x) {
  return 0.15 + 0.025 * std::cos(std::numbers::pi *
                                 std::sqrt(0.75 * x[0] * x[0] + 0.15 * x[1] * x[1]));
}

double engine_w2_var(const Vector& x) {
  return 0.3 * std::numbers::pi +
         0.1 * std::numbers::pi *
             std::cos(std::numbers::pi * std::sqrt(0.1 * x[0] * x[0] + 0.6 * x[1] * x[1]));
}

}  // namespace

Vector engine_marginal_mean() {
  Vector mean(2);
  mean << 2.2473, 5.3955;
  return mean;
}

Vector engine_marginal_variances() {
  Vector var(2);
  var << 0.9594, 0.2306;
  return var;
}

StateSampler engine_state_marginal() {
  return [mean = engine_marginal_mean(), sd = Vector(engine_marginal_variances().cwiseSqrt())](
             RngStream& rng) {
    Vector x(2);
    x[0] = mean[0] + sd[0] * rng.normal();
    x[1] = mean[1] + sd[1] * rng.normal();
    return x;
  };
}

BuiltinSystem engine_powertrain() {
  BuiltinSystem sys;
  sys.model.name = "engine_powertrain";
  sys.model.state_dim = 2;
  sys.model.dist_dim = 2;
  // Euler step of the air-charging / engine-speed dynamics; the second
  // component is explicitly time-dependent.
  sys.model.step_fn = [](int k, const Vector& x, const Vector& w) {
    Vector next(2);
    next[0] = x[0] + 0.02 * 5.0 * (std::sqrt(10.0 - x[0]) - w[0] * x[0] * x[1]);
    next[1] = x[1] + 0.02 * std::sin(w[1] * 0.02 * static_cast<double>(k));
    return next;
  };
  sys.ground_truth.mean_fn = [](const Vector& x) {
    Vector mean(2);
    mean << engine_w1_mean(x), engine_w2_mean(x);
    return mean;
  };
  sys.ground_truth.cov_fn = [](const Vector& x) {
    Matrix cov = Matrix::Zero(2, 2);
    cov(0, 0) = engine_w1_var(x);
    cov(1, 1) = engine_w2_var(x);
    return cov;
  };
  sys.default_marginal = engine_state_marginal();
  return sys;
}

BuiltinSystem builtin_system(const std::string& name) {
  if (name == "example1_linear") return example1_linear();
  if (name == "engine_powertrain") return engine_powertrain();
  throw std::invalid_argument("unknown system model: " + name);
}

std::vector<std::string> builtin_system_names() {
  return {"example1_linear", "engine_powertrain"};
}

}  // namespace polyreach
