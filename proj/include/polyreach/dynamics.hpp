#pragma once

#include <functional>
#include <string>
#include <vector>

#include "polyreach/rng.hpp"
#include "polyreach/types.hpp"

namespace polyreach {

/// Discrete-time system x_{k+1} = f(x_k, w_k). The step function receives the
/// time index because some models (engine powertrain) are explicitly
/// time-dependent; time-invariant models ignore it.
struct SystemModel {
  std::string name;
  int state_dim = 0;
  int dist_dim = 0;
  std::function<Vector(int k, const Vector& x, const Vector& w)> step_fn;
};

/// Dimension-checked step. Throws std::invalid_argument on mismatch.
Vector step(const SystemModel& model, int k, const Vector& x, const Vector& w);

/// True conditional law of the disturbance, w | x ~ N(mean_fn(x), cov_fn(x)).
/// Used for data generation and validation only, never inside the estimator.
struct GroundTruthConditional {
  std::function<Vector(const Vector& x)> mean_fn;
  std::function<Matrix(const Vector& x)> cov_fn;
};

/// One draw from N(mean_fn(x), cov_fn(x)). Throws std::runtime_error when the
/// covariance is not positive definite.
Vector sample_true_conditional(const GroundTruthConditional& gt, const Vector& x,
                               RngStream& rng);

/// Paired observations: row i of x with row i of w.
struct Dataset {
  Matrix x;  // N x n
  Matrix w;  // N x s
  Index count() const { return x.rows(); }
};

using StateSampler = std::function<Vector(RngStream&)>;

/// N i.i.d. pairs: x from the marginal, w from gt conditioned on that x.
Dataset generate_dataset(const GroundTruthConditional& gt, const StateSampler& x_marginal,
                         Index n_pairs, RngStream& rng);

/// CSV with header x1,...,xn,w1,...,ws; one pair per row, 17 significant digits.
void write_dataset_csv(const Dataset& dataset, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

// -- Built-in systems ---------------------------------------------------------

struct BuiltinSystem {
  SystemModel model;
  GroundTruthConditional ground_truth;
  StateSampler default_marginal;
};

/// Linear 2-state system x' = A x + w with a two-branch disturbance covariance
/// keyed by the nearest of the two reference initial states.
BuiltinSystem example1_linear();

/// Euler-discretized air-charging / engine-speed model (0.02 s step) with the
/// state-dependent Gaussian disturbance law it was published with.
BuiltinSystem engine_powertrain();

/// Lookup by name ("example1_linear", "engine_powertrain"); throws on unknown.
BuiltinSystem builtin_system(const std::string& name);
std::vector<std::string> builtin_system_names();

// Reference constants of the built-in systems, shared with the validation
// harness.
Vector example1_initial_state(int which);  // 1 or 2
Matrix example1_covariance(int which);
Matrix example1_dynamics_matrix();

Vector engine_marginal_mean();
Vector engine_marginal_variances();
StateSampler engine_state_marginal();

}  // namespace polyreach
