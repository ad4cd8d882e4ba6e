#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polyreach/dynamics.hpp"
#include "polyreach/polyset.hpp"
#include "polyreach/resample.hpp"
#include "polyreach/types.hpp"

namespace polyreach {

struct SolverConfig {
  double alpha_s = 0.185;
  std::vector<double> epsilon_schedule = {0.5, 0.1, 0.02, 0.005};
  std::vector<double> penalty_schedule = {1e1, 1e2, 1e3, 1e4};
  int max_iters = 2000;  // per stage
  double grad_tol = 1e-6;
  double constraint_tol = 5e-3;
  std::uint64_t seed = 0;  // carried for provenance; the solve itself is deterministic
  int trace_every = 0;     // 0: stage summaries only; j: every j-th accepted iterate
};

/// Throws std::invalid_argument unless alpha_s is in [0, 1), the epsilon
/// schedule is strictly decreasing positive and the penalty schedule strictly
/// increasing positive.
void validate_config(const SolverConfig& config);

/// Smooth stand-in for the indicator 1{z <= 1}: 1 / (1 + exp((z - 1)/epsilon)).
/// Decreasing in z, in (0, 1), and pointwise -> the indicator as epsilon -> 0.
double smooth_indicator(double z, double epsilon);

struct StageTraceRow {
  int stage = 0;
  int iter = 0;
  double epsilon = 0.0;
  double penalty = 0.0;
  double objective = 0.0;  // penalized stage objective
  double log_det_inv = 0.0;
  double smooth_coverage = 0.0;
  double grad_norm = 0.0;
  double step_size = 0.0;
};

struct SolveResult {
  SublevelSetParams params;
  double objective = 0.0;        // log det M^{-1} at the returned params
  double smooth_coverage = 0.0;  // at the final epsilon
  double hard_coverage = 0.0;    // exact indicator coverage, recomputed at return
  int iterations = 0;
  bool converged = false;
  bool theta_bound_hit = false;  // some |L| entry was clamped at the Theta bound
  std::vector<StageTraceRow> trace;
};

/// Penalized stage objective on the monomial matrix E (rows e(x_i)):
///   log det M^{-1}(L) + penalty * max(0, (1 - alpha_s) - smooth_coverage)^2.
double penalized_objective(const Matrix& L, const Matrix& E, double alpha_s, double epsilon,
                           double penalty);

/// Analytic gradient of penalized_objective w.r.t. the lower triangle of L
/// (upper triangle of the result is zero).
Matrix penalized_gradient(const Matrix& L, const Matrix& E, double alpha_s, double epsilon,
                          double penalty);

/// Minimizes log det M^{-1} subject to smoothed coverage >= 1 - alpha_s by
/// staged penalty descent (projected gradient + backtracking line search,
/// warm-started across stages). Never throws on non-convergence: the best
/// iterate is returned with converged = false.
SolveResult solve_reachset(const ScenarioSet& scenarios, const MonomialBasis& basis,
                           const SolverConfig& config);

/// Scenario approach (alpha_s = 0): every scenario ends inside, q <= 1 + 1e-9,
/// enforced by a final containment rescale of L.
SolveResult solve_scenario_baseline(const ScenarioSet& scenarios, const MonomialBasis& basis);

/// How raw disturbance samples are turned into predicted state paths: each
/// sample is reused along its own path starting at x0.
struct PathRule {
  Vector x0;
  int k = 1;  // horizon step whose states are fit
};

/// States at steps 1..k_max when each raw disturbance row is replayed along
/// its own trajectory from x0.
std::vector<Matrix> push_raw_paths(const Matrix& raw_w, const SystemModel& model,
                                   const Vector& x0, int k_max);

/// The context-ignoring baseline: push raw disturbance samples through the
/// dynamics per PathRule, then solve the smoothed problem on the pushed
/// states. Reproduces the biased sample-average construction.
SolveResult solve_sca_baseline(const Matrix& raw_w_samples, const SystemModel& model,
                               const PathRule& rule, const MonomialBasis& basis,
                               const SolverConfig& config);

/// SolveResult JSON: {params, objective, smooth_coverage, hard_coverage,
/// iterations, converged, theta_bound_hit}.
std::string solve_result_to_json(const SolveResult& result);
SolveResult solve_result_from_json(const std::string& text);

void write_trace_csv(const std::vector<StageTraceRow>& trace, const std::string& path);

}  // namespace polyreach
