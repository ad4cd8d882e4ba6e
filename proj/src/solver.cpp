#include "polyreach/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "polyreach/csv_io.hpp"

namespace polyreach {

void validate_config(const SolverConfig& config) {
  if (!(config.alpha_s >= 0.0 && config.alpha_s < 1.0))
    throw std::invalid_argument("SolverConfig: alpha_s must be in [0, 1)");
  if (config.epsilon_schedule.empty() || config.penalty_schedule.empty())
    throw std::invalid_argument("SolverConfig: empty schedule");
  for (size_t i = 0; i < config.epsilon_schedule.size(); ++i) {
    if (!(config.epsilon_schedule[i] > 0.0))
      throw std::invalid_argument("SolverConfig: epsilon must be positive");
    if (i > 0 && !(config.epsilon_schedule[i] < config.epsilon_schedule[i - 1]))
      throw std::invalid_argument("SolverConfig: epsilon schedule must strictly decrease");
  }
  for (size_t i = 0; i < config.penalty_schedule.size(); ++i) {
    if (!(config.penalty_schedule[i] > 0.0))
      throw std::invalid_argument("SolverConfig: penalty must be positive");
    if (i > 0 && !(config.penalty_schedule[i] > config.penalty_schedule[i - 1]))
      throw std::invalid_argument("SolverConfig: penalty schedule must strictly increase");
  }
  if (config.max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
}

double smooth_indicator(double z, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("smooth_indicator: epsilon must be > 0");
  const double t = std::clamp((z - 1.0) / epsilon, -500.0, 500.0);
  return 1.0 / (1.0 + std::exp(t));
}

namespace {

double log_det_inv_of(const Matrix& L) {
  return -2.0 * L.diagonal().array().log().sum();
}

struct Parts {
  double penalized = 0.0;
  double log_det_inv = 0.0;
  double coverage = 0.0;
};

Parts evaluate_parts(const Matrix& L, const Matrix& E, double alpha_s, double epsilon,
                     double penalty) {
  const Vector q = (E * L).rowwise().squaredNorm();
  double coverage = 0.0;
  for (Index i = 0; i < q.size(); ++i) coverage += smooth_indicator(q[i], epsilon);
  coverage /= static_cast<double>(q.size());
  const double violation = std::max(0.0, (1.0 - alpha_s) - coverage);
  Parts parts;
  parts.log_det_inv = log_det_inv_of(L);
  parts.coverage = coverage;
  parts.penalized = parts.log_det_inv + penalty * violation * violation;
  return parts;
}

Matrix gradient_of(const Matrix& L, const Matrix& E, double alpha_s, double epsilon,
                   double penalty) {
  const Index n_r = E.rows();
  const Matrix y = E * L;
  const Vector q = y.rowwise().squaredNorm();
  Vector sig(n_r);
  double coverage = 0.0;
  for (Index i = 0; i < n_r; ++i) {
    sig[i] = smooth_indicator(q[i], epsilon);
    coverage += sig[i];
  }
  coverage /= static_cast<double>(n_r);
  const double violation = (1.0 - alpha_s) - coverage;

  Matrix grad = Matrix::Zero(L.rows(), L.cols());
  grad.diagonal() = (-2.0 / L.diagonal().array()).matrix();
  if (violation > 0.0) {
    // d coverage / dL = (2/N_r) E^T diag(sig') (E L), sig' = -sig(1-sig)/eps.
    const Vector weight = (-sig.array() * (1.0 - sig.array()) / epsilon).matrix();
    const Matrix dcov = (2.0 / static_cast<double>(n_r)) *
                        (E.transpose() * weight.asDiagonal() * y);
    grad.noalias() -= (2.0 * penalty * violation) * dcov;
  }
  return grad.triangularView<Eigen::Lower>();
}

/// Clamps onto the feasible parameter box; reports a Theta-bound hit.
void project(Matrix& L, bool* bound_hit) {
  for (Index i = 0; i < L.rows(); ++i) {
    for (Index j = 0; j < i; ++j) {
      if (std::abs(L(i, j)) > kThetaBound) {
        L(i, j) = std::clamp(L(i, j), -kThetaBound, kThetaBound);
        if (bound_hit) *bound_hit = true;
      }
    }
    if (L(i, i) > kThetaBound) {
      L(i, i) = kThetaBound;
      if (bound_hit) *bound_hit = true;
    }
    L(i, i) = std::max(L(i, i), kDiagFloor);
  }
}

double empirical_quantile(Vector values, double level) {
  std::sort(values.begin(), values.end());
  const Index n = values.size();
  const Index idx = std::clamp<Index>(
      static_cast<Index>(std::ceil(level * static_cast<double>(n))) - 1, 0, n - 1);
  return values[idx];
}

/// Feasible-ish, well-scaled start: M0 proportional to the inverse of the
/// scenario monomial second-moment matrix, rescaled so the empirical
/// (1 - alpha_s) quantile of q sits at 1.
Matrix initial_factor(const Matrix& E, double alpha_s) {
  const Index m = E.cols();
  Matrix second_moment = (E.transpose() * E) / static_cast<double>(E.rows());
  double jitter = 1e-12 * std::max(second_moment.trace() / static_cast<double>(m), 1e-300);
  Eigen::LLT<Matrix> llt;
  for (int attempt = 0; attempt < 40; ++attempt) {
    Matrix trial = second_moment;
    trial.diagonal().array() += jitter;
    llt.compute(trial);
    if (llt.info() == Eigen::Success) break;
    jitter *= 10.0;
  }
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("solve_reachset: could not factor scenario moments");
  Matrix inverse = llt.solve(Matrix::Identity(m, m));
  inverse = ((inverse + inverse.transpose()) / 2.0).eval();
  Eigen::LLT<Matrix> llt_inv(inverse);
  if (llt_inv.info() != Eigen::Success) {
    inverse.diagonal().array() += 1e-10 * inverse.trace() / static_cast<double>(m);
    llt_inv.compute(inverse);
    if (llt_inv.info() != Eigen::Success)
      throw std::runtime_error("solve_reachset: could not factor inverse moments");
  }
  Matrix L = llt_inv.matrixL();
  const Vector q = (E * L).rowwise().squaredNorm();
  const double level = empirical_quantile(q, 1.0 - alpha_s);
  L /= std::sqrt(std::max(level, 1e-300));
  return L;
}

}  // namespace

double penalized_objective(const Matrix& L, const Matrix& E, double alpha_s, double epsilon,
                           double penalty) {
  return evaluate_parts(L, E, alpha_s, epsilon, penalty).penalized;
}

Matrix penalized_gradient(const Matrix& L, const Matrix& E, double alpha_s, double epsilon,
                          double penalty) {
  return gradient_of(L, E, alpha_s, epsilon, penalty);
}

SolveResult solve_reachset(const ScenarioSet& scenarios, const MonomialBasis& basis,
                           const SolverConfig& config) {
  validate_config(config);
  const Index n_r = scenarios.count();
  const Index m = basis.size();
  if (n_r < m)
    throw std::invalid_argument("solve_reachset: need at least m = " + std::to_string(m) +
                                " scenarios");

  const Matrix E = monomial_matrix(basis, scenarios.states);

  SolveResult result;
  result.params.basis = basis;
  Matrix L = initial_factor(E, config.alpha_s);
  project(L, &result.theta_bound_hit);

  const size_t n_stages =
      std::max(config.epsilon_schedule.size(), config.penalty_schedule.size());
  int total_iters = 0;

  for (size_t stage = 0; stage < n_stages; ++stage) {
    const double epsilon =
        config.epsilon_schedule[std::min(stage, config.epsilon_schedule.size() - 1)];
    const double penalty =
        config.penalty_schedule[std::min(stage, config.penalty_schedule.size() - 1)];

    Parts current = evaluate_parts(L, E, config.alpha_s, epsilon, penalty);
    Matrix grad = gradient_of(L, E, config.alpha_s, epsilon, penalty);
    double step = 1.0 / std::max(grad.norm(), 1.0);
    Matrix prev_L, prev_grad;
    bool have_prev = false;
    int stalled = 0;

    int iter = 0;
    for (; iter < config.max_iters; ++iter) {
      const double grad_norm = grad.norm();
      if (grad_norm <= config.grad_tol) break;

      // Barzilai-Borwein trial step, kept monotone by Armijo backtracking.
      if (have_prev) {
        const Matrix s = L - prev_L;
        const Matrix y = grad - prev_grad;
        const double sy = (s.array() * y.array()).sum();
        if (sy > 0.0) step = std::clamp((s.array() * s.array()).sum() / sy, 1e-14, 1e8);
      }

      bool accepted = false;
      double trial_step = step;
      Matrix candidate;
      Parts cand_parts;
      for (int backtrack = 0; backtrack < 60; ++backtrack) {
        candidate = L - trial_step * grad;
        project(candidate, &result.theta_bound_hit);
        cand_parts = evaluate_parts(candidate, E, config.alpha_s, epsilon, penalty);
        const double decrease = (grad.array() * (candidate - L).array()).sum();
        if (std::isfinite(cand_parts.penalized) &&
            cand_parts.penalized <= current.penalized + 1e-4 * decrease) {
          accepted = true;
          break;
        }
        trial_step /= 2.0;
      }
      if (!accepted) break;  // no descent direction left at this stage

      const double improvement = current.penalized - cand_parts.penalized;
      stalled = improvement <= 1e-11 * (1.0 + std::abs(current.penalized)) ? stalled + 1 : 0;

      prev_L = L;
      prev_grad = grad;
      have_prev = true;
      L = candidate;
      current = cand_parts;
      grad = gradient_of(L, E, config.alpha_s, epsilon, penalty);
      step = trial_step;

      if (config.trace_every > 0 && iter % config.trace_every == 0)
        result.trace.push_back({static_cast<int>(stage), iter, epsilon, penalty,
                                current.penalized, current.log_det_inv, current.coverage,
                                grad.norm(), trial_step});
      if (stalled >= 5) break;
    }
    total_iters += iter;
    result.trace.push_back({static_cast<int>(stage), iter, epsilon, penalty, current.penalized,
                            current.log_det_inv, current.coverage, grad.norm(), step});
  }

  result.params.L = L;
  result.objective = log_det_inv_of(L);
  const double final_eps = config.epsilon_schedule.back();
  result.smooth_coverage =
      evaluate_parts(L, E, config.alpha_s, final_eps, config.penalty_schedule.back()).coverage;
  result.hard_coverage = empirical_coverage(result.params, scenarios.states);
  result.iterations = total_iters;
  result.converged = result.hard_coverage >= 1.0 - config.alpha_s - config.constraint_tol;
  return result;
}

SolveResult solve_scenario_baseline(const ScenarioSet& scenarios, const MonomialBasis& basis) {
  SolverConfig config;
  config.alpha_s = 0.0;
  SolveResult result = solve_reachset(scenarios, basis, config);

  // Containment polish: shrink M until every scenario satisfies q <= 1.
  const Matrix E = monomial_matrix(basis, scenarios.states);
  const double q_max = (E * result.params.L).rowwise().squaredNorm().maxCoeff();
  if (q_max > 1.0) {
    result.params.L /= std::sqrt(q_max);
    project(result.params.L, &result.theta_bound_hit);
    result.objective = log_det_inv_of(result.params.L);
    result.smooth_coverage = evaluate_parts(result.params.L, E, 0.0,
                                            config.epsilon_schedule.back(),
                                            config.penalty_schedule.back())
                                 .coverage;
  }
  result.hard_coverage = empirical_coverage(result.params, scenarios.states);
  result.converged = result.hard_coverage >= 1.0 - config.constraint_tol;
  return result;
}

std::vector<Matrix> push_raw_paths(const Matrix& raw_w, const SystemModel& model,
                                   const Vector& x0, int k_max) {
  if (raw_w.rows() == 0) throw std::invalid_argument("push_raw_paths: no disturbance samples");
  if (raw_w.cols() != model.dist_dim)
    throw std::invalid_argument("push_raw_paths: disturbance dimension mismatch");
  if (k_max < 1) throw std::invalid_argument("push_raw_paths: need k_max >= 1");

  std::vector<Matrix> states(k_max, Matrix(raw_w.rows(), model.state_dim));
  for (Index i = 0; i < raw_w.rows(); ++i) {
    const Vector w = raw_w.row(i).transpose();
    Vector state = x0;
    for (int k = 1; k <= k_max; ++k) {
      Vector next = step(model, k - 1, state, w);
      // A sample replayed out of the dynamics' domain freezes at its last
      // finite state instead of poisoning the scenario set with NaNs.
      if (next.allFinite()) state = std::move(next);
      states[k - 1].row(i) = state.transpose();
    }
  }
  return states;
}

SolveResult solve_sca_baseline(const Matrix& raw_w_samples, const SystemModel& model,
                               const PathRule& rule, const MonomialBasis& basis,
                               const SolverConfig& config) {
  const std::vector<Matrix> paths = push_raw_paths(raw_w_samples, model, rule.x0, rule.k);
  ScenarioSet set;
  set.k = rule.k;
  set.states = paths.back();
  return solve_reachset(set, basis, config);
}

std::string solve_result_to_json(const SolveResult& result) {
  nlohmann::ordered_json j;
  j["params"] = nlohmann::ordered_json::parse(params_to_json(result.params));
  j["objective"] = result.objective;
  j["smooth_coverage"] = result.smooth_coverage;
  j["hard_coverage"] = result.hard_coverage;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["theta_bound_hit"] = result.theta_bound_hit;
  return j.dump(2);
}

SolveResult solve_result_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SolveResult result;
  result.params = params_from_json(j.at("params").dump());
  result.objective = j.at("objective").get<double>();
  result.smooth_coverage = j.at("smooth_coverage").get<double>();
  result.hard_coverage = j.at("hard_coverage").get<double>();
  result.iterations = j.at("iterations").get<int>();
  result.converged = j.at("converged").get<bool>();
  result.theta_bound_hit = j.at("theta_bound_hit").get<bool>();
  return result;
}

void write_trace_csv(const std::vector<StageTraceRow>& trace, const std::string& path) {
  Matrix values(static_cast<Index>(trace.size()), 9);
  for (size_t i = 0; i < trace.size(); ++i) {
    const auto& row = trace[i];
    values.row(static_cast<Index>(i)) << row.stage, row.iter, row.epsilon, row.penalty,
        row.objective, row.log_det_inv, row.smooth_coverage, row.grad_norm, row.step_size;
  }
  write_matrix_csv(values,
                   {"stage", "iter", "epsilon", "penalty", "objective", "log_det_inv",
                    "smooth_coverage", "grad_norm", "step_size"},
                   path);
}

}  // namespace polyreach
