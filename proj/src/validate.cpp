#include "polyreach/validate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "polyreach/cde.hpp"
#include "polyreach/csv_io.hpp"
#include "polyreach/resample.hpp"

namespace polyreach {

namespace {

// Substream tags inside one trial.
constexpr std::uint64_t kTagData = 1;
constexpr std::uint64_t kTagX0 = 2;
constexpr std::uint64_t kTagCenters = 3;
constexpr std::uint64_t kTagScenarios = 4;
constexpr std::uint64_t kTagCoverage = 5;
constexpr std::uint64_t kTagCv = 6;

void run_parallel(int jobs, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, jobs));
  if (threads == 1) {
    for (int j = 0; j < jobs; ++j) body(j);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= jobs) return;
      try {
        body(j);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Vector gaussian_draw(const Matrix& cov, RngStream& rng) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gaussian_draw: covariance not positive definite");
  return llt.matrixL() * rng.normal_vector(cov.rows());
}

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::kProposed: return "proposed";
    case Method::kScenario: return "scenario";
    case Method::kSca: return "sca";
  }
  throw std::logic_error("method_name: bad enum");
}

Method method_from_name(const std::string& name) {
  if (name == "proposed") return Method::kProposed;
  if (name == "scenario") return Method::kScenario;
  if (name == "sca") return Method::kSca;
  throw std::invalid_argument("unknown method: " + name);
}

double estimate_coverage(const GroundTruthConditional& gt, const SystemModel& model,
                         const Vector& x0, const SublevelSetParams& params_k, int k,
                         Index m_eval, RngStream& rng) {
  if (m_eval < 1) throw std::invalid_argument("estimate_coverage: need m_eval >= 1");
  if (k < 1) throw std::invalid_argument("estimate_coverage: need k >= 1");
  Index inside = 0;
  for (Index t = 0; t < m_eval; ++t) {
    RngStream stream = rng.substream(static_cast<std::uint64_t>(t));
    Vector x = x0;
    for (int j = 1; j <= k; ++j) {
      const Vector w = sample_true_conditional(gt, x, stream);
      x = step(model, j - 1, x, w);
    }
    if (x.allFinite() && evaluate_q(params_k, x) <= 1.0) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(m_eval);
}

double hoeffding_bound(Index n_r, double m_bar) {
  if (n_r < 1) throw std::invalid_argument("hoeffding_bound: need N_r >= 1");
  if (!(m_bar > 0.0)) throw std::invalid_argument("hoeffding_bound: need M_bar > 0");
  return std::exp(-2.0 * static_cast<double>(n_r) * m_bar * m_bar);
}

void validate_study_config(const StudyConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw std::invalid_argument("StudyConfig: alpha must be in (0, 1)");
  if (!(config.alpha_s >= 0.0 && config.alpha_s < config.alpha))
    throw std::invalid_argument("StudyConfig: need 0 <= alpha_s < alpha");
  if (config.degree < 1) throw std::invalid_argument("StudyConfig: need degree >= 1");
  if (config.trials < 1 || config.n_data < 1 || config.n_r < 1 || config.m_eval < 1)
    throw std::invalid_argument("StudyConfig: counts must be positive");
  if (config.k_list.empty()) throw std::invalid_argument("StudyConfig: empty k list");
  for (int k : config.k_list)
    if (k < 1) throw std::invalid_argument("StudyConfig: horizon steps must be >= 1");
  if (config.methods.empty()) throw std::invalid_argument("StudyConfig: no methods");
  const BuiltinSystem sys = builtin_system(config.model_name);
  const Index m = MonomialBasis::binomial(sys.model.state_dim + config.degree, config.degree);
  if (config.n_r < m)
    throw std::invalid_argument("StudyConfig: N_r below the basis size m");
  const bool uses_raw = std::any_of(config.methods.begin(), config.methods.end(), [](Method x) {
    return x != Method::kProposed;
  });
  if (uses_raw && config.n_r > config.n_data)
    throw std::invalid_argument("StudyConfig: baselines need N_r <= N");
}

namespace {

struct TrialOutput {
  std::vector<TrialRecord> records;  // methods x k_list order
};

TrialOutput run_trial(int trial, const StudyConfig& config, const BuiltinSystem& sys,
                      const MonomialBasis& basis, double sigma_x, double sigma_w,
                      double lambda, const RngStream& root) {
  const int k_max = *std::max_element(config.k_list.begin(), config.k_list.end());
  RngStream trial_stream = root.substream(static_cast<std::uint64_t>(trial));

  RngStream data_stream = trial_stream.substream(kTagData);
  const Dataset dataset =
      generate_dataset(sys.ground_truth, sys.default_marginal, config.n_data, data_stream);
  RngStream x0_stream = trial_stream.substream(kTagX0);
  const Vector x0 = sys.default_marginal(x0_stream);

  const bool proposed = std::find(config.methods.begin(), config.methods.end(),
                                  Method::kProposed) != config.methods.end();
  const bool uses_raw = std::any_of(config.methods.begin(), config.methods.end(),
                                    [](Method x) { return x != Method::kProposed; });

  std::vector<ScenarioSet> proposed_sets;
  if (proposed) {
    if (config.cv_mode == StudyConfig::CvMode::kPerTrial) {
      RngStream cv_stream = trial_stream.substream(kTagCv);
      const CdeSelection sel = cross_validate(dataset, config.sigma_grid, config.lambda_grid,
                                              config.folds, cv_stream);
      sigma_x = sel.sigma_x;
      sigma_w = sel.sigma_w;
      lambda = sel.lambda;
    }
    RngStream center_stream = trial_stream.substream(kTagCenters);
    const GaussianBasis gauss =
        make_gaussian_basis(dataset, config.max_centers, sigma_x, sigma_w, center_stream);
    const CdeModel cde = fit(gauss, dataset, lambda);
    RngStream scen_stream = trial_stream.substream(kTagScenarios);
    proposed_sets = generate_scenarios(sys.model, cde, x0, k_max, config.n_r, scen_stream);
  }

  std::vector<Matrix> raw_paths;
  if (uses_raw)
    raw_paths = push_raw_paths(dataset.w.topRows(config.n_r), sys.model, x0, k_max);

  // Ground-truth trajectories, shared across methods and horizon steps.
  RngStream coverage_stream = trial_stream.substream(kTagCoverage);
  std::vector<Matrix> truth(config.k_list.size(),
                            Matrix(config.m_eval, sys.model.state_dim));
  for (Index t = 0; t < config.m_eval; ++t) {
    RngStream stream = coverage_stream.substream(static_cast<std::uint64_t>(t));
    Vector x = x0;
    for (int j = 1; j <= k_max; ++j) {
      const Vector w = sample_true_conditional(sys.ground_truth, x, stream);
      x = step(sys.model, j - 1, x, w);
      for (size_t ki = 0; ki < config.k_list.size(); ++ki)
        if (config.k_list[ki] == j) truth[ki].row(t) = x.transpose();
    }
  }

  SolverConfig solver_config;
  solver_config.alpha_s = config.alpha_s;

  TrialOutput out;
  for (Method method : config.methods) {
    for (size_t ki = 0; ki < config.k_list.size(); ++ki) {
      const int k = config.k_list[ki];
      SolveResult solve;
      switch (method) {
        case Method::kProposed:
          solve = solve_reachset(proposed_sets[k - 1], basis, solver_config);
          break;
        case Method::kScenario: {
          ScenarioSet set{k, raw_paths[k - 1]};
          solve = solve_scenario_baseline(set, basis);
          break;
        }
        case Method::kSca: {
          ScenarioSet set{k, raw_paths[k - 1]};
          solve = solve_reachset(set, basis, solver_config);
          break;
        }
      }
      TrialRecord record;
      record.trial = trial;
      record.method = method_name(method);
      record.k = k;
      record.objective = solve.objective;
      record.scenario_coverage = solve.hard_coverage;
      record.true_coverage = empirical_coverage(solve.params, truth[ki]);
      record.converged = solve.converged;
      out.records.push_back(std::move(record));
    }
  }
  return out;
}

}  // namespace

std::vector<ValidationReport> monte_carlo_study(const StudyConfig& config) {
  validate_study_config(config);
  const BuiltinSystem sys = builtin_system(config.model_name);
  const MonomialBasis basis(sys.model.state_dim, config.degree);
  RngStream root(config.seed);

  double sigma_x = config.sigma_x;
  double sigma_w = config.sigma_w;
  double lambda = config.lambda;
  const bool proposed = std::find(config.methods.begin(), config.methods.end(),
                                  Method::kProposed) != config.methods.end();
  if (proposed && config.cv_mode == StudyConfig::CvMode::kFirstTrial) {
    // Select hyperparameters once, on the first trial's dataset; the trials
    // draw from one data law, so the selection transfers.
    RngStream t0 = root.substream(0);
    RngStream data_stream = t0.substream(kTagData);
    const Dataset dataset =
        generate_dataset(sys.ground_truth, sys.default_marginal, config.n_data, data_stream);
    RngStream cv_stream = t0.substream(kTagCv);
    const CdeSelection sel =
        cross_validate(dataset, config.sigma_grid, config.lambda_grid, config.folds, cv_stream);
    sigma_x = sel.sigma_x;
    sigma_w = sel.sigma_w;
    lambda = sel.lambda;
  }

  std::vector<TrialOutput> outputs(config.trials);
  run_parallel(config.trials, config.threads, [&](int trial) {
    outputs[trial] = run_trial(trial, config, sys, basis, sigma_x, sigma_w, lambda, root);
  });

  std::vector<ValidationReport> reports;
  size_t slot = 0;
  for (Method method : config.methods) {
    for (int k : config.k_list) {
      ValidationReport report;
      report.method = method_name(method);
      report.k = k;
      report.n_r = config.n_r;
      double sum_objective = 0.0, sum_alpha = 0.0;
      int included = 0, violations = 0;
      for (int trial = 0; trial < config.trials; ++trial) {
        const TrialRecord& record = outputs[trial].records[slot];
        report.per_trial.push_back(record);
        if (!record.converged) {
          ++report.failed_trials;
          continue;
        }
        ++included;
        sum_objective += record.objective;
        sum_alpha += 1.0 - record.true_coverage;
        if (record.true_coverage < 1.0 - config.alpha) ++violations;
      }
      report.trials = included;
      if (included > 0) {
        report.mean_objective = sum_objective / included;
        report.e_alpha = sum_alpha / included;
        report.pr_vio = static_cast<double>(violations) / included;
      }
      if (report.failed_trials > 0.2 * config.trials)
        throw std::runtime_error("monte_carlo_study: over 20% solver failures for " +
                                 report.method + " at k=" + std::to_string(k));
      reports.push_back(std::move(report));
      ++slot;
    }
  }
  return reports;
}

void write_reports_csv(const std::vector<ValidationReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "method,k,n_r,mean_logdet_minv,pr_vio,e_alpha,trials,failed_trials\n";
  for (const auto& report : reports) {
    out << report.method << ',' << report.k << ',' << report.n_r << ','
        << format_double(report.mean_objective) << ',' << format_double(report.pr_vio) << ','
        << format_double(report.e_alpha) << ',' << report.trials << ',' << report.failed_trials
        << '\n';
  }
}

std::string reports_to_json(const std::vector<ValidationReport>& reports) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& report : reports) {
    nlohmann::ordered_json j;
    j["method"] = report.method;
    j["k"] = report.k;
    j["n_r"] = report.n_r;
    j["mean_logdet_minv"] = report.mean_objective;
    j["pr_vio"] = report.pr_vio;
    j["e_alpha"] = report.e_alpha;
    j["trials"] = report.trials;
    j["failed_trials"] = report.failed_trials;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& record : report.per_trial) {
      nlohmann::ordered_json r;
      r["trial"] = record.trial;
      r["objective"] = record.objective;
      r["scenario_coverage"] = record.scenario_coverage;
      r["true_coverage"] = record.true_coverage;
      r["converged"] = record.converged;
      rows.push_back(std::move(r));
    }
    j["per_trial"] = std::move(rows);
    out.push_back(std::move(j));
  }
  return out.dump(2);
}

Example1Result example1_study(int case_id, Index n_samples, double alpha, double alpha_s,
                              Index m_eval, std::uint64_t seed) {
  if (case_id < 1 || case_id > 4) throw std::invalid_argument("example1_study: case must be 1..4");
  if (n_samples < 1 || m_eval < 1)
    throw std::invalid_argument("example1_study: counts must be positive");
  (void)alpha;  // the target level is implied by alpha_s; kept for reporting symmetry

  const Matrix a = example1_dynamics_matrix();
  const int which_x0 = (case_id == 1 || case_id == 3) ? 1 : 2;
  const Vector x0 = example1_initial_state(which_x0);
  const bool mixed = case_id <= 2;

  RngStream root(seed);
  RngStream sample_stream = root.substream(1);
  Matrix states(n_samples, 2);
  const Vector pushed = a * x0;
  for (Index i = 0; i < n_samples; ++i) {
    const int branch = mixed ? (i < n_samples / 2 ? 1 : 2) : which_x0;
    states.row(i) = (pushed + gaussian_draw(example1_covariance(branch), sample_stream))
                        .transpose();
  }

  SolverConfig config;
  config.alpha_s = alpha_s;
  Example1Result result;
  result.solve = solve_reachset(ScenarioSet{1, states}, MonomialBasis(2, 2), config);

  RngStream coverage_stream = root.substream(2);
  const Matrix sigma = example1_covariance(which_x0);
  Index inside = 0;
  for (Index t = 0; t < m_eval; ++t) {
    const Vector x1 = pushed + gaussian_draw(sigma, coverage_stream);
    if (evaluate_q(result.solve.params, x1) <= 1.0) ++inside;
  }
  result.coverage = static_cast<double>(inside) / static_cast<double>(m_eval);
  return result;
}

}  // namespace polyreach
