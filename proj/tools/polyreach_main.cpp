// Command-line front end: dataset generation, conditional-density fitting,
// scenario generation, reach-set solving, validation studies and plot-data
// emission. Every run writes a manifest with all parameters, seeds and
// artifact fingerprints next to its outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polyreach/cde.hpp"
#include "polyreach/csv_io.hpp"
#include "polyreach/dynamics.hpp"
#include "polyreach/manifest.hpp"
#include "polyreach/polyset.hpp"
#include "polyreach/resample.hpp"
#include "polyreach/solver.hpp"
#include "polyreach/study_config.hpp"
#include "polyreach/validate.hpp"

namespace fs = std::filesystem;
using namespace polyreach;

namespace {

Vector parse_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

std::vector<double> parse_grid(const std::string& text) {
  const Vector v = parse_vector(text);
  return std::vector<double>(v.begin(), v.end());
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stoi(item));
  return values;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string scenario_file_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scenarios_k%02d.csv", k);
  return buf;
}

/// Accepts either a bare params JSON or a SolveResult JSON wrapping one.
SublevelSetParams load_params(const std::string& path) {
  const auto j = nlohmann::json::parse(read_text(path));
  if (j.contains("params")) return params_from_json(j.at("params").dump());
  return params_from_json(j.dump());
}

struct ManifestBuilder {
  Manifest manifest;
  void param(const std::string& key, const std::string& value) { manifest.params[key] = value; }
  void param(const std::string& key, double value) { manifest.params[key] = format_double(value); }
  void param(const std::string& key, long long value) { manifest.params[key] = std::to_string(value); }
  void output(const std::string& path) { manifest.outputs.push_back(path); }
};

int run_gen_data(const std::string& model_name, long long n, std::uint64_t seed,
                 const std::string& x0_text, const std::string& out) {
  const BuiltinSystem sys = builtin_system(model_name);
  StateSampler marginal = sys.default_marginal;
  if (!x0_text.empty()) {
    const Vector pinned = parse_vector(x0_text);
    marginal = [pinned](RngStream&) { return pinned; };
  }
  RngStream root(seed);
  const Dataset ds = generate_dataset(sys.ground_truth, marginal, n, root);
  write_dataset_csv(ds, out);

  ManifestBuilder mb;
  mb.manifest.subcommand = "gen-data";
  mb.param("model", model_name);
  mb.param("n", n);
  mb.param("seed", static_cast<long long>(seed));
  if (!x0_text.empty()) mb.param("x0", x0_text);
  mb.param("out", out);
  mb.output(out);
  write_manifest(mb.manifest, out + ".manifest.json");
  return 0;
}

int run_fit_cde(const std::string& data_path, const std::string& out, int folds,
                std::uint64_t seed, long long centers, double sigma_x, double sigma_w,
                double lambda, const std::string& sigma_grid_text,
                const std::string& lambda_grid_text) {
  const Dataset ds = read_dataset_csv(data_path);
  RngStream root(seed);

  const bool fixed = sigma_x > 0.0 && sigma_w > 0.0 && lambda >= 0.0;
  CdeSelection sel{sigma_x, sigma_w, lambda};
  if (!fixed) {
    const std::vector<double> sigma_grid =
        sigma_grid_text.empty() ? std::vector<double>{0.1, 0.25, 0.5, 1.0, 2.0}
                                : parse_grid(sigma_grid_text);
    const std::vector<double> lambda_grid =
        lambda_grid_text.empty() ? std::vector<double>{1e-4, 1e-3, 1e-2, 1e-1}
                                 : parse_grid(lambda_grid_text);
    RngStream cv_stream = root.substream(1);
    sel = cross_validate(ds, sigma_grid, lambda_grid, folds, cv_stream);
    std::cout << "selected sigma_x=" << sel.sigma_x << " sigma_w=" << sel.sigma_w
              << " lambda=" << sel.lambda << "\n";
  }
  RngStream center_stream = root.substream(2);
  const GaussianBasis basis = make_gaussian_basis(ds, centers, sel.sigma_x, sel.sigma_w,
                                                  center_stream);
  const CdeModel model = fit(basis, ds, sel.lambda);
  write_text(out, cde_to_json(model));

  ManifestBuilder mb;
  mb.manifest.subcommand = "fit-cde";
  mb.param("data", data_path);
  mb.param("folds", static_cast<long long>(folds));
  mb.param("seed", static_cast<long long>(seed));
  mb.param("centers", centers);
  mb.param("sigma_x", sel.sigma_x);
  mb.param("sigma_w", sel.sigma_w);
  mb.param("lambda", sel.lambda);
  mb.param("out", out);
  mb.output(out);
  write_manifest(mb.manifest, out + ".manifest.json");
  return 0;
}

int run_scenarios(const std::string& model_name, const std::string& cde_path,
                  const std::string& x0_text, int k_max, long long n_r, std::uint64_t seed,
                  const std::string& out_dir) {
  const BuiltinSystem sys = builtin_system(model_name);
  const CdeModel cde = cde_from_json(read_text(cde_path));
  const Vector x0 = parse_vector(x0_text);
  fs::create_directories(out_dir);

  RngStream root(seed);
  const auto sets = generate_scenarios(sys.model, cde, x0, k_max, n_r, root);

  ManifestBuilder mb;
  mb.manifest.subcommand = "scenarios";
  mb.param("model", model_name);
  mb.param("cde", cde_path);
  mb.param("x0", x0_text);
  mb.param("k", static_cast<long long>(k_max));
  mb.param("nr", n_r);
  mb.param("seed", static_cast<long long>(seed));
  mb.param("out", out_dir);
  for (const auto& set : sets) {
    const std::string path = (fs::path(out_dir) / scenario_file_name(set.k)).string();
    write_scenarios_csv(set, path);
    mb.output(path);
  }
  write_manifest(mb.manifest, (fs::path(out_dir) / "manifest.json").string());
  return 0;
}

int run_reach(const std::string& scenarios_path, int k, int degree, double alpha_s,
              bool scenario_baseline, const std::string& out, const std::string& trace_path) {
  std::string file = scenarios_path;
  if (fs::is_directory(scenarios_path))
    file = (fs::path(scenarios_path) / scenario_file_name(k)).string();
  const ScenarioSet set = read_scenarios_csv(file, k);
  const MonomialBasis basis(static_cast<int>(set.states.cols()), degree);

  SolverConfig config;
  config.alpha_s = alpha_s;
  if (!trace_path.empty()) config.trace_every = 1;
  const SolveResult result = scenario_baseline ? solve_scenario_baseline(set, basis)
                                               : solve_reachset(set, basis, config);
  write_text(out, solve_result_to_json(result));
  if (!trace_path.empty()) write_trace_csv(result.trace, trace_path);

  ManifestBuilder mb;
  mb.manifest.subcommand = "reach";
  mb.param("scenarios", scenarios_path);
  mb.param("k", static_cast<long long>(k));
  mb.param("d", static_cast<long long>(degree));
  mb.param("alpha_s", alpha_s);
  mb.param("scenario_baseline", scenario_baseline ? "true" : "false");
  mb.param("out", out);
  if (!trace_path.empty()) mb.param("trace", trace_path);
  mb.output(out);
  if (!trace_path.empty()) mb.output(trace_path);
  write_manifest(mb.manifest, out + ".manifest.json");

  if (!result.converged) {
    std::cerr << "reach: solver did not reach a feasible set (hard coverage "
              << result.hard_coverage << ")\n";
    return 2;
  }
  std::cout << "objective " << result.objective << ", hard coverage " << result.hard_coverage
            << "\n";
  return 0;
}

int run_study(StudyConfig config, const std::string& label,
              const std::map<std::string, std::string>& recorded) {
  if (config.output_dir.empty())
    throw std::invalid_argument(label + ": an output directory is required");
  fs::create_directories(config.output_dir);
  const auto reports = monte_carlo_study(config);

  const std::string csv_path = (fs::path(config.output_dir) / "report.csv").string();
  const std::string json_path = (fs::path(config.output_dir) / "report.json").string();
  write_reports_csv(reports, csv_path);
  write_text(json_path, reports_to_json(reports));

  ManifestBuilder mb;
  mb.manifest.subcommand = label;
  for (const auto& [key, value] : recorded) mb.param(key, value);
  mb.output(csv_path);
  mb.output(json_path);
  write_manifest(mb.manifest, (fs::path(config.output_dir) / "manifest.json").string());

  for (const auto& report : reports)
    std::cout << report.method << " k=" << report.k << " pr_vio=" << report.pr_vio
              << " e_alpha=" << report.e_alpha << " mean_logdet=" << report.mean_objective
              << " failed=" << report.failed_trials << "\n";
  return 0;
}

int run_example1(int case_id, std::uint64_t seed, long long n, double alpha, double alpha_s,
                 long long m_eval, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Example1Result result = example1_study(case_id, n, alpha, alpha_s, m_eval, seed);

  nlohmann::ordered_json j;
  j["case"] = case_id;
  j["coverage"] = result.coverage;
  j["result"] = nlohmann::ordered_json::parse(solve_result_to_json(result.solve));
  const std::string out_path =
      (fs::path(out_dir) / ("example1_case" + std::to_string(case_id) + ".json")).string();
  write_text(out_path, j.dump(2));

  ManifestBuilder mb;
  mb.manifest.subcommand = "example1";
  mb.param("case", static_cast<long long>(case_id));
  mb.param("seed", static_cast<long long>(seed));
  mb.param("n", n);
  mb.param("alpha", alpha);
  mb.param("alpha_s", alpha_s);
  mb.param("meval", m_eval);
  mb.param("out", out_dir);
  mb.output(out_path);
  write_manifest(mb.manifest, (fs::path(out_dir) / "manifest.json").string());

  std::cout << "case " << case_id << " coverage " << result.coverage << " objective "
            << result.solve.objective << "\n";
  return 0;
}

int run_plot_data(const std::string& params_path, int grid, const std::string& scenarios_path,
                  const std::string& bounds_text, const std::string& out) {
  const SublevelSetParams params = load_params(params_path);
  if (params.basis.state_dim() != 2)
    throw std::invalid_argument("plot-data: grids are only emitted for 2-D states");
  if (grid < 2) throw std::invalid_argument("plot-data: need grid >= 2");

  double x_min, x_max, y_min, y_max;
  if (!bounds_text.empty()) {
    const Vector b = parse_vector(bounds_text);
    if (b.size() != 4) throw std::invalid_argument("plot-data: bounds need xmin,xmax,ymin,ymax");
    x_min = b[0], x_max = b[1], y_min = b[2], y_max = b[3];
  } else if (!scenarios_path.empty()) {
    const ScenarioSet set = read_scenarios_csv(scenarios_path, 0);
    const Vector low = set.states.colwise().minCoeff();
    const Vector high = set.states.colwise().maxCoeff();
    const Vector margin = 0.1 * (high - low);
    x_min = low[0] - margin[0], x_max = high[0] + margin[0];
    y_min = low[1] - margin[1], y_max = high[1] + margin[1];
  } else {
    throw std::invalid_argument("plot-data: give --scenarios or --bounds");
  }

  Matrix rows(static_cast<Index>(grid) * grid, 3);
  Index r = 0;
  for (int i = 0; i < grid; ++i) {
    const double x1 = x_min + (x_max - x_min) * i / (grid - 1);
    for (int j = 0; j < grid; ++j) {
      const double x2 = y_min + (y_max - y_min) * j / (grid - 1);
      Vector x(2);
      x << x1, x2;
      rows.row(r++) << x1, x2, evaluate_q(params, x);
    }
  }
  write_matrix_csv(rows, {"x1", "x2", "q"}, out);

  ManifestBuilder mb;
  mb.manifest.subcommand = "plot-data";
  mb.param("params", params_path);
  mb.param("grid", static_cast<long long>(grid));
  if (!scenarios_path.empty()) mb.param("scenarios", scenarios_path);
  if (!bounds_text.empty()) mb.param("bounds", bounds_text);
  mb.param("out", out);
  mb.output(out);
  write_manifest(mb.manifest, out + ".manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polyreach: probabilistic reachable sets under contextual uncertainty"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a state/disturbance dataset");
  std::string gen_model = "engine_powertrain", gen_x0, gen_out;
  long long gen_n = 1000;
  std::uint64_t gen_seed = 0;
  gen->add_option("--model", gen_model, "built-in system name");
  gen->add_option("--n", gen_n, "number of pairs")->required();
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--x0", gen_x0, "pin the conditioning state, e.g. 3,1");
  gen->add_option("--out", gen_out, "output csv")->required();

  // fit-cde
  auto* fitc = app.add_subcommand("fit-cde", "fit the conditional density estimator");
  std::string fit_data, fit_out, fit_sigma_grid, fit_lambda_grid;
  int fit_folds = 5;
  std::uint64_t fit_seed = 0;
  long long fit_centers = 100;
  double fit_sigma_x = -1.0, fit_sigma_w = -1.0, fit_lambda = -1.0;
  fitc->add_option("--data", fit_data, "dataset csv")->required();
  fitc->add_option("--out", fit_out, "output model json")->required();
  fitc->add_option("--folds", fit_folds, "cross-validation folds");
  fitc->add_option("--seed", fit_seed, "rng seed");
  fitc->add_option("--centers", fit_centers, "max kernel centers");
  fitc->add_option("--sigma-x", fit_sigma_x, "fixed state bandwidth (skips CV with the others)");
  fitc->add_option("--sigma-w", fit_sigma_w, "fixed disturbance bandwidth");
  fitc->add_option("--lambda", fit_lambda, "fixed ridge coefficient");
  fitc->add_option("--sigma-grid", fit_sigma_grid, "comma-separated CV grid");
  fitc->add_option("--lambda-grid", fit_lambda_grid, "comma-separated CV grid");

  // scenarios
  auto* scen = app.add_subcommand("scenarios", "generate resampled scenario sets");
  std::string scen_model = "engine_powertrain", scen_cde, scen_x0, scen_out;
  int scen_k = 1;
  long long scen_nr = 500;
  std::uint64_t scen_seed = 0;
  scen->add_option("--model", scen_model, "built-in system name");
  scen->add_option("--cde", scen_cde, "fitted model json")->required();
  scen->add_option("--x0", scen_x0, "initial state, e.g. 3.3767,5.0524")->required();
  scen->add_option("--k", scen_k, "horizon")->required();
  scen->add_option("--nr", scen_nr, "scenarios per step");
  scen->add_option("--seed", scen_seed, "rng seed");
  scen->add_option("--out", scen_out, "output directory")->required();

  // reach
  auto* reach = app.add_subcommand("reach", "solve the reach-set problem on scenarios");
  std::string reach_scen, reach_out, reach_trace;
  int reach_k = 1, reach_d = 2;
  double reach_alpha_s = 0.185;
  bool reach_baseline = false;
  reach->add_option("--scenarios", reach_scen, "scenario csv or directory")->required();
  reach->add_option("--k", reach_k, "horizon step to solve");
  reach->add_option("--d", reach_d, "polynomial half-degree");
  reach->add_option("--alpha-s", reach_alpha_s, "risk level");
  reach->add_flag("--scenario-baseline", reach_baseline, "full-containment scenario approach");
  reach->add_option("--out", reach_out, "output SolveResult json")->required();
  reach->add_option("--trace", reach_trace, "per-iteration trace csv");

  // validate
  auto* val = app.add_subcommand("validate", "run a study from a config file");
  std::string val_study, val_out;
  std::vector<std::string> val_set;
  val->add_option("--study", val_study, "study file (flat TOML)")->required();
  val->add_option("--out", val_out, "output directory (overrides the file)");
  val->add_option("--set", val_set, "key=value overrides, e.g. --set trials=5");

  // example1
  auto* ex1 = app.add_subcommand("example1", "reproduce a case of the linear example");
  int ex1_case = 1;
  std::uint64_t ex1_seed = 0;
  long long ex1_n = 1000, ex1_meval = 100000;
  double ex1_alpha = 0.2, ex1_alpha_s = 0.185;
  std::string ex1_out = "example1_out";
  ex1->add_option("--case", ex1_case, "case 1..4")->required();
  ex1->add_option("--seed", ex1_seed, "rng seed");
  ex1->add_option("--n", ex1_n, "disturbance samples");
  ex1->add_option("--alpha", ex1_alpha, "target risk");
  ex1->add_option("--alpha-s", ex1_alpha_s, "solver risk level");
  ex1->add_option("--meval", ex1_meval, "coverage draws");
  ex1->add_option("--out", ex1_out, "output directory");

  // engine-study
  auto* eng = app.add_subcommand("engine-study", "Monte-Carlo study on the engine model");
  std::string eng_k = "11", eng_methods = "proposed,scenario,sca", eng_out = "engine_out";
  int eng_trials = 100, eng_d = 2, eng_threads = 0;
  long long eng_n = 1000, eng_nr = 500, eng_meval = 10000;
  double eng_alpha = 0.2, eng_alpha_s = 0.185;
  std::uint64_t eng_seed = 0;
  eng->add_option("--trials", eng_trials, "Monte-Carlo trials");
  eng->add_option("--n", eng_n, "dataset size per trial");
  eng->add_option("--nr", eng_nr, "scenarios per step");
  eng->add_option("--k", eng_k, "horizon steps, e.g. 11 or 11,15");
  eng->add_option("--d", eng_d, "polynomial half-degree");
  eng->add_option("--alpha", eng_alpha, "target risk");
  eng->add_option("--alpha-s", eng_alpha_s, "solver risk level");
  eng->add_option("--meval", eng_meval, "coverage draws per trial");
  eng->add_option("--seed", eng_seed, "study seed");
  eng->add_option("--threads", eng_threads, "worker threads (0 = hardware)");
  eng->add_option("--methods", eng_methods, "comma-separated method list");
  eng->add_option("--out", eng_out, "output directory");

  // plot-data
  auto* plot = app.add_subcommand("plot-data", "evaluate q on a grid for contour plots");
  std::string plot_params, plot_scen, plot_bounds, plot_out;
  int plot_grid = 200;
  plot->add_option("--params", plot_params, "params or SolveResult json")->required();
  plot->add_option("--grid", plot_grid, "grid resolution per axis");
  plot->add_option("--scenarios", plot_scen, "scenario csv fixing the bounding box");
  plot->add_option("--bounds", plot_bounds, "xmin,xmax,ymin,ymax");
  plot->add_option("--out", plot_out, "output csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) return run_gen_data(gen_model, gen_n, gen_seed, gen_x0, gen_out);
    if (fitc->parsed())
      return run_fit_cde(fit_data, fit_out, fit_folds, fit_seed, fit_centers, fit_sigma_x,
                         fit_sigma_w, fit_lambda, fit_sigma_grid, fit_lambda_grid);
    if (scen->parsed())
      return run_scenarios(scen_model, scen_cde, scen_x0, scen_k, scen_nr, scen_seed, scen_out);
    if (reach->parsed())
      return run_reach(reach_scen, reach_k, reach_d, reach_alpha_s, reach_baseline, reach_out,
                       reach_trace);
    if (val->parsed()) {
      StudyConfig config = parse_study_file(val_study);
      std::map<std::string, std::string> overrides;
      for (const auto& kv : val_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("validate: --set expects key=value");
        overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      apply_study_overrides(config, overrides);
      if (!val_out.empty()) config.output_dir = val_out;
      std::map<std::string, std::string> recorded;
      recorded["study"] = val_study;
      std::istringstream echo(study_config_to_string(config));
      std::string line;
      while (std::getline(echo, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos)
          recorded[line.substr(0, eq - 1)] = line.substr(eq + 2);
      }
      return run_study(std::move(config), "validate", recorded);
    }
    if (ex1->parsed())
      return run_example1(ex1_case, ex1_seed, ex1_n, ex1_alpha, ex1_alpha_s, ex1_meval, ex1_out);
    if (eng->parsed()) {
      StudyConfig config;
      config.model_name = "engine_powertrain";
      config.trials = eng_trials;
      config.n_data = eng_n;
      config.n_r = eng_nr;
      config.k_list = parse_int_list(eng_k);
      config.degree = eng_d;
      config.alpha = eng_alpha;
      config.alpha_s = eng_alpha_s;
      config.m_eval = eng_meval;
      config.seed = eng_seed;
      config.threads = eng_threads;
      config.output_dir = eng_out;
      config.methods.clear();
      std::stringstream ss(eng_methods);
      std::string item;
      while (std::getline(ss, item, ',')) config.methods.push_back(method_from_name(item));
      std::map<std::string, std::string> recorded;
      recorded["trials"] = std::to_string(eng_trials);
      recorded["n"] = std::to_string(eng_n);
      recorded["nr"] = std::to_string(eng_nr);
      recorded["k"] = eng_k;
      recorded["d"] = std::to_string(eng_d);
      recorded["alpha"] = format_double(eng_alpha);
      recorded["alpha_s"] = format_double(eng_alpha_s);
      recorded["meval"] = std::to_string(eng_meval);
      recorded["seed"] = std::to_string(eng_seed);
      recorded["methods"] = eng_methods;
      recorded["out"] = eng_out;
      return run_study(std::move(config), "engine-study", recorded);
    }
    if (plot->parsed())
      return run_plot_data(plot_params, plot_grid, plot_scen, plot_bounds, plot_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
