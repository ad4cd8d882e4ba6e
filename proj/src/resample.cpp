#include "polyreach/resample.hpp"

#include <stdexcept>
#include <string>

#include "polyreach/csv_io.hpp"

namespace polyreach {

ConditionalSampler sampler_from_cde(const CdeModel& model) {
  return [model](const Vector& x, RngStream& rng) {
    return sample_conditional_one(model, x, rng);
  };
}

ConditionalSampler sampler_from_truth(const GroundTruthConditional& gt) {
  return [gt](const Vector& x, RngStream& rng) { return sample_true_conditional(gt, x, rng); };
}

std::vector<ScenarioSet> generate_scenarios(const SystemModel& model,
                                            const ConditionalSampler& sampler, const Vector& x0,
                                            int k_max, Index n_scenarios, RngStream& rng) {
  if (n_scenarios < 1) throw std::invalid_argument("generate_scenarios: need N_r >= 1");
  if (k_max < 1) throw std::invalid_argument("generate_scenarios: need k_max >= 1");
  if (x0.size() != model.state_dim)
    throw std::invalid_argument("generate_scenarios: x0 dimension mismatch");

  std::vector<ScenarioSet> sets(k_max);
  for (int k = 1; k <= k_max; ++k) {
    sets[k - 1].k = k;
    sets[k - 1].states.resize(n_scenarios, model.state_dim);
  }

  for (Index i = 0; i < n_scenarios; ++i) {
    Vector state = x0;
    for (int k = 1; k <= k_max; ++k) {
      RngStream stream = rng.substream(static_cast<std::uint64_t>(i),
                                       static_cast<std::uint64_t>(k));
      Vector w = sampler(state, stream);
      Vector next = step(model, k - 1, state, w);
      if (!next.allFinite()) {
        // Reinject via the step-1 rule from x0; a second failure aborts.
        w = sampler(x0, stream);
        next = step(model, 0, x0, w);
        if (!next.allFinite())
          throw std::runtime_error("generate_scenarios: particle " + std::to_string(i) +
                                   " non-finite at step " + std::to_string(k) +
                                   " even after reinjection from x0");
      }
      state = std::move(next);
      sets[k - 1].states.row(i) = state.transpose();
    }
  }
  return sets;
}

std::vector<ScenarioSet> generate_scenarios(const SystemModel& model, const CdeModel& cde,
                                            const Vector& x0, int k_max, Index n_scenarios,
                                            RngStream& rng) {
  return generate_scenarios(model, sampler_from_cde(cde), x0, k_max, n_scenarios, rng);
}

void write_scenarios_csv(const ScenarioSet& scenarios, const std::string& path) {
  std::vector<std::string> header;
  for (Index j = 0; j < scenarios.states.cols(); ++j)
    header.push_back("x" + std::to_string(j + 1));
  write_matrix_csv(scenarios.states, header, path);
}

ScenarioSet read_scenarios_csv(const std::string& path, int k) {
  const CsvTable table = read_csv(path);
  ScenarioSet set;
  set.k = k;
  set.states = table.values;
  return set;
}

}  // namespace polyreach
