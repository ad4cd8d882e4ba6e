#pragma once

#include <functional>
#include <string>
#include <vector>

#include "polyreach/cde.hpp"
#include "polyreach/dynamics.hpp"
#include "polyreach/rng.hpp"
#include "polyreach/types.hpp"

namespace polyreach {

/// Predicted state scenarios at one horizon step.
struct ScenarioSet {
  int k = 0;      // horizon step >= 1
  Matrix states;  // N_r x n, row i is particle i

  Index count() const { return states.rows(); }
};

/// Draws one disturbance conditioned on the current state.
using ConditionalSampler = std::function<Vector(const Vector& x, RngStream&)>;

ConditionalSampler sampler_from_cde(const CdeModel& model);

/// Oracle mode: samples the true conditional instead of the estimate, for
/// ablations separating estimation error from Monte-Carlo error.
ConditionalSampler sampler_from_truth(const GroundTruthConditional& gt);

/// Per-particle forward recursion: particle i draws w ~ sampler(x) at every
/// step and advances through the dynamics; lineages are never shuffled.
/// A particle whose step turns non-finite is reinjected once via the step-1
/// rule from x0; a second failure aborts with a diagnostic. Substreams are
/// addressed by (particle, step), so results are order-independent.
std::vector<ScenarioSet> generate_scenarios(const SystemModel& model,
                                            const ConditionalSampler& sampler, const Vector& x0,
                                            int k_max, Index n_scenarios, RngStream& rng);

std::vector<ScenarioSet> generate_scenarios(const SystemModel& model, const CdeModel& cde,
                                            const Vector& x0, int k_max, Index n_scenarios,
                                            RngStream& rng);

/// CSV with header x1,...,xn, one scenario per row.
void write_scenarios_csv(const ScenarioSet& scenarios, const std::string& path);
ScenarioSet read_scenarios_csv(const std::string& path, int k);

}  // namespace polyreach
