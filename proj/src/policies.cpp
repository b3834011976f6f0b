#include "cliquepart/policies.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cliquepart/errors.hpp"

namespace cliquepart {

namespace {

std::vector<Edge> legal_or_throw(const EnvState& state) {
  auto legal = state.legal_actions();
  if (legal.empty()) throw NoActionError("policy queried on a terminal state");
  return legal;
}

}  // namespace

PolicyDecision RandomPolicy::decide(const EnvState& state, Rng& rng) {
  const auto legal = legal_or_throw(state);
  const int k = static_cast<int>(legal.size());
  const int pick = rng.uniform_int(k);
  PolicyDecision decision;
  decision.action = legal[pick];
  decision.distribution.assign(k, 1.0 / k);
  decision.log_prob = -std::log(static_cast<double>(k));
  return decision;
}

PolicyDecision GreedyPolicy::decide(const EnvState& state, Rng& /*rng*/) {
  const auto legal = legal_or_throw(state);
  const Instance& inst = state.instance();

  int best = 0;
  double best_savings = -1.0;
  for (int k = 0; k < static_cast<int>(legal.size()); ++k) {
    const auto& [i, j] = legal[k];
    double merge_savings = 0.0;
    for (int u : state.cluster_members(i))
      for (int v : state.cluster_members(j))
        merge_savings += inst.threshold - inst.d(u, v);
    if (merge_savings > best_savings) {  // strict: first (lexicographic) wins ties
      best_savings = merge_savings;
      best = k;
    }
  }

  PolicyDecision decision;
  decision.action = legal[best];
  decision.distribution.assign(legal.size(), 0.0);
  decision.distribution[best] = 1.0;
  decision.log_prob = 0.0;
  return decision;
}

std::pair<Trajectory, double> rollout(std::shared_ptr<const Instance> inst,
                                      Policy& policy, std::uint64_t seed) {
  Rng rng(seed);
  EnvState state = EnvState::reset(inst);
  const double scale = 1.0 / inst->threshold;

  Trajectory traj;
  traj.instance = std::move(inst);
  traj.reset_objective = state.objective();

  while (!state.terminal()) {
    TrajectoryStep step;
    step.observation = state.snapshot();
    const PolicyDecision decision = policy.decide(state, rng);
    step.action = decision.action;
    step.log_prob = decision.log_prob;
    step.value = policy.has_value() ? policy.value(state) : 0.0;

    StepOutcome outcome;
    try {
      outcome = state.step(decision.action);
    } catch (const IllegalActionError& e) {
      throw Error(std::string("policy contract violation: ") + e.what());
    }
    step.reward = outcome.reward * scale;
    traj.steps.push_back(std::move(step));
    traj.outcomes.push_back(std::move(outcome));
  }

  traj.final_objective = state.objective();
  const double final_objective = traj.final_objective;
  return {std::move(traj), final_objective};
}

std::pair<Trajectory, double> rollout(const Instance& inst, Policy& policy,
                                      std::uint64_t seed) {
  return rollout(std::make_shared<const Instance>(inst), policy, seed);
}

}  // namespace cliquepart
