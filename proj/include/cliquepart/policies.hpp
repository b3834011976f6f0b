#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "cliquepart/environment.hpp"
#include "cliquepart/rng.hpp"

namespace cliquepart {

// One action choice with its full distribution over legal_actions()
// (same ordering), for downstream likelihood-ratio training.
struct PolicyDecision {
  Edge action;
  double log_prob = 0.0;
  std::vector<double> distribution;
};

// Read-only view of the state; policies never mutate it.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyDecision decide(const EnvState& state, Rng& rng) = 0;
  // Value estimate hook for actor-critic policies; baselines return 0.
  virtual double value(const EnvState& /*state*/) const { return 0.0; }
  virtual bool has_value() const { return false; }
};

// Uniform over the legal actions.
class RandomPolicy : public Policy {
 public:
  PolicyDecision decide(const EnvState& state, Rng& rng) override;
};

// Deterministically picks the legal edge whose merge yields the largest
// immediate savings; ties broken lexicographically. Point-mass distribution.
class GreedyPolicy : public Policy {
 public:
  PolicyDecision decide(const EnvState& state, Rng& rng) override;
};

struct TrajectoryStep {
  ObservationSnapshot observation;
  Edge action;
  double log_prob = 0.0;
  double reward = 0.0;  // scaled by 1/D; raw minutes = reward * D
  double value = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::shared_ptr<const Instance> instance;
  double reset_objective = 0.0;
  double final_objective = 0.0;
  std::vector<StepOutcome> outcomes;  // raw per-step outcomes, for logs

  double total_scaled_reward() const {
    double sum = 0.0;
    for (const auto& s : steps) sum += s.reward;
    return sum;
  }
  std::vector<Edge> actions() const {
    std::vector<Edge> a;
    a.reserve(steps.size());
    for (const auto& s : steps) a.push_back(s.action);
    return a;
  }
};

// Runs reset -> step until terminal. Policies that report has_value() get
// their value estimates recorded for advantage estimation.
std::pair<Trajectory, double> rollout(std::shared_ptr<const Instance> inst,
                                      Policy& policy, std::uint64_t seed);
std::pair<Trajectory, double> rollout(const Instance& inst, Policy& policy,
                                      std::uint64_t seed);

}  // namespace cliquepart
