#pragma once

#include <memory>
#include <ostream>
#include <set>
#include <vector>

#include "cliquepart/objective.hpp"

namespace cliquepart {

// Result of one environment transition.
struct StepOutcome {
  double reward = 0.0;            // objective decrease, minutes (always > 0)
  std::vector<Edge> added;        // edges that joined the solution
  std::vector<Edge> removed;      // edges pruned from the available set
  bool terminal = false;
};

// Everything a policy may look at: the current solution and available edge
// sets (the instance rides along separately). Cheap to copy, replayable.
struct ObservationSnapshot {
  std::vector<Edge> solution;   // sorted
  std::vector<Edge> available;  // sorted; same order as legal_actions()
};

// Episode state. An action merges the two endpoint clusters; every cross
// pair joins the solution (clusters stay cliques) and edges whose merged
// cluster would reach diameter D are pruned from the available set.
class EnvState {
 public:
  static EnvState reset(std::shared_ptr<const Instance> inst);
  static EnvState reset(const Instance& inst);  // copies the instance

  const Instance& instance() const { return *inst_; }
  const std::shared_ptr<const Instance>& instance_ptr() const { return inst_; }

  // Available edges in lexicographic (min,max) order; empty iff terminal.
  std::vector<Edge> legal_actions() const;

  bool is_available(Edge e) const { return available_.count(e) > 0; }
  const std::set<Edge>& available_edges() const { return available_; }
  const std::set<Edge>& solution_edges() const { return solution_; }

  // Applies one action. Throws IllegalActionError (state untouched) when
  // the edge is not available.
  StepOutcome step(Edge e);

  bool terminal() const { return available_.empty(); }
  int step_count() const { return steps_; }

  // Objective of the partition implied by the current clusters.
  double objective() const { return objective_; }

  Partition current_partition() const;
  ObservationSnapshot snapshot() const;

  int cluster_of(int node) const;
  const std::vector<int>& cluster_members(int node) const;

  // O(n^2) structural check of every state invariant; throws on violation.
  // Meant for tests and fuzz harnesses, not the hot path.
  void audit() const;

 private:
  EnvState() = default;
  void rebuild_available();

  std::shared_ptr<const Instance> inst_;
  std::vector<int> parent_;                 // union-find with path compression
  std::vector<std::vector<int>> members_;   // root -> sorted member list
  std::set<Edge> solution_;
  std::set<Edge> available_;
  int steps_ = 0;
  double objective_ = 0.0;

  int find(int v) const;
};

// Deterministic reconstruction of an episode; throws ReplayError with the
// failing position when an action is illegal at its turn.
std::pair<EnvState, std::vector<StepOutcome>> replay(
    std::shared_ptr<const Instance> inst, const std::vector<Edge>& actions);
std::pair<EnvState, std::vector<StepOutcome>> replay(const Instance& inst,
                                                     const std::vector<Edge>& actions);

// One JSON record per step: {step, action, reward, added, removed,
// objective_after}. Rewards are raw minutes.
void write_episode_log(std::ostream& out, const std::vector<Edge>& actions,
                       const std::vector<StepOutcome>& outcomes,
                       double reset_objective);

}  // namespace cliquepart
