#pragma once

#include <utility>
#include <vector>

#include "cliquepart/instance.hpp"

namespace cliquepart {

// Unordered site pair, stored with first < second.
using Edge = std::pair<int, int>;

inline Edge make_edge(int i, int j) {
  return i < j ? Edge{i, j} : Edge{j, i};
}

// Node-to-cluster assignment. Labels are arbitrary; only equality matters.
struct Partition {
  std::vector<int> assignment;

  int n() const { return static_cast<int>(assignment.size()); }
  bool same_cluster(int i, int j) const { return assignment[i] == assignment[j]; }

  static Partition singletons(int n);
};

// All pairs {i,j}, i<j, with d_ij strictly below the threshold. Only these
// pairs ever enter the objective; a pair at or above D is forced separate.
std::vector<Edge> near_pairs(const Instance& inst);

// True iff every same-cluster pair is a near pair (cluster diameter < D).
bool is_feasible(const Instance& inst, const Partition& p);

// Objective of a feasible partition: sum over near pairs of d_ij when the
// pair shares a cluster and of the penalty D when it does not. Summation
// order is fixed row-major over i<j for reproducibility.
double evaluate(const Instance& inst, const Partition& p);

// Objective reduction of forming `cluster` instead of leaving its members
// as singletons: sum of (D - d_ij) over pairs inside the cluster.
double savings(const Instance& inst, const std::vector<int>& cluster);

// (candidate - reference) / reference, clamped to 0 within 1e-9 relative.
double optimality_gap(double candidate, double reference);

// Partition file format: {"assignment": [int; n]}.
void save_partition(const Partition& p, const std::filesystem::path& path);
Partition load_partition(const std::filesystem::path& path);

}  // namespace cliquepart
