#pragma once

#include <cstdint>
#include <vector>

#include "cliquepart/objective.hpp"

namespace cliquepart {

inline constexpr int kDefaultExactCap = 18;
inline constexpr int kBruteForceCap = 10;

// Per-subset feasibility and savings, indexed by node bitmask.
struct CliqueTable {
  int n = 0;
  std::vector<std::uint8_t> valid;      // valid[S]: all pairs inside S below D
  std::vector<double> cluster_savings;  // sum of (D - d_ij) over pairs in S
};

// O(2^n * n) incremental build. Throws SizeError above the cap.
CliqueTable build_clique_table(const Instance& inst, int cap = kDefaultExactCap);

struct ExactResult {
  Partition partition;
  double objective = 0.0;
};

// Provably optimal partition via subset DP over the savings form:
// dp[S] = max over valid T subset of S containing S's lowest set bit of
// cluster_savings[T] + dp[S \ T]. Objective = D*|near pairs| - dp[full].
ExactResult solve_exact_dp(const Instance& inst, int cap = kDefaultExactCap);

// Independent oracle: enumerate every set partition (restricted growth
// strings), keep feasible ones, minimize evaluate(). Shares nothing with
// the DP path besides Instance and evaluate. n <= 10.
double brute_force_reference(const Instance& inst);

}  // namespace cliquepart
