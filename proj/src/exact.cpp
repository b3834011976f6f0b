#include "cliquepart/exact.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <string>

#include "cliquepart/errors.hpp"

namespace cliquepart {

namespace {

void check_cap(int n, int cap, const char* who) {
  // 2^n table entries; past ~26 bits the tables alone exceed memory.
  constexpr int kHardCap = 26;
  if (n > cap || n > kHardCap)
    throw SizeError(std::string(who) + ": n=" + std::to_string(n) +
                    " exceeds cap " + std::to_string(std::min(cap, kHardCap)));
  if (n < 1) throw SizeError(std::string(who) + ": empty instance");
}

}  // namespace

CliqueTable build_clique_table(const Instance& inst, int cap) {
  check_cap(inst.n, cap, "build_clique_table");
  const int n = inst.n;
  const double D = inst.threshold;
  const std::size_t size = std::size_t{1} << n;

  // Per-node near-neighbor bitmasks.
  std::vector<std::uint32_t> nbr(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && inst.d(i, j) < D) nbr[i] |= std::uint32_t{1} << j;

  CliqueTable table;
  table.n = n;
  table.valid.assign(size, 0);
  table.cluster_savings.assign(size, 0.0);
  table.valid[0] = 1;

  for (std::size_t S = 1; S < size; ++S) {
    const int v = std::bit_width(S) - 1;  // highest set bit
    const std::size_t rest = S ^ (std::size_t{1} << v);
    if (!table.valid[rest]) continue;
    if ((rest & ~static_cast<std::size_t>(nbr[v])) != 0) continue;
    table.valid[S] = 1;
    double extra = 0.0;
    for (std::size_t bits = rest; bits;) {
      const int u = std::countr_zero(bits);
      bits &= bits - 1;
      extra += D - inst.d(u, v);
    }
    table.cluster_savings[S] = table.cluster_savings[rest] + extra;
  }
  return table;
}

ExactResult solve_exact_dp(const Instance& inst, int cap) {
  check_cap(inst.n, cap, "solve_exact_dp");
  inst.validate();
  const int n = inst.n;
  const CliqueTable table = build_clique_table(inst, cap);
  const std::size_t size = std::size_t{1} << n;

  std::vector<double> dp(size, -std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> choice(size, 0);
  dp[0] = 0.0;

  for (std::size_t S = 1; S < size; ++S) {
    const std::size_t low = S & (~S + 1);
    const std::size_t rest = S ^ low;
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t best_T = 0;
    // Submasks of S that contain the anchor bit: T = sub | low, sub in rest.
    std::size_t sub = rest;
    for (;;) {
      const std::size_t T = sub | low;
      if (table.valid[T]) {
        const double cand = table.cluster_savings[T] + dp[S ^ T];
        if (cand > best) {
          best = cand;
          best_T = static_cast<std::uint32_t>(T);
        }
      }
      if (sub == 0) break;
      sub = (sub - 1) & rest;
    }
    dp[S] = best;  // singleton {low} is always valid, so best is finite
    choice[S] = best_T;
  }

  ExactResult result;
  result.partition.assignment.assign(n, -1);
  int label = 0;
  std::size_t S = size - 1;
  while (S) {
    const std::size_t T = choice[S];
    for (std::size_t bits = T; bits;) {
      const int v = std::countr_zero(bits);
      bits &= bits - 1;
      result.partition.assignment[v] = label;
    }
    ++label;
    S ^= T;
  }

  const double near_penalty =
      inst.threshold * static_cast<double>(near_pairs(inst).size());
  result.objective = near_penalty - dp[size - 1];
  return result;
}

double brute_force_reference(const Instance& inst) {
  check_cap(inst.n, kBruteForceCap, "brute_force_reference");
  inst.validate();
  const int n = inst.n;

  // Restricted growth strings: a[0]=0, a[i] <= 1 + max(a[0..i-1]). Each
  // string is one set partition.
  Partition p;
  p.assignment.assign(n, 0);
  double best = std::numeric_limits<double>::infinity();

  auto enumerate = [&](auto&& self, int i, int max_label) -> void {
    if (i == n) {
      if (is_feasible(inst, p)) best = std::min(best, evaluate(inst, p));
      return;
    }
    for (int label = 0; label <= max_label + 1; ++label) {
      p.assignment[i] = label;
      self(self, i + 1, std::max(max_label, label));
    }
  };
  enumerate(enumerate, 1, 0);
  return best;
}

}  // namespace cliquepart
