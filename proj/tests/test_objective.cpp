#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <doctest.h>

#include "cliquepart/bench.hpp"
#include "cliquepart/errors.hpp"
#include "cliquepart/objective.hpp"
#include "cliquepart/rng.hpp"

using namespace cliquepart;

namespace {

// Random feasible partition: repeatedly merge two random clusters whose
// union keeps diameter < D. Independent of the environment module.
Partition random_feasible_partition(const Instance& inst, Rng& rng) {
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < inst.n; ++i) clusters.push_back({i});

  const int merges = rng.uniform_int(inst.n);
  for (int m = 0; m < merges && clusters.size() > 1; ++m) {
    const int a = rng.uniform_int(static_cast<int>(clusters.size()));
    const int b = rng.uniform_int(static_cast<int>(clusters.size()));
    if (a == b) continue;
    bool ok = true;
    for (int u : clusters[a])
      for (int v : clusters[b])
        if (inst.d(u, v) >= inst.threshold) ok = false;
    if (!ok) continue;
    clusters[a].insert(clusters[a].end(), clusters[b].begin(), clusters[b].end());
    clusters.erase(clusters.begin() + b);
  }

  Partition p;
  p.assignment.assign(inst.n, 0);
  for (std::size_t label = 0; label < clusters.size(); ++label)
    for (int v : clusters[label]) p.assignment[v] = static_cast<int>(label);
  return p;
}

std::vector<std::vector<int>> clusters_of(const Partition& p) {
  const int labels = 1 + *std::max_element(p.assignment.begin(), p.assignment.end());
  std::vector<std::vector<int>> clusters(labels);
  for (int i = 0; i < p.n(); ++i) clusters[p.assignment[i]].push_back(i);
  return clusters;
}

Instance random_instance(Rng& rng, int n, double threshold) {
  Instance inst;
  inst.n = n;
  inst.threshold = threshold;
  inst.distances.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = rng.uniform(0.0, 240.0);
      inst.d(i, j) = d;
      inst.d(j, i) = d;
    }
  }
  return inst;
}

}  // namespace

TEST_CASE("near pairs of the figure-1 fixture") {
  const Instance inst = figure1_instance();
  const std::vector<Edge> expected = {{0, 1}, {0, 2}, {1, 2}, {2, 3}};
  CHECK(near_pairs(inst) == expected);
}

TEST_CASE("near pairs use a strict threshold") {
  Instance inst;
  inst.n = 2;
  inst.threshold = 60.0;
  inst.distances = {0.0, 60.0, 60.0, 0.0};
  CHECK(near_pairs(inst).empty());

  inst.distances = {0.0, 100.0, 100.0, 0.0};
  CHECK(near_pairs(inst).empty());

  inst.distances = {0.0, 59.999, 59.999, 0.0};
  CHECK(near_pairs(inst).size() == 1);
}

TEST_CASE("feasibility semantics") {
  const Instance inst = figure1_instance();

  CHECK(is_feasible(inst, Partition::singletons(4)));
  CHECK(is_feasible(inst, Partition{{0, 0, 0, 1}}));
  // {2,3} would put d_23=50 < 60 in one cluster: feasible.
  CHECK(is_feasible(inst, Partition{{0, 1, 2, 2}}));
  // d_03 = 240 >= 60 in one cluster: infeasible.
  CHECK_FALSE(is_feasible(inst, Partition{{0, 1, 1, 0}}));

  CHECK_THROWS_AS(is_feasible(inst, Partition{{0, 0}}), DimensionError);
}

TEST_CASE("evaluate matches the worked example") {
  const Instance inst = figure1_instance();
  CHECK(evaluate(inst, Partition{{0, 0, 0, 1}}) == 74.0);
  CHECK(evaluate(inst, Partition::singletons(4)) == 240.0);
  CHECK_THROWS_AS(evaluate(inst, Partition{{0, 1, 1, 0}}), FeasibilityError);
}

TEST_CASE("evaluate is zero without near pairs") {
  Instance inst;
  inst.n = 3;
  inst.threshold = 10.0;
  inst.distances.assign(9, 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) inst.d(i, j) = 50.0;
  CHECK(evaluate(inst, Partition::singletons(3)) == 0.0);
}

TEST_CASE("savings of the figure-1 triangle") {
  const Instance inst = figure1_instance();
  CHECK(savings(inst, {0}) == 0.0);
  CHECK(savings(inst, {0, 1, 2}) == doctest::Approx(166.0).epsilon(1e-12));
  CHECK(240.0 - savings(inst, {0, 1, 2}) == evaluate(inst, Partition{{0, 0, 0, 1}}));
  CHECK_THROWS_AS(savings(inst, {0, 3}), FeasibilityError);
}

TEST_CASE("optimality gap arithmetic") {
  CHECK(optimality_gap(74.0, 74.0) == 0.0);
  CHECK(optimality_gap(87.0, 74.0) == doctest::Approx(13.0 / 74.0).epsilon(1e-12));
  CHECK(optimality_gap(0.0, 0.0) == 0.0);
  CHECK(optimality_gap(74.0 * (1.0 + 1e-12), 74.0) == 0.0);
  CHECK_THROWS_AS(optimality_gap(1.0, 0.0), UndefinedGapError);
}

TEST_CASE("savings identity over random feasible partitions") {
  Rng rng(42);
  int checked = 0;
  while (checked < 1000) {
    const int n = 2 + rng.uniform_int(11);
    const Instance inst = random_instance(rng, n, 120.0);
    const Partition p = random_feasible_partition(inst, rng);
    const double direct = evaluate(inst, p);

    double total_savings = 0.0;
    for (const auto& cluster : clusters_of(p))
      if (!cluster.empty()) total_savings += savings(inst, cluster);
    const double via_savings =
        inst.threshold * static_cast<double>(near_pairs(inst).size()) - total_savings;

    CHECK(std::abs(direct - via_savings) <= 1e-9 * std::max(1.0, std::abs(direct)));
    ++checked;
  }
}

TEST_CASE("merging a mergeable cluster pair never increases the objective") {
  Rng rng(43);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 3 + rng.uniform_int(9);
    const Instance inst = random_instance(rng, n, 140.0);
    const Partition p = random_feasible_partition(inst, rng);
    auto clusters = clusters_of(p);
    if (clusters.size() < 2) continue;

    const int a = rng.uniform_int(static_cast<int>(clusters.size()));
    int b = rng.uniform_int(static_cast<int>(clusters.size()));
    if (a == b) continue;
    bool mergeable = true;
    for (int u : clusters[a])
      for (int v : clusters[b])
        if (inst.d(u, v) >= inst.threshold) mergeable = false;
    if (!mergeable) continue;

    Partition merged = p;
    for (int v : clusters[b]) merged.assignment[v] = p.assignment[clusters[a][0]];
    CHECK(evaluate(inst, merged) <= evaluate(inst, p) + 1e-12);
  }
}

TEST_CASE("evaluate is invariant under cluster relabeling") {
  Rng rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + rng.uniform_int(9);
    const Instance inst = random_instance(rng, n, 100.0);
    const Partition p = random_feasible_partition(inst, rng);

    // Random permutation of the label space.
    const int labels = 1 + *std::max_element(p.assignment.begin(), p.assignment.end());
    std::vector<int> perm(labels);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = labels - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.uniform_int(i + 1)]);

    Partition relabeled = p;
    for (int& a : relabeled.assignment) a = perm[a];
    CHECK(evaluate(inst, relabeled) == evaluate(inst, p));
  }
}

TEST_CASE("induced pair indicators form an equivalence relation") {
  Rng rng(45);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + rng.uniform_int(7);
    const Instance inst = random_instance(rng, n, 130.0);
    const Partition p = random_feasible_partition(inst, rng);

    auto x = [&](int i, int j) { return p.same_cluster(i, j) ? 0 : 1; };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        CHECK(x(i, j) == x(j, i));
        if (inst.d(i, j) >= inst.threshold && i != j) CHECK(x(i, j) == 1);
        for (int l = 0; l < n; ++l) CHECK(x(i, j) <= x(i, l) + x(l, j));
      }
    }
  }
}
