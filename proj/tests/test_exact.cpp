#include <cmath>

#include <doctest.h>

#include "cliquepart/bench.hpp"
#include "cliquepart/environment.hpp"
#include "cliquepart/errors.hpp"
#include "cliquepart/exact.hpp"
#include "cliquepart/instance.hpp"
#include "cliquepart/rng.hpp"

using namespace cliquepart;

TEST_CASE("clique table of the figure-1 fixture") {
  const Instance inst = figure1_instance();
  const CliqueTable table = build_clique_table(inst);

  CHECK(table.valid[0b0111]);       // {0,1,2}
  CHECK_FALSE(table.valid[0b1111]); // {0,1,2,3}: d_03 >= D
  CHECK_FALSE(table.valid[0b1011]);
  CHECK(table.valid[0b1100]);       // {2,3}: d_23 = 50

  CHECK(table.cluster_savings[0b0111] == doctest::Approx(166.0).epsilon(1e-12));

  for (int v = 0; v < 4; ++v) {
    CHECK(table.valid[1u << v]);
    CHECK(table.cluster_savings[1u << v] == 0.0);
  }
  CHECK(table.valid[0]);
}

TEST_CASE("exact DP solves the figure-1 fixture optimally") {
  const ExactResult result = solve_exact_dp(figure1_instance());
  CHECK(result.objective == 74.0);
  const Partition& p = result.partition;
  CHECK(p.same_cluster(0, 1));
  CHECK(p.same_cluster(0, 2));
  CHECK_FALSE(p.same_cluster(0, 3));
}

TEST_CASE("no near pairs: optimum is zero with all singletons") {
  Instance inst;
  inst.n = 4;
  inst.threshold = 5.0;
  inst.distances.assign(16, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) inst.d(i, j) = 100.0;

  const ExactResult result = solve_exact_dp(inst);
  CHECK(result.objective == 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      CHECK_FALSE(result.partition.same_cluster(i, j));
}

TEST_CASE("brute force basics") {
  CHECK(brute_force_reference(figure1_instance()) == 74.0);

  Instance one;
  one.n = 1;
  one.threshold = 60.0;
  one.distances = {0.0};
  CHECK(brute_force_reference(one) == 0.0);

  Instance two;
  two.n = 2;
  two.threshold = 60.0;
  two.distances = {0.0, 10.0, 10.0, 0.0};
  CHECK(brute_force_reference(two) == 10.0);
}

TEST_CASE("size caps are enforced") {
  GeneralConfig cfg;
  cfg.n = 11;
  cfg.seed = 1;
  const Instance inst = generate_general(cfg);
  CHECK_THROWS_AS(brute_force_reference(inst), SizeError);
  CHECK_THROWS_AS(solve_exact_dp(inst, 10), SizeError);
  CHECK_THROWS_AS(build_clique_table(inst, 10), SizeError);
}

TEST_CASE("DP agrees with the brute-force oracle across the grid") {
  int checked = 0;
  for (double D : {30.0, 60.0, 120.0}) {
    for (int n = 2; n <= 9; ++n) {
      for (int rep = 0; rep < 2; ++rep) {
        const std::uint64_t seed = 7000 + checked;

        GeneralConfig gcfg;
        gcfg.n = n;
        gcfg.threshold = D;
        gcfg.seed = seed;
        const Instance gen = generate_general(gcfg);
        const ExactResult dp = solve_exact_dp(gen);
        CHECK(std::abs(dp.objective - brute_force_reference(gen)) <= 1e-9);
        CHECK(is_feasible(gen, dp.partition));
        CHECK(std::abs(evaluate(gen, dp.partition) - dp.objective) <= 1e-9);

        CitiesConfig ccfg;
        ccfg.n = n;
        ccfg.threshold = D;
        ccfg.seed = seed;
        const Instance city = generate_cities(ccfg);
        const ExactResult dp2 = solve_exact_dp(city);
        CHECK(std::abs(dp2.objective - brute_force_reference(city)) <= 1e-9);

        ++checked;
      }
    }
  }
  CHECK(checked == 48);
}

TEST_CASE("episodes can never beat the exact optimum") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    GeneralConfig cfg;
    cfg.n = 2 + rng.uniform_int(8);
    cfg.seed = rng.next_u64();
    const Instance inst = generate_general(cfg);
    const double optimum = solve_exact_dp(inst).objective;

    for (int episode = 0; episode < 5; ++episode) {
      EnvState s = EnvState::reset(inst);
      while (!s.terminal()) {
        const auto legal = s.legal_actions();
        s.step(legal[rng.uniform_int(static_cast<int>(legal.size()))]);
      }
      CHECK(s.objective() >= optimum - 1e-9);
    }
  }
}

TEST_CASE("a far-only node does not change the optimum") {
  GeneralConfig cfg;
  cfg.n = 7;
  cfg.seed = 55;
  const Instance base = generate_general(cfg);
  const double base_opt = solve_exact_dp(base).objective;

  Instance extended;
  extended.n = base.n + 1;
  extended.threshold = base.threshold;
  extended.distances.assign(static_cast<std::size_t>(extended.n) * extended.n, 0.0);
  for (int i = 0; i < base.n; ++i)
    for (int j = 0; j < base.n; ++j) extended.d(i, j) = base.d(i, j);
  for (int i = 0; i < base.n; ++i) {
    extended.d(i, base.n) = 999.0;
    extended.d(base.n, i) = 999.0;
  }

  CHECK(solve_exact_dp(extended).objective == base_opt);
}
