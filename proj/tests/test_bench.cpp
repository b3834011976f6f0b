#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "cliquepart/bench.hpp"
#include "cliquepart/errors.hpp"
#include "cliquepart/nn.hpp"
#include "cliquepart/ppo.hpp"

using namespace cliquepart;

TEST_CASE("figure-1 verification passes on a fresh build") {
  const Figure1Report report = verify_figure1();
  for (const CheckResult& check : report.checks) {
    CAPTURE(check.name);
    CHECK(check.passed);
  }
  CHECK(report.all_passed());
  CHECK(report.checks.size() >= 9);
}

TEST_CASE("mutated fixtures are caught by the scripted checks") {
  // d_13 (0-based (1,3)) lowered to 50: merging {1,2} no longer prunes (2,3).
  {
    Instance inst = figure1_instance();
    inst.d(1, 3) = 50.0;
    inst.d(3, 1) = 50.0;
    EnvState s = EnvState::reset(inst);
    const StepOutcome out = s.step({1, 2});
    CHECK(out.removed.empty());  // the walkthrough's pruning event vanishes
  }
  // d_23 (0-based (2,3)) stretched to 240: only 3 initial near pairs remain.
  {
    Instance inst = figure1_instance();
    inst.d(2, 3) = 240.0;
    inst.d(3, 2) = 240.0;
    EnvState s = EnvState::reset(inst);
    CHECK(s.legal_actions().size() == 3);
  }
}

TEST_CASE("run_suite with exact references: exact method has zero gaps") {
  const std::vector<Instance> instances =
      generate_pool("general", 7, 60.0, 6, /*seed_base=*/50);
  SuiteOptions options;
  options.seed_base = 1;
  const GapReport report =
      run_suite({"random", "greedy", "exact"}, instances, options);

  CHECK(report.rows.size() == 18);
  CHECK(report.gap_label == "opt. gap");
  for (const GapRow& row : report.rows) {
    CHECK(row.gap >= -1e-9);
    if (row.method == "exact") CHECK(row.gap == 0.0);
  }

  // Aggregates must equal an independent recomputation from the rows.
  const auto aggregates = report.aggregates();
  for (const std::string& method : report.methods) {
    double sum = 0.0;
    int count = 0;
    double mn = 1e300, mx = -1e300;
    for (const GapRow& row : report.rows) {
      if (row.method != method) continue;
      sum += row.gap;
      ++count;
      mn = std::min(mn, row.gap);
      mx = std::max(mx, row.gap);
    }
    CHECK(aggregates.at(method).mean == doctest::Approx(sum / count).epsilon(1e-12));
    CHECK(aggregates.at(method).min == mn);
    CHECK(aggregates.at(method).max == mx);
  }
}

TEST_CASE("run_suite best-known reference relabels the gap column") {
  const std::vector<Instance> instances = generate_pool("general", 6, 60.0, 4, 70);
  SuiteOptions options;
  options.reference = ReferenceMode::kBestKnown;
  options.seed_base = 5;
  const GapReport report = run_suite({"random", "greedy"}, instances, options);
  CHECK(report.gap_label == "regret vs best-known");

  // Per instance, the best method's regret is zero by construction.
  for (int i = 0; i < 4; ++i) {
    double best = 1e300;
    for (const GapRow& row : report.rows)
      if (row.instance_id == i) best = std::min(best, row.gap);
    CHECK(best == 0.0);
  }
}

TEST_CASE("run_suite evaluates checkpointed policies and checks sizes") {
  const std::vector<Instance> instances = generate_pool("general", 5, 90.0, 3, 80);

  const PolicyParams actor = PolicyParams::init(8, 5);
  const CriticParams critic = CriticParams::init(5, 6);
  const auto path = std::filesystem::temp_directory_path() / "cliquepart_suite_ckpt.json";
  save_checkpoint(actor, critic, path);

  SuiteOptions options;
  options.seed_base = 3;
  const GapReport report =
      run_suite({"greedy", "policy:" + path.string()}, instances, options);
  for (const GapRow& row : report.rows) CHECK(row.gap >= -1e-9);

  const std::vector<Instance> wrong_n = generate_pool("general", 7, 90.0, 1, 81);
  CHECK_THROWS_AS(run_suite({"policy:" + path.string()}, wrong_n, options),
                  DimensionError);

  std::filesystem::remove(path);
}

TEST_CASE("export_tables writes rows and a four-statistic table") {
  GapReport report;
  report.methods = {"random"};
  report.rows.push_back({0, "random", 102.0, 100.0, 0.02});
  report.rows.push_back({1, "random", 100.0, 100.0, 0.0});

  const auto agg = report.aggregates().at("random");
  CHECK(agg.mean == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(agg.median == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(agg.min == 0.0);
  CHECK(agg.max == doctest::Approx(0.02).epsilon(1e-12));

  const auto csv = std::filesystem::temp_directory_path() / "cliquepart_report.csv";
  const auto txt = std::filesystem::temp_directory_path() / "cliquepart_report.txt";
  export_tables(report, csv, txt);

  const GapReport back = load_report_csv(csv);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].objective == 102.0);
  CHECK(back.rows[0].gap == 0.02);
  CHECK(back.methods == std::vector<std::string>{"random"});

  std::ifstream table(txt);
  std::stringstream text;
  text << table.rdbuf();
  CHECK(text.str().find("Mean opt. gap") != std::string::npos);
  CHECK(text.str().find("1.00%") != std::string::npos);
  CHECK(text.str().find("2.00%") != std::string::npos);

  std::filesystem::remove(csv);
  std::filesystem::remove(txt);
}

TEST_CASE("empty reports are rejected") {
  GapReport report;
  CHECK_THROWS_AS(export_tables(report, "a.csv", "a.txt"), ConfigError);
}
