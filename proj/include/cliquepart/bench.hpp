#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cliquepart/exact.hpp"
#include "cliquepart/instance.hpp"
#include "cliquepart/objective.hpp"
#include "cliquepart/policies.hpp"

namespace cliquepart {

// The 4-site walkthrough instance (threshold 60): three mutually close
// sites, a fourth near site 2 only. Picking (1,2) prunes (2,3); picking
// (0,2) auto-adds (0,1); the optimum is 74.
Instance figure1_instance();

struct GapRow {
  int instance_id = 0;
  std::string method;
  double objective = 0.0;
  double reference = 0.0;
  double gap = 0.0;
};

struct GapAggregate {
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct GapReport {
  std::vector<GapRow> rows;
  std::vector<std::string> methods;            // column order
  std::string gap_label = "opt. gap";           // "regret vs best-known" without exact refs
  std::map<std::string, GapAggregate> aggregates() const;
};

enum class ReferenceMode {
  kExactDp,     // exact optimum via subset DP (n <= cap)
  kBestKnown,   // best objective over all evaluated methods
};

struct SuiteOptions {
  ReferenceMode reference = ReferenceMode::kExactDp;
  int exact_cap = kDefaultExactCap;
  std::uint64_t seed_base = 0;   // method randomness; instance k uses seed_base + k
  int random_episodes = 1;       // best-of-k for the random method
};

// Methods: "random", "greedy", "exact", or "policy:<checkpoint path>".
GapReport run_suite(const std::vector<std::string>& methods,
                    const std::vector<Instance>& instances,
                    const SuiteOptions& options);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Figure1Report {
  std::vector<CheckResult> checks;
  bool all_passed() const;
};

// Scripted assertions of the full walkthrough: initial availability,
// pruning after (1,2), auto-add after (0,2), terminal objective 74, and
// exact-DP optimum 74.
Figure1Report verify_figure1();

// CSV of the per-instance rows plus a formatted aggregate table
// (mean/median/min/max per method).
void export_tables(const GapReport& report, const std::filesystem::path& csv_path,
                   const std::filesystem::path& table_path);
std::string format_aggregate_table(const GapReport& report);
GapReport load_report_csv(const std::filesystem::path& csv_path);

}  // namespace cliquepart
