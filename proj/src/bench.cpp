#include "cliquepart/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "cliquepart/environment.hpp"
#include "cliquepart/errors.hpp"
#include "cliquepart/exact.hpp"
#include "cliquepart/nn.hpp"

namespace cliquepart {

Instance figure1_instance() {
  Instance inst;
  inst.n = 4;
  inst.threshold = 60.0;
  inst.distances.assign(16, 0.0);
  auto set = [&](int i, int j, double d) {
    inst.d(i, j) = d;
    inst.d(j, i) = d;
  };
  set(0, 1, 3.0);
  set(0, 2, 5.0);
  set(1, 2, 6.0);
  set(2, 3, 50.0);
  set(0, 3, 240.0);
  set(1, 3, 240.0);
  return inst;
}

std::map<std::string, GapAggregate> GapReport::aggregates() const {
  std::map<std::string, std::vector<double>> gaps;
  for (const auto& row : rows) gaps[row.method].push_back(row.gap);

  std::map<std::string, GapAggregate> out;
  for (auto& [method, values] : gaps) {
    std::sort(values.begin(), values.end());
    GapAggregate agg;
    agg.mean = std::accumulate(values.begin(), values.end(), 0.0) /
               static_cast<double>(values.size());
    const std::size_t m = values.size();
    agg.median = (m % 2 == 1) ? values[m / 2]
                              : 0.5 * (values[m / 2 - 1] + values[m / 2]);
    agg.min = values.front();
    agg.max = values.back();
    out[method] = agg;
  }
  return out;
}

bool Figure1Report::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

Figure1Report verify_figure1() {
  Figure1Report report;
  auto check = [&](const std::string& name, bool ok, const std::string& detail) {
    report.checks.push_back({name, ok, detail});
    return ok;
  };

  const auto inst = std::make_shared<const Instance>(figure1_instance());
  EnvState state = EnvState::reset(inst);

  const std::vector<Edge> expected_avail = {{0, 1}, {0, 2}, {1, 2}, {2, 3}};
  check("initial availability = {(0,1),(0,2),(1,2),(2,3)}",
        state.legal_actions() == expected_avail,
        "got " + std::to_string(state.legal_actions().size()) + " edges");
  check("reset objective = 240", state.objective() == 240.0,
        "got " + std::to_string(state.objective()));

  StepOutcome first = state.step({1, 2});
  check("step (1,2) adds exactly that edge",
        first.added == std::vector<Edge>{{1, 2}}, "");
  check("step (1,2) prunes (2,3)", first.removed == std::vector<Edge>{{2, 3}},
        "");
  check("step (1,2) reward = 54", first.reward == 54.0,
        "got " + std::to_string(first.reward));

  StepOutcome second = state.step({0, 2});
  check("step (0,2) auto-adds (0,1)",
        second.added == std::vector<Edge>{{0, 1}, {0, 2}}, "");
  check("episode terminal after two picks", second.terminal, "");
  check("final objective = 74", state.objective() == 74.0,
        "got " + std::to_string(state.objective()));

  const ExactResult exact = solve_exact_dp(*inst);
  check("exact optimum = 74", exact.objective == 74.0,
        "got " + std::to_string(exact.objective));

  return report;
}

namespace {

double best_of_k_random(std::shared_ptr<const Instance> inst, std::uint64_t seed,
                        int episodes) {
  RandomPolicy policy;
  Rng seeder(seed);
  double best = std::numeric_limits<double>::infinity();
  for (int e = 0; e < std::max(episodes, 1); ++e)
    best = std::min(best, rollout(inst, policy, seeder.next_u64()).second);
  return best;
}

}  // namespace

GapReport run_suite(const std::vector<std::string>& methods,
                    const std::vector<Instance>& instances,
                    const SuiteOptions& options) {
  if (methods.empty()) throw ConfigError("run_suite needs at least one method");
  if (instances.empty()) throw ConfigError("run_suite needs at least one instance");

  // Load each referenced checkpoint once.
  std::map<std::string, std::pair<PolicyParams, CriticParams>> checkpoints;
  for (const std::string& method : methods) {
    if (method.rfind("policy:", 0) == 0) {
      const std::string path = method.substr(7);
      if (!checkpoints.count(method)) checkpoints.emplace(method, load_checkpoint(path));
    } else if (method != "random" && method != "greedy" && method != "exact") {
      throw ConfigError("unknown method '" + method + "'");
    }
  }

  // objective[m][i] for method m on instance i.
  std::vector<std::vector<double>> objectives(methods.size(),
                                              std::vector<double>(instances.size(), 0.0));
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto inst = std::make_shared<const Instance>(instances[i]);
    const std::uint64_t seed = options.seed_base + static_cast<std::uint64_t>(i);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const std::string& method = methods[m];
      if (method == "random") {
        objectives[m][i] = best_of_k_random(inst, seed, options.random_episodes);
      } else if (method == "greedy") {
        GreedyPolicy greedy;
        objectives[m][i] = rollout(inst, greedy, seed).second;
      } else if (method == "exact") {
        objectives[m][i] = solve_exact_dp(*inst, options.exact_cap).objective;
      } else {
        const auto& [actor, critic] = checkpoints.at(method);
        if (critic.n != inst->n)
          throw DimensionError("checkpoint critic expects n=" + std::to_string(critic.n) +
                               " but suite instance has n=" + std::to_string(inst->n));
        NeuralPolicy policy(actor, critic, /*sample=*/false);
        objectives[m][i] = rollout(inst, policy, seed).second;
      }
    }
  }

  GapReport report;
  report.methods = methods;
  if (options.reference == ReferenceMode::kBestKnown)
    report.gap_label = "regret vs best-known";

  for (std::size_t i = 0; i < instances.size(); ++i) {
    double reference = 0.0;
    if (options.reference == ReferenceMode::kExactDp) {
      reference = solve_exact_dp(instances[i], options.exact_cap).objective;
    } else {
      reference = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < methods.size(); ++m)
        reference = std::min(reference, objectives[m][i]);
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
      GapRow row;
      row.instance_id = static_cast<int>(i);
      row.method = methods[m];
      row.objective = objectives[m][i];
      row.reference = reference;
      row.gap = optimality_gap(row.objective, reference);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string format_aggregate_table(const GapReport& report) {
  const auto aggregates = report.aggregates();
  std::ostringstream out;

  auto pct = [](double g) {
    std::ostringstream cell;
    cell.setf(std::ios::fixed);
    cell.precision(2);
    cell << 100.0 * g << "%";
    return cell.str();
  };

  const int label_width = 8 + static_cast<int>(report.gap_label.size());
  out << std::left << std::setw(label_width) << "";
  for (const std::string& method : report.methods)
    out << std::right << std::setw(14) << method;
  out << "\n";

  const std::vector<std::pair<std::string, double GapAggregate::*>> stats = {
      {"Mean", &GapAggregate::mean},
      {"Median", &GapAggregate::median},
      {"Min", &GapAggregate::min},
      {"Max", &GapAggregate::max},
  };
  for (const auto& [name, member] : stats) {
    out << std::left << std::setw(label_width) << (name + " " + report.gap_label);
    for (const std::string& method : report.methods)
      out << std::right << std::setw(14) << pct(aggregates.at(method).*member);
    out << "\n";
  }
  return out.str();
}

void export_tables(const GapReport& report, const std::filesystem::path& csv_path,
                   const std::filesystem::path& table_path) {
  if (report.rows.empty()) throw ConfigError("cannot export an empty report");

  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write report CSV: " + csv_path.string());
  csv.precision(17);
  csv << "instance,method,objective,reference,gap\n";
  for (const GapRow& row : report.rows)
    csv << row.instance_id << ',' << row.method << ',' << row.objective << ','
        << row.reference << ',' << row.gap << "\n";
  if (!csv) throw IoError("report CSV write failure: " + csv_path.string());

  std::ofstream table(table_path);
  if (!table) throw IoError("cannot write table: " + table_path.string());
  table << format_aggregate_table(report);
  if (!table) throw IoError("table write failure: " + table_path.string());
}

GapReport load_report_csv(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open report CSV: " + csv_path.string());

  GapReport report;
  std::string line;
  if (!std::getline(in, line) || line.rfind("instance,method,objective", 0) != 0)
    throw ValidationError("report CSV header mismatch in " + csv_path.string());

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    GapRow row;
    std::string cell;
    try {
      std::getline(fields, cell, ',');
      row.instance_id = std::stoi(cell);
      std::getline(fields, row.method, ',');
      std::getline(fields, cell, ',');
      row.objective = std::stod(cell);
      std::getline(fields, cell, ',');
      row.reference = std::stod(cell);
      std::getline(fields, cell, ',');
      row.gap = std::stod(cell);
    } catch (const std::exception&) {
      throw ValidationError("bad report CSV row at line " + std::to_string(line_no));
    }
    if (std::find(report.methods.begin(), report.methods.end(), row.method) ==
        report.methods.end())
      report.methods.push_back(row.method);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace cliquepart
