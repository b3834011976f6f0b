#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cliquepart/bench.hpp"
#include "cliquepart/environment.hpp"
#include "cliquepart/errors.hpp"
#include "cliquepart/exact.hpp"
#include "cliquepart/instance.hpp"
#include "cliquepart/nn.hpp"
#include "cliquepart/objective.hpp"
#include "cliquepart/policies.hpp"
#include "cliquepart/ppo.hpp"

namespace {

using namespace cliquepart;

std::string cluster_summary(const Instance& inst, const Partition& p) {
  std::map<int, std::vector<int>> clusters;
  for (int i = 0; i < inst.n; ++i) clusters[p.assignment[i]].push_back(i);
  std::ostringstream out;
  for (const auto& [label, members] : clusters) {
    out << "{";
    for (std::size_t k = 0; k < members.size(); ++k)
      out << members[k] << (k + 1 < members.size() ? "," : "");
    out << "} ";
  }
  return out.str();
}

void emit_episode(const Trajectory& traj, const std::string& log_path,
                  const std::string& out_path, const Instance& inst) {
  if (!log_path.empty()) {
    std::ofstream log(log_path);
    if (!log) throw IoError("cannot write episode log: " + log_path);
    write_episode_log(log, traj.actions(), traj.outcomes, traj.reset_objective);
  }
  if (!out_path.empty()) {
    auto [state, outcomes] = replay(inst, traj.actions());
    save_partition(state.current_partition(), out_path);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diameter-bounded clique partitioning toolkit"};
  app.require_subcommand(1);

  std::uint64_t global_seed = 0;
  double global_threshold = kDefaultThreshold;
  app.add_option("--seed", global_seed, "Default RNG seed")->capture_default_str();
  app.add_option("--threshold", global_threshold, "Default diameter threshold D, minutes")
      ->capture_default_str();

  // generate
  auto* generate = app.add_subcommand("generate", "Generate an instance file");
  std::string gen_env = "cities";
  int gen_n = 18;
  std::string gen_out;
  generate->add_option("--env", gen_env, "Instance distribution")
      ->check(CLI::IsMember({"cities", "general"}))
      ->capture_default_str();
  generate->add_option("--n", gen_n, "Site count")->required();
  generate->add_option("--out", gen_out, "Output instance JSON")->required();

  // solve-exact
  auto* solve_exact = app.add_subcommand("solve-exact", "Optimal partition by subset DP");
  std::string se_instance, se_out;
  int se_cap = kDefaultExactCap;
  solve_exact->add_option("--instance", se_instance, "Instance JSON")->required();
  solve_exact->add_option("--cap", se_cap, "Exact size cap")->capture_default_str();
  solve_exact->add_option("--out", se_out, "Write the optimal partition JSON here");

  // solve-heuristic
  auto* solve_heur = app.add_subcommand("solve-heuristic", "Baseline policies");
  std::string sh_policy = "greedy", sh_instance, sh_log, sh_out;
  int sh_episodes = 1;
  solve_heur->add_option("--policy", sh_policy, "Policy")
      ->check(CLI::IsMember({"random", "greedy"}))
      ->capture_default_str();
  solve_heur->add_option("--instance", sh_instance, "Instance JSON")->required();
  solve_heur->add_option("--episodes", sh_episodes, "Best-of-k episodes (random policy)")
      ->capture_default_str();
  solve_heur->add_option("--log", sh_log, "Episode log (JSON lines)");
  solve_heur->add_option("--out", sh_out, "Final partition JSON");

  // train
  auto* train_cmd = app.add_subcommand("train", "PPO training");
  std::string tr_config, tr_out_dir = "train_out";
  train_cmd->add_option("--config", tr_config, "Training config (key = value)");
  train_cmd->add_option("--out-dir", tr_out_dir, "Checkpoints and metrics directory")
      ->capture_default_str();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Run a method suite and report gaps");
  std::string ev_methods = "random,greedy,exact";
  std::string ev_env = "cities";
  std::string ev_reference = "exact";
  std::string ev_out_dir = "eval_out";
  std::vector<std::string> ev_instances;
  int ev_n = 18, ev_count = 128, ev_episodes = 1, ev_cap = kDefaultExactCap;
  evaluate->add_option("--methods", ev_methods,
                       "Comma list: random, greedy, exact, policy:<checkpoint>")
      ->capture_default_str();
  evaluate->add_option("--env", ev_env, "Generator for the instance suite")
      ->check(CLI::IsMember({"cities", "general"}))
      ->capture_default_str();
  evaluate->add_option("--n", ev_n, "Site count")->capture_default_str();
  evaluate->add_option("--count", ev_count, "Suite size")->capture_default_str();
  evaluate->add_option("--instance", ev_instances,
                       "Explicit instance JSON (repeatable; overrides the generator)");
  evaluate->add_option("--reference", ev_reference, "Reference mode")
      ->check(CLI::IsMember({"exact", "best-known"}))
      ->capture_default_str();
  evaluate->add_option("--episodes", ev_episodes, "Best-of-k for the random method")
      ->capture_default_str();
  evaluate->add_option("--cap", ev_cap, "Exact size cap")->capture_default_str();
  evaluate->add_option("--out-dir", ev_out_dir, "Report directory")->capture_default_str();

  // verify-fig1
  auto* verify = app.add_subcommand("verify-fig1", "Golden walkthrough checks");

  // export
  auto* export_cmd = app.add_subcommand("export", "Re-format a report CSV as a table");
  std::string ex_report, ex_table, ex_label = "opt. gap";
  export_cmd->add_option("--report", ex_report, "Report CSV from evaluate")->required();
  export_cmd->add_option("--out-table", ex_table, "Formatted table path")->required();
  export_cmd->add_option("--label", ex_label, "Gap column label")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      Instance inst;
      if (gen_env == "cities") {
        CitiesConfig cfg;
        cfg.n = gen_n;
        cfg.seed = global_seed;
        cfg.threshold = global_threshold;
        inst = generate_cities(cfg);
      } else {
        GeneralConfig cfg;
        cfg.n = gen_n;
        cfg.seed = global_seed;
        cfg.threshold = global_threshold;
        inst = generate_general(cfg);
      }
      save_instance(inst, gen_out);
      std::cout << "wrote " << gen_out << " (n=" << inst.n
                << ", D=" << inst.threshold
                << ", near pairs=" << near_pairs(inst).size() << ")\n";
    } else if (*solve_exact) {
      const Instance inst = load_instance(se_instance);
      const auto start = std::chrono::steady_clock::now();
      const ExactResult result = solve_exact_dp(inst, se_cap);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << "objective " << result.objective << "\n"
                << "clusters  " << cluster_summary(inst, result.partition) << "\n"
                << "wall time " << secs << " s\n";
      if (!se_out.empty()) save_partition(result.partition, se_out);
    } else if (*solve_heur) {
      const Instance inst = load_instance(sh_instance);
      if (sh_policy == "greedy") {
        GreedyPolicy policy;
        auto [traj, objective] = rollout(inst, policy, global_seed);
        emit_episode(traj, sh_log, sh_out, inst);
        std::cout << "greedy objective " << objective << "\n"
                  << "clusters " << cluster_summary(inst, replay(inst, traj.actions()).first.current_partition())
                  << "\n";
      } else {
        RandomPolicy policy;
        Rng seeder(global_seed);
        Trajectory best_traj;
        double best = std::numeric_limits<double>::infinity();
        for (int e = 0; e < std::max(sh_episodes, 1); ++e) {
          auto [traj, objective] = rollout(inst, policy, seeder.next_u64());
          if (objective < best) {
            best = objective;
            best_traj = std::move(traj);
          }
        }
        emit_episode(best_traj, sh_log, sh_out, inst);
        std::cout << "random objective " << best << " (best of " << sh_episodes << ")\n";
      }
    } else if (*train_cmd) {
      TrainConfig cfg;
      if (!tr_config.empty()) cfg = parse_train_config(tr_config);
      if (app.count("--seed")) cfg.seed = global_seed;
      if (app.count("--threshold")) cfg.threshold = global_threshold;
      const TrainResult result = train(cfg, tr_out_dir);
      std::cout << "trained " << cfg.total_batches << " batches; final checkpoint "
                << result.final_checkpoint.string() << "\n";
      if (!result.metrics.empty()) {
        const MetricsRow& last = result.metrics.back();
        std::cout << "last batch: mean return " << last.mean_return
                  << ", mean objective " << last.mean_objective;
        if (last.mean_gap >= 0.0) std::cout << ", mean gap " << 100.0 * last.mean_gap << "%";
        std::cout << "\n";
      }
    } else if (*evaluate) {
      std::vector<Instance> instances;
      if (!ev_instances.empty()) {
        for (const std::string& path : ev_instances) instances.push_back(load_instance(path));
      } else {
        instances = generate_pool(ev_env, ev_n, global_threshold, ev_count, global_seed);
      }

      std::vector<std::string> methods;
      std::stringstream splitter(ev_methods);
      std::string method;
      while (std::getline(splitter, method, ','))
        if (!method.empty()) methods.push_back(method);

      SuiteOptions options;
      options.reference = ev_reference == "exact" ? ReferenceMode::kExactDp
                                                  : ReferenceMode::kBestKnown;
      options.exact_cap = ev_cap;
      options.seed_base = global_seed;
      options.random_episodes = ev_episodes;

      const GapReport report = run_suite(methods, instances, options);
      std::filesystem::create_directories(ev_out_dir);
      export_tables(report, std::filesystem::path(ev_out_dir) / "report.csv",
                    std::filesystem::path(ev_out_dir) / "table.txt");
      std::cout << format_aggregate_table(report);
    } else if (*verify) {
      const Figure1Report report = verify_figure1();
      for (const CheckResult& check : report.checks)
        std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << check.name
                  << (check.passed || check.detail.empty() ? "" : " — " + check.detail)
                  << "\n";
      std::cout << (report.all_passed() ? "verify-fig1: all checks passed\n"
                                        : "verify-fig1: FAILURES\n");
      return report.all_passed() ? 0 : 1;
    } else if (*export_cmd) {
      GapReport report = load_report_csv(ex_report);
      report.gap_label = ex_label;
      std::ofstream table(ex_table);
      if (!table) throw IoError("cannot write table: " + ex_table);
      table << format_aggregate_table(report);
      std::cout << format_aggregate_table(report);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
