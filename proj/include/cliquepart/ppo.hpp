#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cliquepart/exact.hpp"
#include "cliquepart/nn.hpp"
#include "cliquepart/policies.hpp"

namespace cliquepart {

struct TrainConfig {
  // Optimization.
  double learning_rate = 1e-5;
  double gamma = 1.0;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  int epochs_per_batch = 4;
  int episodes_per_batch = 32;
  int minibatch_size = 256;  // transitions
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double grad_clip_norm = 0.5;
  int total_batches = 3000;
  std::uint64_t seed = 0;

  // Instance stream.
  std::string env = "cities";  // "cities" | "general"
  int n = 18;
  double threshold = kDefaultThreshold;
  int pool_size = 128;          // fixed training pool
  bool fresh_instances = false; // draw a new instance per episode instead
  int eval_pool_size = 128;     // held-out instances, disjoint seeds

  // Model.
  int embed_dim = 8;

  // Bookkeeping.
  int checkpoint_every = 200;
  bool compute_exact_refs = true;  // per-instance optimality gaps when n <= cap
  int exact_cap = kDefaultExactCap;
  int workers = 0;  // rollout/ref parallelism; 0 = hardware concurrency

  void validate() const;
};

TrainConfig parse_train_config(const std::filesystem::path& path);
void write_train_config(const TrainConfig& cfg, const std::filesystem::path& path);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_t = r_t + gamma V(s_{t+1}) - V(s_t) with V(terminal) = 0;
// A_t = sum_k (gamma lambda)^k delta_{t+k}; return_t = A_t + V(s_t).
GaeResult compute_gae(const Trajectory& traj, double gamma, double lambda);

struct AdamState {
  std::vector<Mat> m;
  std::vector<Mat> v;
  long step = 0;
  static AdamState init(const std::vector<ParamRef>& refs);
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;  // pre-clip, averaged over optimizer steps
  int transitions = 0;
};

// Per-transition PPO objective on the tape: clipped surrogate + value MSE -
// entropy bonus. Shared by ppo_update and the gradient-check harness.
struct TransitionTarget {
  int action_index = 0;
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;
};
struct LossVars {
  ad::Var total, policy, value, entropy;
};
LossVars actor_critic_loss(ad::Tape& tape, const GraphObservation& obs,
                           const Mat& critic_in, const PolicyVars& pv,
                           const CriticVars& cv, const TransitionTarget& target,
                           const TrainConfig& cfg);

// One PPO update: batch-normalized advantages, epochs_per_batch passes over
// shuffled minibatches, clipped surrogate + value MSE - entropy bonus, global
// gradient-norm clipping, Adam. Throws NumericError on a non-finite loss.
UpdateStats ppo_update(const std::vector<Trajectory>& batch, PolicyParams& actor,
                       CriticParams& critic, AdamState& adam, const TrainConfig& cfg,
                       Rng& shuffle_rng, int batch_id);

struct MetricsRow {
  int batch = 0;
  double mean_return = 0.0;
  double mean_objective = 0.0;
  double mean_gap = -1.0;  // negative = no exact reference available
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

struct TrainResult {
  PolicyParams actor;
  CriticParams critic;
  std::vector<MetricsRow> metrics;
  std::vector<Instance> train_pool;
  std::vector<Instance> eval_pool;
  std::vector<double> train_refs;  // exact optima; empty when not computed
  std::vector<double> eval_refs;
  std::filesystem::path final_checkpoint;
};

// Full training run: builds the pools, streams batches of rollouts through
// ppo_update, writes metrics.csv and periodic checkpoints under out_dir.
TrainResult train(const TrainConfig& cfg, const std::filesystem::path& out_dir);

// Pool construction shared with the benchmark harness; instance k is seeded
// seed_base + k.
std::vector<Instance> generate_pool(const std::string& env, int n, double threshold,
                                    int count, std::uint64_t seed_base);

// Exact references for every instance (parallel across instances).
std::vector<double> exact_references(const std::vector<Instance>& instances, int cap,
                                     int workers);

void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::filesystem::path& path);

}  // namespace cliquepart
