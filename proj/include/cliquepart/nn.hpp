#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cliquepart/autodiff.hpp"
#include "cliquepart/environment.hpp"
#include "cliquepart/policies.hpp"

namespace cliquepart {

using ad::Mat;

// Graph view of an environment state. Every undirected edge that is either
// available or part of the solution appears in both orientations, plus one
// self-loop per node. Edge features: [d_ij / D, in_solution, available];
// self-loops carry all zeros. Node feature is the constant 1 bias.
struct GraphObservation {
  int n = 0;
  std::vector<int> src;  // directed edges sorted by (src, dst), self-loops included
  std::vector<int> dst;
  Mat edge_features;     // m x 3
  std::vector<Edge> available;                     // legal-action order
  std::vector<std::pair<int, int>> action_dirs;    // directed positions per available edge
};

GraphObservation encode_observation(const Instance& inst, const ObservationSnapshot& snap);
GraphObservation encode_observation(const EnvState& state);

struct AttentionLayerParams {
  Mat w_cat;   // F x 3F
  Mat attn;    // F x 1
  Mat w_node;  // F x F
};

// Actor: linear embeddings, three edge-featured attention layers, linear
// readout over available edges.
struct PolicyParams {
  int embed_dim = 8;
  Mat node_w, node_b;  // F x 1, F x 1
  Mat edge_w, edge_b;  // F x 3, F x 1
  std::array<AttentionLayerParams, 3> layers;
  Mat readout_w, readout_b;  // 1 x F, 1 x 1

  static PolicyParams init(int embed_dim, std::uint64_t seed);
};

// Critic: dense network over the flattened normalized distance matrix and the
// availability matrix; input length is tied to the configured site count.
struct CriticParams {
  int n = 0;
  static constexpr int kHidden = 128;
  Mat w1, b1;  // 128 x 2n^2, 128 x 1
  Mat w2, b2;  // 128 x 128, 128 x 1
  Mat w3, b3;  // 1 x 128, 1 x 1

  static CriticParams init(int n, std::uint64_t seed);
};

// Named references to every learnable array, the shared layout used by the
// optimizer, gradient clipping, checkpoints and the finite-difference harness.
struct ParamRef {
  std::string name;
  Mat* value;
};
std::vector<ParamRef> collect_params(PolicyParams& actor, CriticParams& critic);

// One attention layer outside any tape: convenience for tests and inference
// snippets. Returns (H', E').
std::pair<Mat, Mat> attention_layer(const Mat& nodes, const Mat& edges,
                                    const GraphObservation& obs,
                                    const AttentionLayerParams& params);

// Action distribution over obs.available (same order). Throws NoActionError
// when no edge is available.
std::vector<double> actor_forward(const GraphObservation& obs, const PolicyParams& params);

// Critic inputs and value estimate.
Mat critic_input(const Instance& inst, const ObservationSnapshot& snap);
double critic_forward(const EnvState& state, const CriticParams& params);
double critic_forward(const Instance& inst, const ObservationSnapshot& snap,
                      const CriticParams& params);

// Tape-building blocks shared by inference and training.
struct PolicyVars {
  ad::Var node_w, node_b, edge_w, edge_b;
  struct Layer {
    ad::Var w_cat, attn, w_node;
  };
  std::array<Layer, 3> layers;
  ad::Var readout_w, readout_b;
};
struct CriticVars {
  ad::Var w1, b1, w2, b2, w3, b3;
};

// Register parameters on a tape; grads points at a parallel gradient buffer
// (may be null for pure inference).
PolicyVars bind_policy(ad::Tape& tape, const PolicyParams& params,
                       std::vector<Mat>* grads, int grad_offset);
CriticVars bind_critic(ad::Tape& tape, const CriticParams& params,
                       std::vector<Mat>* grads, int grad_offset);

// Log-probabilities (k x 1) over obs.available. Requires >= 1 available edge.
ad::Var actor_log_probs(ad::Tape& tape, const GraphObservation& obs, const PolicyVars& vars);
ad::Var critic_value(ad::Tape& tape, const Mat& input, const CriticVars& vars);

// Sampling/argmax policy over the actor, with critic value estimates.
class NeuralPolicy : public Policy {
 public:
  NeuralPolicy(PolicyParams actor, CriticParams critic, bool sample = true)
      : actor_(std::move(actor)), critic_(std::move(critic)), sample_(sample) {}

  PolicyDecision decide(const EnvState& state, Rng& rng) override;
  double value(const EnvState& state) const override;
  bool has_value() const override { return true; }

  const PolicyParams& actor() const { return actor_; }
  const CriticParams& critic() const { return critic_; }

 private:
  PolicyParams actor_;
  CriticParams critic_;
  bool sample_;
};

// Self-describing checkpoint with named, shaped arrays. Round-trips bit-exactly.
void save_checkpoint(const PolicyParams& actor, const CriticParams& critic,
                     const std::filesystem::path& path);
std::pair<PolicyParams, CriticParams> load_checkpoint(const std::filesystem::path& path);

}  // namespace cliquepart
