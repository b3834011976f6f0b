#include "cliquepart/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cliquepart/errors.hpp"
#include "cliquepart/rng.hpp"

namespace cliquepart {

namespace {

Mat uniform_init(int rows, int cols, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

GraphObservation encode_observation(const Instance& inst, const ObservationSnapshot& snap) {
  GraphObservation obs;
  obs.n = inst.n;
  obs.available = snap.available;

  struct Flags {
    bool solution = false;
    bool available = false;
  };
  std::map<std::pair<int, int>, Flags> directed;
  for (const Edge& e : snap.solution) {
    directed[{e.first, e.second}].solution = true;
    directed[{e.second, e.first}].solution = true;
  }
  for (const Edge& e : snap.available) {
    directed[{e.first, e.second}].available = true;
    directed[{e.second, e.first}].available = true;
  }
  for (int i = 0; i < inst.n; ++i) directed[{i, i}];  // self-loop, both flags zero

  const int m = static_cast<int>(directed.size());
  obs.src.reserve(m);
  obs.dst.reserve(m);
  obs.edge_features.resize(m, 3);
  std::map<std::pair<int, int>, int> position;
  int k = 0;
  for (const auto& [pair, flags] : directed) {  // std::map iterates sorted by (src, dst)
    obs.src.push_back(pair.first);
    obs.dst.push_back(pair.second);
    obs.edge_features(k, 0) = inst.d(pair.first, pair.second) / inst.threshold;
    obs.edge_features(k, 1) = flags.solution ? 1.0 : 0.0;
    obs.edge_features(k, 2) = flags.available ? 1.0 : 0.0;
    position[pair] = k;
    ++k;
  }

  obs.action_dirs.reserve(obs.available.size());
  for (const Edge& e : obs.available)
    obs.action_dirs.emplace_back(position.at({e.first, e.second}),
                                 position.at({e.second, e.first}));
  return obs;
}

GraphObservation encode_observation(const EnvState& state) {
  return encode_observation(state.instance(), state.snapshot());
}

PolicyParams PolicyParams::init(int embed_dim, std::uint64_t seed) {
  Rng rng(seed);
  PolicyParams p;
  p.embed_dim = embed_dim;
  p.node_w = uniform_init(embed_dim, 1, 1, rng);
  p.node_b = uniform_init(embed_dim, 1, 1, rng);
  p.edge_w = uniform_init(embed_dim, 3, 3, rng);
  p.edge_b = uniform_init(embed_dim, 1, 3, rng);
  for (auto& layer : p.layers) {
    layer.w_cat = uniform_init(embed_dim, 3 * embed_dim, 3 * embed_dim, rng);
    layer.attn = uniform_init(embed_dim, 1, embed_dim, rng);
    layer.w_node = uniform_init(embed_dim, embed_dim, embed_dim, rng);
  }
  p.readout_w = uniform_init(1, embed_dim, embed_dim, rng);
  p.readout_b = uniform_init(1, 1, embed_dim, rng);
  return p;
}

CriticParams CriticParams::init(int n, std::uint64_t seed) {
  Rng rng(seed);
  CriticParams c;
  c.n = n;
  const int input = 2 * n * n;
  c.w1 = uniform_init(kHidden, input, input, rng);
  c.b1 = uniform_init(kHidden, 1, input, rng);
  c.w2 = uniform_init(kHidden, kHidden, kHidden, rng);
  c.b2 = uniform_init(kHidden, 1, kHidden, rng);
  c.w3 = uniform_init(1, kHidden, kHidden, rng);
  c.b3 = uniform_init(1, 1, kHidden, rng);
  return c;
}

std::vector<ParamRef> collect_params(PolicyParams& actor, CriticParams& critic) {
  std::vector<ParamRef> refs;
  refs.push_back({"actor.node_embed.weight", &actor.node_w});
  refs.push_back({"actor.node_embed.bias", &actor.node_b});
  refs.push_back({"actor.edge_embed.weight", &actor.edge_w});
  refs.push_back({"actor.edge_embed.bias", &actor.edge_b});
  for (std::size_t l = 0; l < actor.layers.size(); ++l) {
    const std::string prefix = "actor.attention" + std::to_string(l);
    refs.push_back({prefix + ".w_cat", &actor.layers[l].w_cat});
    refs.push_back({prefix + ".attn_vec", &actor.layers[l].attn});
    refs.push_back({prefix + ".w_node", &actor.layers[l].w_node});
  }
  refs.push_back({"actor.readout.weight", &actor.readout_w});
  refs.push_back({"actor.readout.bias", &actor.readout_b});
  refs.push_back({"critic.dense1.weight", &critic.w1});
  refs.push_back({"critic.dense1.bias", &critic.b1});
  refs.push_back({"critic.dense2.weight", &critic.w2});
  refs.push_back({"critic.dense2.bias", &critic.b2});
  refs.push_back({"critic.out.weight", &critic.w3});
  refs.push_back({"critic.out.bias", &critic.b3});
  return refs;
}

PolicyVars bind_policy(ad::Tape& tape, const PolicyParams& params,
                       std::vector<Mat>* grads, int grad_offset) {
  auto sink = [&](int k) -> Mat* { return grads ? &(*grads)[grad_offset + k] : nullptr; };
  PolicyVars v;
  int k = 0;
  v.node_w = tape.param(&params.node_w, sink(k++), "actor.node_embed.weight");
  v.node_b = tape.param(&params.node_b, sink(k++), "actor.node_embed.bias");
  v.edge_w = tape.param(&params.edge_w, sink(k++), "actor.edge_embed.weight");
  v.edge_b = tape.param(&params.edge_b, sink(k++), "actor.edge_embed.bias");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const std::string prefix = "actor.attention" + std::to_string(l);
    v.layers[l].w_cat = tape.param(&params.layers[l].w_cat, sink(k++), prefix + ".w_cat");
    v.layers[l].attn = tape.param(&params.layers[l].attn, sink(k++), prefix + ".attn_vec");
    v.layers[l].w_node = tape.param(&params.layers[l].w_node, sink(k++), prefix + ".w_node");
  }
  v.readout_w = tape.param(&params.readout_w, sink(k++), "actor.readout.weight");
  v.readout_b = tape.param(&params.readout_b, sink(k++), "actor.readout.bias");
  return v;
}

CriticVars bind_critic(ad::Tape& tape, const CriticParams& params,
                       std::vector<Mat>* grads, int grad_offset) {
  auto sink = [&](int k) -> Mat* { return grads ? &(*grads)[grad_offset + k] : nullptr; };
  CriticVars v;
  v.w1 = tape.param(&params.w1, sink(0), "critic.dense1.weight");
  v.b1 = tape.param(&params.b1, sink(1), "critic.dense1.bias");
  v.w2 = tape.param(&params.w2, sink(2), "critic.dense2.weight");
  v.b2 = tape.param(&params.b2, sink(3), "critic.dense2.bias");
  v.w3 = tape.param(&params.w3, sink(4), "critic.out.weight");
  v.b3 = tape.param(&params.b3, sink(5), "critic.out.bias");
  return v;
}

namespace {

struct LayerIo {
  ad::Var nodes;  // n x F
  ad::Var edges;  // m x F
};

// One edge-featured attention convolution. For each directed edge (j -> i):
//   g_ij  = leaky_relu(W_cat [h_i ; e_ij ; h_j])
//   s_ij  = attn . g_ij
//   a_ij  = softmax of s over the in-edges of i (self-loop included)
//   h_i'  = elu(sum_j a_ij W_node h_j),   e_ij' = g_ij
LayerIo attention_layer_tape(ad::Tape& tape, const GraphObservation& obs, LayerIo in,
                             const PolicyVars::Layer& layer) {
  const ad::Var h_dst = tape.gather_rows(in.nodes, &obs.dst);
  const ad::Var h_src = tape.gather_rows(in.nodes, &obs.src);
  const ad::Var cat = tape.hcat3(h_dst, in.edges, h_src);
  const ad::Var g = tape.leaky_relu(tape.matmul_nt(cat, layer.w_cat), 0.2);
  const ad::Var logits = tape.matmul(g, layer.attn);
  const ad::Var alpha = tape.segment_softmax(logits, &obs.dst, obs.n);
  const ad::Var projected = tape.matmul_nt(in.nodes, layer.w_node);
  const ad::Var messages = tape.scale_rows(tape.gather_rows(projected, &obs.src), alpha);
  const ad::Var nodes_out = tape.elu(tape.segment_sum_rows(messages, &obs.dst, obs.n));
  return {nodes_out, g};
}

LayerIo embed_observation(ad::Tape& tape, const GraphObservation& obs, const PolicyVars& vars) {
  const ad::Var node_feat = tape.constant(Mat::Ones(obs.n, 1));
  const ad::Var edge_feat = tape.constant(obs.edge_features);
  const ad::Var nodes =
      tape.add_row_broadcast(tape.matmul_nt(node_feat, vars.node_w), vars.node_b);
  const ad::Var edges =
      tape.add_row_broadcast(tape.matmul_nt(edge_feat, vars.edge_w), vars.edge_b);
  return {nodes, edges};
}

}  // namespace

ad::Var actor_log_probs(ad::Tape& tape, const GraphObservation& obs, const PolicyVars& vars) {
  if (obs.available.empty()) throw NoActionError("no available edges to score");

  LayerIo io = embed_observation(tape, obs, vars);
  for (const auto& layer : vars.layers) io = attention_layer_tape(tape, obs, io, layer);

  // Score per available undirected edge: readout of the mean of its two
  // directed embeddings; masked softmax over available edges only.
  const ad::Var per_action = tape.mean_row_pairs(io.edges, &obs.action_dirs);
  const ad::Var scores =
      tape.add_row_broadcast(tape.matmul_nt(per_action, vars.readout_w), vars.readout_b);
  return tape.log_softmax(scores);
}

ad::Var critic_value(ad::Tape& tape, const Mat& input, const CriticVars& vars) {
  const ad::Var x = tape.constant(input);
  const ad::Var h1 = tape.relu(tape.add(tape.matmul(vars.w1, x), vars.b1));
  const ad::Var h2 = tape.relu(tape.add(tape.matmul(vars.w2, h1), vars.b2));
  return tape.add(tape.matmul(vars.w3, h2), vars.b3);
}

std::pair<Mat, Mat> attention_layer(const Mat& nodes, const Mat& edges,
                                    const GraphObservation& obs,
                                    const AttentionLayerParams& params) {
  ad::Tape tape;
  PolicyVars::Layer layer;
  layer.w_cat = tape.param(&params.w_cat, nullptr, "w_cat");
  layer.attn = tape.param(&params.attn, nullptr, "attn_vec");
  layer.w_node = tape.param(&params.w_node, nullptr, "w_node");
  const LayerIo out = attention_layer_tape(
      tape, obs, {tape.constant(nodes), tape.constant(edges)}, layer);
  return {tape.val(out.nodes), tape.val(out.edges)};
}

std::vector<double> actor_forward(const GraphObservation& obs, const PolicyParams& params) {
  ad::Tape tape;
  const PolicyVars vars = bind_policy(tape, params, nullptr, 0);
  const ad::Var log_probs = actor_log_probs(tape, obs, vars);
  const Mat& lp = tape.val(log_probs);
  std::vector<double> probs(lp.rows());
  for (Eigen::Index k = 0; k < lp.rows(); ++k) probs[k] = std::exp(lp(k, 0));
  return probs;
}

Mat critic_input(const Instance& inst, const ObservationSnapshot& snap) {
  const int n = inst.n;
  Mat x(2 * n * n, 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x(i * n + j, 0) = inst.d(i, j) / inst.threshold;
  x.block(n * n, 0, n * n, 1).setZero();
  for (const Edge& e : snap.available) {
    x(n * n + e.first * n + e.second, 0) = 1.0;
    x(n * n + e.second * n + e.first, 0) = 1.0;
  }
  return x;
}

double critic_forward(const Instance& inst, const ObservationSnapshot& snap,
                      const CriticParams& params) {
  if (inst.n != params.n)
    throw DimensionError("critic configured for n=" + std::to_string(params.n) +
                         " but instance has n=" + std::to_string(inst.n));
  ad::Tape tape;
  const CriticVars vars = bind_critic(tape, params, nullptr, 0);
  return tape.scalar(critic_value(tape, critic_input(inst, snap), vars));
}

double critic_forward(const EnvState& state, const CriticParams& params) {
  return critic_forward(state.instance(), state.snapshot(), params);
}

PolicyDecision NeuralPolicy::decide(const EnvState& state, Rng& rng) {
  const GraphObservation obs = encode_observation(state);
  if (obs.available.empty()) throw NoActionError("policy queried on a terminal state");
  const std::vector<double> probs = actor_forward(obs, actor_);

  int pick = 0;
  if (sample_) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    pick = static_cast<int>(probs.size()) - 1;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      cumulative += probs[k];
      if (u < cumulative) {
        pick = static_cast<int>(k);
        break;
      }
    }
  } else {
    pick = static_cast<int>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
  }

  PolicyDecision decision;
  decision.action = obs.available[pick];
  decision.log_prob = std::log(probs[pick]);
  decision.distribution = probs;
  return decision;
}

double NeuralPolicy::value(const EnvState& state) const {
  return critic_forward(state, critic_);
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json j;
  j["shape"] = {m.rows(), m.cols()};
  auto data = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Mat mat_from_json(const nlohmann::json& j) {
  const auto shape = j.at("shape");
  const Eigen::Index rows = shape.at(0).get<Eigen::Index>();
  const Eigen::Index cols = shape.at(1).get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ValidationError("checkpoint array size does not match its shape");
  Mat m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data.at(k++).get<double>();
  return m;
}

}  // namespace

void save_checkpoint(const PolicyParams& actor, const CriticParams& critic,
                     const std::filesystem::path& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["embedding_size"] = actor.embed_dim;
  j["n_critic"] = critic.n;
  j["layer_count"] = static_cast<int>(actor.layers.size());

  PolicyParams actor_copy = actor;
  CriticParams critic_copy = critic;
  nlohmann::json params;
  for (const ParamRef& ref : collect_params(actor_copy, critic_copy))
    params[ref.name] = mat_to_json(*ref.value);
  j["params"] = std::move(params);

  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out << j.dump() << "\n";
  if (!out) throw IoError("checkpoint write failure: " + path.string());
}

std::pair<PolicyParams, CriticParams> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint parse failure: ") + e.what());
  }

  if (j.at("format_version").get<int>() != 1)
    throw ValidationError("unsupported checkpoint format version");
  const int embed_dim = j.at("embedding_size").get<int>();
  const int n_critic = j.at("n_critic").get<int>();
  if (j.at("layer_count").get<int>() != 3)
    throw ValidationError("unsupported attention layer count");

  PolicyParams actor = PolicyParams::init(embed_dim, 0);
  CriticParams critic = CriticParams::init(n_critic, 0);
  const auto& params = j.at("params");
  for (const ParamRef& ref : collect_params(actor, critic)) {
    if (!params.contains(ref.name))
      throw ValidationError("checkpoint missing parameter " + ref.name);
    Mat loaded = mat_from_json(params.at(ref.name));
    if (loaded.rows() != ref.value->rows() || loaded.cols() != ref.value->cols())
      throw ValidationError("checkpoint shape mismatch for " + ref.name);
    *ref.value = std::move(loaded);
  }
  return {std::move(actor), std::move(critic)};
}

}  // namespace cliquepart
