#include "cliquepart/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "cliquepart/errors.hpp"
#include "cliquepart/exact.hpp"

namespace cliquepart {

namespace {

// Seed-space offsets so pools, parameters and per-episode streams never collide.
constexpr std::uint64_t kEvalPoolOffset = 1'000'000;
constexpr std::uint64_t kActorSeedOffset = 2'000'000;
constexpr std::uint64_t kCriticSeedOffset = 2'000'001;
constexpr std::uint64_t kEpisodeSeedOffset = 3'000'000;
constexpr std::uint64_t kShuffleSeedOffset = 4'000'000;
constexpr std::uint64_t kFreshPoolOffset = 5'000'000;

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  workers = std::min(resolve_workers(workers), std::max(count, 1));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (int i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(learning_rate, "learning_rate");
  positive(gae_lambda, "gae_lambda");
  positive(entropy_coef, "entropy_coef");
  positive(value_coef, "value_coef");
  positive(grad_clip_norm, "grad_clip_norm");
  positive(threshold, "threshold");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw ConfigError("clip_epsilon must be in (0, 1)");
  if (epochs_per_batch < 1) throw ConfigError("epochs_per_batch must be >= 1");
  if (episodes_per_batch < 1) throw ConfigError("episodes_per_batch must be >= 1");
  if (minibatch_size < 1) throw ConfigError("minibatch_size must be >= 1");
  if (total_batches < 1) throw ConfigError("total_batches must be >= 1");
  if (n < 2) throw ConfigError("n must be >= 2");
  if (pool_size < 1 && !fresh_instances) throw ConfigError("pool_size must be >= 1");
  if (eval_pool_size < 0) throw ConfigError("eval_pool_size must be >= 0");
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (env != "cities" && env != "general")
    throw ConfigError("env must be 'cities' or 'general', got '" + env + "'");
}

GaeResult compute_gae(const Trajectory& traj, double gamma, double lambda) {
  const int T = static_cast<int>(traj.steps.size());
  GaeResult out;
  out.advantages.resize(T);
  out.returns.resize(T);
  double running = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    const double next_value = (t + 1 < T) ? traj.steps[t + 1].value : 0.0;
    const double delta = traj.steps[t].reward + gamma * next_value - traj.steps[t].value;
    running = delta + gamma * lambda * running;
    out.advantages[t] = running;
    out.returns[t] = running + traj.steps[t].value;
  }
  return out;
}

AdamState AdamState::init(const std::vector<ParamRef>& refs) {
  AdamState state;
  state.m.reserve(refs.size());
  state.v.reserve(refs.size());
  for (const ParamRef& ref : refs) {
    state.m.push_back(Mat::Zero(ref.value->rows(), ref.value->cols()));
    state.v.push_back(Mat::Zero(ref.value->rows(), ref.value->cols()));
  }
  return state;
}

namespace {

struct FlatTransition {
  const Trajectory* traj = nullptr;
  int step = 0;
  double advantage = 0.0;
  double ret = 0.0;
  int action_index = 0;
};

int action_index_in(const ObservationSnapshot& snap, Edge action) {
  const auto it = std::lower_bound(snap.available.begin(), snap.available.end(), action);
  if (it == snap.available.end() || *it != action)
    throw Error("trajectory action missing from its observation snapshot");
  return static_cast<int>(it - snap.available.begin());
}

void adam_step(const std::vector<ParamRef>& refs, std::vector<Mat>& grads,
               AdamState& adam, const TrainConfig& cfg) {
  // Global norm clip.
  double sq = 0.0;
  for (const Mat& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > cfg.grad_clip_norm) {
    const double scale = cfg.grad_clip_norm / norm;
    for (Mat& g : grads) g *= scale;
  }

  adam.step += 1;
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
  for (std::size_t k = 0; k < refs.size(); ++k) {
    adam.m[k] = beta1 * adam.m[k] + (1.0 - beta1) * grads[k];
    adam.v[k] = beta2 * adam.v[k] + (1.0 - beta2) * grads[k].cwiseProduct(grads[k]);
    const Mat m_hat = adam.m[k] / bc1;
    const Mat v_hat = adam.v[k] / bc2;
    *refs[k].value -=
        cfg.learning_rate * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
  }
}

}  // namespace

LossVars actor_critic_loss(ad::Tape& tape, const GraphObservation& obs,
                           const Mat& critic_in, const PolicyVars& pv,
                           const CriticVars& cv, const TransitionTarget& target,
                           const TrainConfig& cfg) {
  const ad::Var log_probs = actor_log_probs(tape, obs, pv);
  const ad::Var logp = tape.pick(log_probs, target.action_index);
  const ad::Var ratio = tape.exp(tape.shift(logp, -target.old_log_prob));
  const ad::Var surr1 = tape.scale(ratio, target.advantage);
  const ad::Var surr2 = tape.scale(
      tape.clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon),
      target.advantage);

  LossVars loss;
  loss.policy = tape.scale(tape.min2(surr1, surr2), -1.0);

  const ad::Var value = critic_value(tape, critic_in, cv);
  const ad::Var vdiff = tape.shift(value, -target.value_target);
  loss.value = tape.hadamard(vdiff, vdiff);

  const ad::Var probs = tape.exp(log_probs);
  loss.entropy = tape.scale(tape.sum(tape.hadamard(probs, log_probs)), -1.0);

  loss.total = tape.add(tape.add(loss.policy, tape.scale(loss.value, cfg.value_coef)),
                        tape.scale(loss.entropy, -cfg.entropy_coef));
  return loss;
}

UpdateStats ppo_update(const std::vector<Trajectory>& batch, PolicyParams& actor,
                       CriticParams& critic, AdamState& adam, const TrainConfig& cfg,
                       Rng& shuffle_rng, int batch_id) {
  if (batch.empty()) throw ConfigError("ppo_update on an empty batch");

  // Flatten and advantage-normalize across the whole batch.
  std::vector<FlatTransition> flat;
  for (const Trajectory& traj : batch) {
    const GaeResult gae = compute_gae(traj, cfg.gamma, cfg.gae_lambda);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      FlatTransition ft;
      ft.traj = &traj;
      ft.step = static_cast<int>(t);
      ft.advantage = gae.advantages[t];
      ft.ret = gae.returns[t];
      ft.action_index = action_index_in(traj.steps[t].observation, traj.steps[t].action);
      flat.push_back(ft);
    }
  }
  if (flat.empty()) throw ConfigError("ppo_update batch holds no transitions");

  double mean = 0.0;
  for (const auto& ft : flat) mean += ft.advantage;
  mean /= static_cast<double>(flat.size());
  double var = 0.0;
  for (const auto& ft : flat) var += (ft.advantage - mean) * (ft.advantage - mean);
  var /= static_cast<double>(flat.size());
  const double std_dev = std::sqrt(var);
  for (auto& ft : flat) ft.advantage = (ft.advantage - mean) / (std_dev + 1e-8);

  const std::vector<ParamRef> refs = collect_params(actor, critic);
  std::vector<Mat> grads;
  grads.reserve(refs.size());
  for (const ParamRef& ref : refs)
    grads.push_back(Mat::Zero(ref.value->rows(), ref.value->cols()));
  const int actor_params = 4 + 3 * static_cast<int>(actor.layers.size()) + 2;

  UpdateStats stats;
  stats.transitions = static_cast<int>(flat.size());
  double loss_weight = 0.0;
  int optimizer_steps = 0;

  std::vector<int> order(flat.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    // Fisher-Yates with the seeded stream.
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);

    for (std::size_t start = 0; start < order.size(); start += cfg.minibatch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.minibatch_size);
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (Mat& g : grads) g.setZero();

      for (std::size_t pos = start; pos < stop; ++pos) {
        const FlatTransition& ft = flat[order[pos]];
        const TrajectoryStep& ts = ft.traj->steps[ft.step];
        const Instance& inst = *ft.traj->instance;

        ad::Tape tape;
        const PolicyVars pv = bind_policy(tape, actor, &grads, 0);
        const CriticVars cv = bind_critic(tape, critic, &grads, actor_params);

        const GraphObservation obs = encode_observation(inst, ts.observation);
        const TransitionTarget target{ft.action_index, ts.log_prob, ft.advantage, ft.ret};
        const LossVars loss =
            actor_critic_loss(tape, obs, critic_input(inst, ts.observation), pv, cv,
                              target, cfg);

        if (!std::isfinite(tape.scalar(loss.total)))
          throw NumericError("non-finite PPO loss in batch " + std::to_string(batch_id) +
                             ", minibatch starting at " + std::to_string(start));
        tape.backward(loss.total, inv);

        stats.policy_loss += tape.scalar(loss.policy);
        stats.value_loss += tape.scalar(loss.value);
        stats.entropy += tape.scalar(loss.entropy);
        loss_weight += 1.0;
      }

      double sq = 0.0;
      for (const Mat& g : grads) sq += g.squaredNorm();
      stats.grad_norm += std::sqrt(sq);
      ++optimizer_steps;
      adam_step(refs, grads, adam, cfg);
    }
  }

  stats.policy_loss /= loss_weight;
  stats.value_loss /= loss_weight;
  stats.entropy /= loss_weight;
  stats.grad_norm /= std::max(optimizer_steps, 1);
  return stats;
}

std::vector<Instance> generate_pool(const std::string& env, int n, double threshold,
                                    int count, std::uint64_t seed_base) {
  std::vector<Instance> pool;
  pool.reserve(count);
  for (int k = 0; k < count; ++k) {
    if (env == "cities") {
      CitiesConfig cfg;
      cfg.n = n;
      cfg.threshold = threshold;
      cfg.seed = seed_base + static_cast<std::uint64_t>(k);
      pool.push_back(generate_cities(cfg));
    } else if (env == "general") {
      GeneralConfig cfg;
      cfg.n = n;
      cfg.threshold = threshold;
      cfg.seed = seed_base + static_cast<std::uint64_t>(k);
      pool.push_back(generate_general(cfg));
    } else {
      throw ConfigError("unknown environment '" + env + "'");
    }
  }
  return pool;
}

std::vector<double> exact_references(const std::vector<Instance>& instances, int cap,
                                     int workers) {
  std::vector<double> refs(instances.size(), 0.0);
  parallel_for(static_cast<int>(instances.size()), workers,
               [&](int i) { refs[i] = solve_exact_dp(instances[i], cap).objective; });
  return refs;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics: " + path.string());
  out << "batch,mean_return,mean_objective,mean_gap,policy_loss,value_loss,entropy\n";
  out.precision(17);
  for (const MetricsRow& r : rows) {
    out << r.batch << ',' << r.mean_return << ',' << r.mean_objective << ',';
    if (r.mean_gap >= 0.0) out << r.mean_gap;
    out << ',' << r.policy_loss << ',' << r.value_loss << ',' << r.entropy << "\n";
  }
}

TrainResult train(const TrainConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  TrainResult result;
  result.train_pool = cfg.fresh_instances
                          ? std::vector<Instance>{}
                          : generate_pool(cfg.env, cfg.n, cfg.threshold, cfg.pool_size,
                                          cfg.seed);
  result.eval_pool = generate_pool(cfg.env, cfg.n, cfg.threshold, cfg.eval_pool_size,
                                   cfg.seed + kEvalPoolOffset);

  const bool refs_available = cfg.compute_exact_refs && cfg.n <= cfg.exact_cap;
  if (refs_available && !result.train_pool.empty())
    result.train_refs = exact_references(result.train_pool, cfg.exact_cap, cfg.workers);
  if (refs_available && !result.eval_pool.empty())
    result.eval_refs = exact_references(result.eval_pool, cfg.exact_cap, cfg.workers);

  result.actor = PolicyParams::init(cfg.embed_dim, cfg.seed + kActorSeedOffset);
  result.critic = CriticParams::init(cfg.n, cfg.seed + kCriticSeedOffset);

  const std::vector<ParamRef> refs = collect_params(result.actor, result.critic);
  AdamState adam = AdamState::init(refs);
  Rng shuffle_rng(cfg.seed + kShuffleSeedOffset);

  std::ofstream metrics_stream(out_dir / "metrics.csv");
  if (!metrics_stream) throw IoError("cannot write metrics.csv under " + out_dir.string());
  metrics_stream << "batch,mean_return,mean_objective,mean_gap,policy_loss,value_loss,entropy\n";
  metrics_stream.precision(17);

  for (int batch_id = 0; batch_id < cfg.total_batches; ++batch_id) {
    // Snapshot of the current parameters shared by all rollout workers.
    NeuralPolicy policy(result.actor, result.critic, /*sample=*/true);

    std::vector<Trajectory> batch(cfg.episodes_per_batch);
    std::vector<int> instance_ids(cfg.episodes_per_batch, 0);
    std::vector<std::shared_ptr<const Instance>> fresh;
    if (cfg.fresh_instances) {
      fresh.resize(cfg.episodes_per_batch);
      for (int e = 0; e < cfg.episodes_per_batch; ++e) {
        const std::uint64_t seed = cfg.seed + kFreshPoolOffset +
                                   static_cast<std::uint64_t>(batch_id) *
                                       cfg.episodes_per_batch + e;
        fresh[e] = std::make_shared<const Instance>(
            generate_pool(cfg.env, cfg.n, cfg.threshold, 1, seed)[0]);
      }
    }

    parallel_for(cfg.episodes_per_batch, cfg.workers, [&](int e) {
      const std::uint64_t episode_seed =
          cfg.seed + kEpisodeSeedOffset +
          static_cast<std::uint64_t>(batch_id) * cfg.episodes_per_batch + e;
      std::shared_ptr<const Instance> inst;
      if (cfg.fresh_instances) {
        inst = fresh[e];
        instance_ids[e] = -1;
      } else {
        const int idx = (batch_id * cfg.episodes_per_batch + e) %
                        static_cast<int>(result.train_pool.size());
        inst = std::make_shared<const Instance>(result.train_pool[idx]);
        instance_ids[e] = idx;
      }
      batch[e] = rollout(std::move(inst), policy, episode_seed).first;
    });

    // Episodes on edgeless instances carry no transitions; drop them.
    std::vector<Trajectory> usable;
    std::vector<int> usable_ids;
    for (int e = 0; e < cfg.episodes_per_batch; ++e) {
      if (!batch[e].steps.empty()) {
        usable.push_back(std::move(batch[e]));
        usable_ids.push_back(instance_ids[e]);
      }
    }

    MetricsRow row;
    row.batch = batch_id;
    if (!usable.empty()) {
      const UpdateStats stats =
          ppo_update(usable, result.actor, result.critic, adam, cfg, shuffle_rng, batch_id);
      row.policy_loss = stats.policy_loss;
      row.value_loss = stats.value_loss;
      row.entropy = stats.entropy;

      double sum_return = 0.0, sum_objective = 0.0, sum_gap = 0.0;
      int gap_count = 0;
      for (std::size_t e = 0; e < usable.size(); ++e) {
        sum_return += usable[e].total_scaled_reward();
        sum_objective += usable[e].final_objective;
        if (!result.train_refs.empty() && usable_ids[e] >= 0) {
          sum_gap += optimality_gap(usable[e].final_objective,
                                    result.train_refs[usable_ids[e]]);
          ++gap_count;
        }
      }
      row.mean_return = sum_return / static_cast<double>(usable.size());
      row.mean_objective = sum_objective / static_cast<double>(usable.size());
      row.mean_gap = gap_count > 0 ? sum_gap / gap_count : -1.0;
    }

    result.metrics.push_back(row);
    metrics_stream << row.batch << ',' << row.mean_return << ',' << row.mean_objective
                   << ',';
    if (row.mean_gap >= 0.0) metrics_stream << row.mean_gap;
    metrics_stream << ',' << row.policy_loss << ',' << row.value_loss << ','
                   << row.entropy << "\n";
    metrics_stream.flush();

    if (cfg.checkpoint_every > 0 && (batch_id + 1) % cfg.checkpoint_every == 0) {
      save_checkpoint(result.actor, result.critic,
                      out_dir / ("checkpoint_batch_" + std::to_string(batch_id + 1) +
                                 ".json"));
    }
  }

  result.final_checkpoint = out_dir / "checkpoint_final.json";
  save_checkpoint(result.actor, result.critic, result.final_checkpoint);
  return result;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

TrainConfig parse_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());

  TrainConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));

    try {
      if (key == "learning_rate") cfg.learning_rate = std::stod(value);
      else if (key == "gamma") cfg.gamma = std::stod(value);
      else if (key == "gae_lambda") cfg.gae_lambda = std::stod(value);
      else if (key == "clip_epsilon") cfg.clip_epsilon = std::stod(value);
      else if (key == "epochs_per_batch") cfg.epochs_per_batch = std::stoi(value);
      else if (key == "episodes_per_batch") cfg.episodes_per_batch = std::stoi(value);
      else if (key == "minibatch_size") cfg.minibatch_size = std::stoi(value);
      else if (key == "entropy_coef") cfg.entropy_coef = std::stod(value);
      else if (key == "value_coef") cfg.value_coef = std::stod(value);
      else if (key == "grad_clip_norm") cfg.grad_clip_norm = std::stod(value);
      else if (key == "total_batches") cfg.total_batches = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "env") cfg.env = value;
      else if (key == "n") cfg.n = std::stoi(value);
      else if (key == "threshold") cfg.threshold = std::stod(value);
      else if (key == "pool_size") cfg.pool_size = std::stoi(value);
      else if (key == "fresh_instances") cfg.fresh_instances = (value == "true" || value == "1");
      else if (key == "eval_pool_size") cfg.eval_pool_size = std::stoi(value);
      else if (key == "embed_dim") cfg.embed_dim = std::stoi(value);
      else if (key == "checkpoint_every") cfg.checkpoint_every = std::stoi(value);
      else if (key == "compute_exact_refs") cfg.compute_exact_refs = (value == "true" || value == "1");
      else if (key == "exact_cap") cfg.exact_cap = std::stoi(value);
      else if (key == "workers") cfg.workers = std::stoi(value);
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad value for '" + key + "' on line " + std::to_string(line_no));
    } catch (const std::out_of_range&) {
      throw ConfigError("value out of range for '" + key + "' on line " +
                        std::to_string(line_no));
    }
  }
  cfg.validate();
  return cfg;
}

void write_train_config(const TrainConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config: " + path.string());
  out.precision(17);
  out << "learning_rate = " << cfg.learning_rate << "\n"
      << "gamma = " << cfg.gamma << "\n"
      << "gae_lambda = " << cfg.gae_lambda << "\n"
      << "clip_epsilon = " << cfg.clip_epsilon << "\n"
      << "epochs_per_batch = " << cfg.epochs_per_batch << "\n"
      << "episodes_per_batch = " << cfg.episodes_per_batch << "\n"
      << "minibatch_size = " << cfg.minibatch_size << "\n"
      << "entropy_coef = " << cfg.entropy_coef << "\n"
      << "value_coef = " << cfg.value_coef << "\n"
      << "grad_clip_norm = " << cfg.grad_clip_norm << "\n"
      << "total_batches = " << cfg.total_batches << "\n"
      << "seed = " << cfg.seed << "\n"
      << "env = \"" << cfg.env << "\"\n"
      << "n = " << cfg.n << "\n"
      << "threshold = " << cfg.threshold << "\n"
      << "pool_size = " << cfg.pool_size << "\n"
      << "fresh_instances = " << (cfg.fresh_instances ? "true" : "false") << "\n"
      << "eval_pool_size = " << cfg.eval_pool_size << "\n"
      << "embed_dim = " << cfg.embed_dim << "\n"
      << "checkpoint_every = " << cfg.checkpoint_every << "\n"
      << "compute_exact_refs = " << (cfg.compute_exact_refs ? "true" : "false") << "\n"
      << "exact_cap = " << cfg.exact_cap << "\n"
      << "workers = " << cfg.workers << "\n";
}

}  // namespace cliquepart
