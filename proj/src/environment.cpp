#include "cliquepart/environment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "cliquepart/errors.hpp"

namespace cliquepart {

namespace {

std::string edge_str(Edge e) {
  return "(" + std::to_string(e.first) + "," + std::to_string(e.second) + ")";
}

}  // namespace

int EnvState::find(int v) const {
  // Path halving on a mutable view; parent_ is logically const here.
  auto& parent = const_cast<std::vector<int>&>(parent_);
  while (parent[v] != v) {
    parent[v] = parent[parent[v]];
    v = parent[v];
  }
  return v;
}

EnvState EnvState::reset(std::shared_ptr<const Instance> inst) {
  inst->validate();
  EnvState s;
  s.inst_ = std::move(inst);
  const int n = s.inst_->n;
  s.parent_.resize(n);
  s.members_.assign(n, {});
  for (int i = 0; i < n; ++i) {
    s.parent_[i] = i;
    s.members_[i] = {i};
  }
  const auto pairs = near_pairs(*s.inst_);
  s.available_.insert(pairs.begin(), pairs.end());
  s.objective_ = s.inst_->threshold * static_cast<double>(pairs.size());
  return s;
}

EnvState EnvState::reset(const Instance& inst) {
  return reset(std::make_shared<const Instance>(inst));
}

std::vector<Edge> EnvState::legal_actions() const {
  return {available_.begin(), available_.end()};  // std::set is already sorted
}

int EnvState::cluster_of(int node) const { return find(node); }

const std::vector<int>& EnvState::cluster_members(int node) const {
  return members_[find(node)];
}

StepOutcome EnvState::step(Edge e) {
  if (available_.count(e) == 0)
    throw IllegalActionError("edge " + edge_str(e) + " is not available");

  const int ra = find(e.first);
  const int rb = find(e.second);

  StepOutcome out;
  for (int u : members_[ra]) {
    for (int v : members_[rb]) {
      const Edge cross = make_edge(u, v);
      out.added.push_back(cross);
      out.reward += inst_->threshold - inst_->d(u, v);
    }
  }
  std::sort(out.added.begin(), out.added.end());

  // Merge rb into ra; keep member lists sorted for deterministic scans.
  parent_[rb] = ra;
  auto& ma = members_[ra];
  ma.insert(ma.end(), members_[rb].begin(), members_[rb].end());
  std::sort(ma.begin(), ma.end());
  members_[rb].clear();

  for (const Edge& cross : out.added) {
    available_.erase(cross);
    solution_.insert(cross);
  }

  const std::set<Edge> before = available_;
  rebuild_available();
  std::set_difference(before.begin(), before.end(), available_.begin(),
                      available_.end(), std::back_inserter(out.removed));

  objective_ -= out.reward;
  ++steps_;
  out.terminal = available_.empty();
  return out;
}

void EnvState::rebuild_available() {
  const double D = inst_->threshold;
  available_.clear();
  std::vector<int> roots;
  for (int i = 0; i < inst_->n; ++i)
    if (find(i) == i) roots.push_back(i);

  for (std::size_t a = 0; a < roots.size(); ++a) {
    for (std::size_t b = a + 1; b < roots.size(); ++b) {
      const auto& ca = members_[roots[a]];
      const auto& cb = members_[roots[b]];
      bool mergeable = true;
      for (int u : ca) {
        for (int v : cb) {
          if (inst_->d(u, v) >= D) {
            mergeable = false;
            break;
          }
        }
        if (!mergeable) break;
      }
      if (!mergeable) continue;
      for (int u : ca)
        for (int v : cb) available_.insert(make_edge(u, v));
    }
  }
}

Partition EnvState::current_partition() const {
  Partition p;
  p.assignment.assign(inst_->n, -1);
  int next_label = 0;
  for (int i = 0; i < inst_->n; ++i) {
    const int r = find(i);
    if (p.assignment[r] == -1) p.assignment[r] = next_label++;
    p.assignment[i] = p.assignment[r];
  }
  return p;
}

ObservationSnapshot EnvState::snapshot() const {
  return {{solution_.begin(), solution_.end()}, {available_.begin(), available_.end()}};
}

void EnvState::audit() const {
  const int n = inst_->n;
  const double D = inst_->threshold;

  auto fail = [](const std::string& what) { throw Error("state audit: " + what); };

  // solution_ is exactly the same-cluster pair set, and all of it is near.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Edge e{i, j};
      const bool same = find(i) == find(j);
      const bool in_solution = solution_.count(e) > 0;
      if (same != in_solution)
        fail("solution set mismatch at " + edge_str(e));
      if (same && inst_->d(i, j) >= D)
        fail("same-cluster pair at or above D: " + edge_str(e));

      // Availability characterization: clusters differ and merged diameter
      // stays below D.
      bool expect_available = !same;
      if (expect_available) {
        for (int u : members_[find(i)]) {
          for (int v : members_[find(j)]) {
            if (inst_->d(u, v) >= D) {
              expect_available = false;
              break;
            }
          }
          if (!expect_available) break;
        }
      }
      if (expect_available != (available_.count(e) > 0))
        fail("availability mismatch at " + edge_str(e));
    }
  }

  for (const Edge& e : available_)
    if (solution_.count(e)) fail("available and solution sets overlap at " + edge_str(e));

  if (steps_ > n - 1) fail("step count exceeds n-1");

  // Member lists partition [0, n).
  std::vector<int> seen(n, 0);
  for (int r = 0; r < n; ++r) {
    if (!members_[r].empty() && find(r) != r) fail("member list on non-root");
    for (int v : members_[r]) {
      if (find(v) != r) fail("member list inconsistent with union-find");
      seen[v]++;
    }
  }
  for (int i = 0; i < n; ++i)
    if (seen[i] != 1) fail("node " + std::to_string(i) + " not covered exactly once");

  const double expected = evaluate(*inst_, current_partition());
  if (std::abs(expected - objective_) > 1e-9 * std::max(1.0, std::abs(expected)))
    fail("running objective drifted from evaluate()");
}

std::pair<EnvState, std::vector<StepOutcome>> replay(
    std::shared_ptr<const Instance> inst, const std::vector<Edge>& actions) {
  EnvState s = EnvState::reset(std::move(inst));
  std::vector<StepOutcome> outcomes;
  outcomes.reserve(actions.size());
  for (std::size_t k = 0; k < actions.size(); ++k) {
    try {
      outcomes.push_back(s.step(actions[k]));
    } catch (const IllegalActionError& e) {
      throw ReplayError("replay failed at position " + std::to_string(k) + ": " + e.what(), k);
    }
  }
  return {std::move(s), std::move(outcomes)};
}

std::pair<EnvState, std::vector<StepOutcome>> replay(const Instance& inst,
                                                     const std::vector<Edge>& actions) {
  return replay(std::make_shared<const Instance>(inst), actions);
}

void write_episode_log(std::ostream& out, const std::vector<Edge>& actions,
                       const std::vector<StepOutcome>& outcomes,
                       double reset_objective) {
  double objective = reset_objective;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    objective -= outcomes[k].reward;
    nlohmann::json rec;
    rec["step"] = k;
    rec["action"] = {actions[k].first, actions[k].second};
    rec["reward"] = outcomes[k].reward;
    auto edges_json = [](const std::vector<Edge>& edges) {
      auto arr = nlohmann::json::array();
      for (const Edge& e : edges) arr.push_back({e.first, e.second});
      return arr;
    };
    rec["added"] = edges_json(outcomes[k].added);
    rec["removed"] = edges_json(outcomes[k].removed);
    rec["objective_after"] = objective;
    out << rec.dump() << "\n";
  }
}

}  // namespace cliquepart
