#include "cliquepart/objective.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "cliquepart/errors.hpp"

namespace cliquepart {

Partition Partition::singletons(int n) {
  Partition p;
  p.assignment.resize(n);
  for (int i = 0; i < n; ++i) p.assignment[i] = i;
  return p;
}

std::vector<Edge> near_pairs(const Instance& inst) {
  std::vector<Edge> pairs;
  for (int i = 0; i < inst.n; ++i)
    for (int j = i + 1; j < inst.n; ++j)
      if (inst.d(i, j) < inst.threshold) pairs.emplace_back(i, j);
  return pairs;
}

namespace {

void check_length(const Instance& inst, const Partition& p) {
  if (p.n() != inst.n)
    throw DimensionError("partition length " + std::to_string(p.n()) +
                         " does not match instance n=" + std::to_string(inst.n));
}

}  // namespace

bool is_feasible(const Instance& inst, const Partition& p) {
  check_length(inst, p);
  for (int i = 0; i < inst.n; ++i)
    for (int j = i + 1; j < inst.n; ++j)
      if (p.same_cluster(i, j) && inst.d(i, j) >= inst.threshold) return false;
  return true;
}

double evaluate(const Instance& inst, const Partition& p) {
  check_length(inst, p);
  double total = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    for (int j = i + 1; j < inst.n; ++j) {
      const double dij = inst.d(i, j);
      if (dij >= inst.threshold) {
        if (p.same_cluster(i, j))
          throw FeasibilityError("infeasible partition: pair (" + std::to_string(i) +
                                 "," + std::to_string(j) + ") has d=" +
                                 std::to_string(dij) + " >= D");
        continue;  // gated out of the objective
      }
      total += p.same_cluster(i, j) ? dij : inst.threshold;
    }
  }
  return total;
}

double savings(const Instance& inst, const std::vector<int>& cluster) {
  double total = 0.0;
  for (std::size_t a = 0; a < cluster.size(); ++a) {
    for (std::size_t b = a + 1; b < cluster.size(); ++b) {
      const double dij = inst.d(cluster[a], cluster[b]);
      if (dij >= inst.threshold)
        throw FeasibilityError("cluster diameter >= D at pair (" +
                               std::to_string(cluster[a]) + "," +
                               std::to_string(cluster[b]) + ")");
      total += inst.threshold - dij;
    }
  }
  return total;
}

double optimality_gap(double candidate, double reference) {
  if (reference == 0.0) {
    if (candidate == 0.0) return 0.0;
    throw UndefinedGapError("gap undefined: reference objective is 0 but candidate is " +
                            std::to_string(candidate));
  }
  if (std::abs(candidate - reference) <= 1e-9 * reference) return 0.0;
  return (candidate - reference) / reference;
}

void save_partition(const Partition& p, const std::filesystem::path& path) {
  nlohmann::json j;
  j["assignment"] = p.assignment;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write partition: " + path.string());
  out << j.dump() << "\n";
  if (!out) throw IoError("partition write failure: " + path.string());
}

Partition load_partition(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open partition: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("partition parse failure: ") + e.what());
  }
  Partition p;
  p.assignment = j.at("assignment").get<std::vector<int>>();
  for (int label : p.assignment)
    if (label < 0) throw ValidationError("partition labels must be non-negative");
  return p;
}

}  // namespace cliquepart
