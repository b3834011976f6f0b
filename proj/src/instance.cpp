#include "cliquepart/instance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cliquepart/errors.hpp"
#include "cliquepart/rng.hpp"

namespace cliquepart {

namespace {

std::string pair_str(int i, int j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

// Round half away from zero; counts here are non-negative.
int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

}  // namespace

void Instance::validate() const {
  if (n < 1) throw ValidationError("instance has no sites");
  if (!(threshold > 0.0)) throw ValidationError("threshold must be positive");
  if (distances.size() != static_cast<std::size_t>(n) * n)
    throw ValidationError("distance matrix shape mismatch: expected " +
                          std::to_string(n) + "x" + std::to_string(n));
  for (int i = 0; i < n; ++i) {
    if (d(i, i) != 0.0)
      throw ValidationError("nonzero diagonal at " + pair_str(i, i));
    for (int j = i + 1; j < n; ++j) {
      const double dij = d(i, j);
      if (!std::isfinite(dij))
        throw ValidationError("non-finite entry at " + pair_str(i, j));
      if (dij < 0.0)
        throw ValidationError("negative entry at " + pair_str(i, j));
      if (dij != d(j, i))
        throw ValidationError("asymmetric matrix at " + pair_str(i, j));
    }
  }
}

Instance generate_cities(const CitiesConfig& cfg) {
  return generate_cities(cfg, nullptr);
}

Instance generate_cities(const CitiesConfig& cfg, CitiesLayout* layout) {
  if (cfg.n < 2) throw ConfigError("cities generator needs n >= 2");
  if (cfg.city_count != static_cast<int>(cfg.proportions.size()))
    throw ConfigError("city_count does not match proportions");
  if (!(cfg.variance_low < cfg.variance_high))
    throw ConfigError("variance_low must be below variance_high");
  if (!(cfg.threshold > 0.0)) throw ConfigError("threshold must be positive");

  Rng rng(cfg.seed);

  // City centers: uniform on the map, rejection-sampled so that no two
  // centers sit closer than min_sep (coincident cities would collapse the
  // multimodal structure).
  const double min_sep = 80.0;
  std::vector<std::pair<double, double>> centers;
  centers.reserve(cfg.city_count);
  for (int c = 0; c < cfg.city_count; ++c) {
    for (;;) {
      const double x = rng.uniform(0.0, cfg.map_side);
      const double y = rng.uniform(0.0, cfg.map_side);
      bool ok = true;
      for (const auto& [cx, cy] : centers) {
        if (std::hypot(x - cx, y - cy) < min_sep) {
          ok = false;
          break;
        }
      }
      if (ok) {
        centers.emplace_back(x, y);
        break;
      }
    }
  }

  // Per-city site counts: round the stated fractions, remainder to the last
  // (smallest) city.
  std::vector<int> counts(cfg.city_count, 0);
  int assigned = 0;
  for (int c = 0; c + 1 < cfg.city_count; ++c) {
    counts[c] = round_half_up(cfg.n * cfg.proportions[c]);
    assigned += counts[c];
  }
  counts[cfg.city_count - 1] = cfg.n - assigned;
  if (counts[cfg.city_count - 1] < 0)
    throw ConfigError("proportions over-assign sites for n=" + std::to_string(cfg.n));

  // One isotropic per-axis variance per city.
  std::vector<double> sigma(cfg.city_count);
  for (int c = 0; c < cfg.city_count; ++c)
    sigma[c] = std::sqrt(rng.uniform(cfg.variance_low, cfg.variance_high));

  std::vector<std::pair<double, double>> sites;
  std::vector<int> city_of;
  sites.reserve(cfg.n);
  city_of.reserve(cfg.n);
  for (int c = 0; c < cfg.city_count; ++c) {
    for (int k = 0; k < counts[c]; ++k) {
      const double x = centers[c].first + sigma[c] * rng.normal();
      const double y = centers[c].second + sigma[c] * rng.normal();
      sites.emplace_back(x, y);
      city_of.push_back(c);
    }
  }

  Instance inst;
  inst.n = cfg.n;
  inst.threshold = cfg.threshold;
  inst.distances.assign(static_cast<std::size_t>(cfg.n) * cfg.n, 0.0);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = i + 1; j < cfg.n; ++j) {
      const double dij = std::hypot(sites[i].first - sites[j].first,
                                    sites[i].second - sites[j].second);
      inst.d(i, j) = dij;
      inst.d(j, i) = dij;
    }
  }
  inst.validate();

  if (layout) {
    layout->centers = std::move(centers);
    layout->sites = std::move(sites);
    layout->city_of = std::move(city_of);
  }
  return inst;
}

Instance generate_general(const GeneralConfig& cfg) {
  if (cfg.n < 2) throw ConfigError("general generator needs n >= 2");
  if (!(cfg.dist_high > 0.0)) throw ConfigError("dist_high must be positive");
  if (!(cfg.threshold > 0.0)) throw ConfigError("threshold must be positive");

  Rng rng(cfg.seed);
  Instance inst;
  inst.n = cfg.n;
  inst.threshold = cfg.threshold;
  inst.distances.assign(static_cast<std::size_t>(cfg.n) * cfg.n, 0.0);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = i + 1; j < cfg.n; ++j) {
      double dij = rng.uniform(0.0, cfg.dist_high);
      while (dij <= 0.0) dij = rng.uniform(0.0, cfg.dist_high);
      inst.d(i, j) = dij;
      inst.d(j, i) = dij;
    }
  }
  inst.validate();
  return inst;
}

std::string instance_to_json(const Instance& inst) {
  nlohmann::json j;
  j["n"] = inst.n;
  j["threshold"] = inst.threshold;
  auto rows = nlohmann::json::array();
  for (int i = 0; i < inst.n; ++i) {
    auto row = nlohmann::json::array();
    for (int k = 0; k < inst.n; ++k) row.push_back(inst.d(i, k));
    rows.push_back(std::move(row));
  }
  j["distances"] = std::move(rows);
  return j.dump(2);
}

Instance instance_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("instance JSON parse failure: ") + e.what());
  }
  if (!j.contains("n") || !j.contains("threshold") || !j.contains("distances"))
    throw ValidationError("instance JSON missing one of {n, threshold, distances}");

  Instance inst;
  inst.n = j.at("n").get<int>();
  inst.threshold = j.at("threshold").get<double>();
  const auto& rows = j.at("distances");
  if (!rows.is_array() || static_cast<int>(rows.size()) != inst.n)
    throw ValidationError("distance matrix shape mismatch: expected " +
                          std::to_string(inst.n) + " rows");
  inst.distances.assign(static_cast<std::size_t>(inst.n) * inst.n, 0.0);
  for (int i = 0; i < inst.n; ++i) {
    const auto& row = rows.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != inst.n)
      throw ValidationError("distance matrix shape mismatch at row " + std::to_string(i));
    for (int k = 0; k < inst.n; ++k) inst.d(i, k) = row.at(k).get<double>();
  }
  inst.validate();
  return inst;
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
  inst.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write instance file: " + path.string());
  out << instance_to_json(inst) << "\n";
  if (!out) throw IoError("write failure: " + path.string());
}

}  // namespace cliquepart
