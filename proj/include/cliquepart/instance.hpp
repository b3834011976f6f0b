#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cliquepart {

inline constexpr double kDefaultThreshold = 60.0;

// A clustering instance: symmetric travel-time matrix plus the cluster
// diameter threshold D. Pairs at distance >= D may never share a cluster;
// pairs below D pay either their distance (joined) or D (separated).
struct Instance {
  int n = 0;
  double threshold = kDefaultThreshold;
  std::vector<double> distances;  // row-major n*n, symmetric, zero diagonal

  double d(int i, int j) const { return distances[static_cast<std::size_t>(i) * n + j]; }
  double& d(int i, int j) { return distances[static_cast<std::size_t>(i) * n + j]; }

  // Throws ValidationError naming the offending index pair.
  void validate() const;
};

// Multimodal generator: sites scattered around three cities on a square map.
struct CitiesConfig {
  int n = 0;
  double map_side = 240.0;
  int city_count = 3;
  // Fractions of sites near each city, largest first.
  std::vector<double> proportions = {1.0 / 2.0, 1.0 / 3.0, 1.0 / 6.0};
  double variance_low = 80.0;
  double variance_high = 160.0;
  double threshold = kDefaultThreshold;
  std::uint64_t seed = 0;
};

// Unstructured generator: i.i.d. uniform travel times.
struct GeneralConfig {
  int n = 0;
  double dist_high = 240.0;
  double threshold = kDefaultThreshold;
  std::uint64_t seed = 0;
};

Instance generate_cities(const CitiesConfig& cfg);
Instance generate_general(const GeneralConfig& cfg);

// Site coordinates drawn by the cities generator, mostly useful for
// inspecting the spatial structure; city_of[i] is the index of the city
// site i was scattered around.
struct CitiesLayout {
  std::vector<std::pair<double, double>> centers;
  std::vector<std::pair<double, double>> sites;
  std::vector<int> city_of;
};
Instance generate_cities(const CitiesConfig& cfg, CitiesLayout* layout);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& inst, const std::filesystem::path& path);

// JSON (de)serialization used by the file format and the bindings.
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);

}  // namespace cliquepart
