#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "cliquepart/bench.hpp"
#include "cliquepart/errors.hpp"
#include "cliquepart/instance.hpp"

using namespace cliquepart;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("cities generator splits 18 sites as (9, 6, 3)") {
  CitiesConfig cfg;
  cfg.n = 18;
  cfg.seed = 7;
  CitiesLayout layout;
  const Instance inst = generate_cities(cfg, &layout);
  CHECK(inst.n == 18);
  std::vector<int> counts(3, 0);
  for (int c : layout.city_of) counts[c]++;
  CHECK(counts == std::vector<int>{9, 6, 3});
}

TEST_CASE("generated instances satisfy the full invariant suite") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    CitiesConfig ccfg;
    ccfg.n = 13;
    ccfg.seed = seed;
    CHECK_NOTHROW(generate_cities(ccfg).validate());

    GeneralConfig gcfg;
    gcfg.n = 13;
    gcfg.seed = seed;
    CHECK_NOTHROW(generate_general(gcfg).validate());
  }
}

TEST_CASE("generators are deterministic for a fixed seed") {
  CitiesConfig ccfg;
  ccfg.n = 18;
  ccfg.seed = 7;
  CHECK(generate_cities(ccfg).distances == generate_cities(ccfg).distances);

  GeneralConfig gcfg;
  gcfg.n = 24;
  gcfg.seed = 99;
  CHECK(generate_general(gcfg).distances == generate_general(gcfg).distances);
}

TEST_CASE("general entries are uniform on (0, 240)") {
  GeneralConfig cfg;
  cfg.n = 64;

  double ks_sum = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = 1000 + s;
    const Instance inst = generate_general(cfg);
    std::vector<double> entries;
    for (int i = 0; i < inst.n; ++i) {
      for (int j = i + 1; j < inst.n; ++j) {
        CHECK(inst.d(i, j) > 0.0);
        CHECK(inst.d(i, j) < 240.0);
        entries.push_back(inst.d(i, j));
      }
    }
    std::sort(entries.begin(), entries.end());
    const double m = static_cast<double>(entries.size());
    double ks = 0.0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const double cdf = entries[k] / 240.0;
      ks = std::max(ks, std::abs((k + 1) / m - cdf));
      ks = std::max(ks, std::abs(k / m - cdf));
    }
    ks_sum += ks;
  }
  CHECK(ks_sum / seeds < 0.05);
}

TEST_CASE("cities instances are multimodal: intra-city pairs are closer") {
  CitiesConfig cfg;
  cfg.n = 60;
  for (int s = 0; s < 20; ++s) {
    cfg.seed = 500 + s;
    CitiesLayout layout;
    const Instance inst = generate_cities(cfg, &layout);
    double intra = 0.0, inter = 0.0;
    int intra_count = 0, inter_count = 0;
    for (int i = 0; i < inst.n; ++i) {
      for (int j = i + 1; j < inst.n; ++j) {
        if (layout.city_of[i] == layout.city_of[j]) {
          intra += inst.d(i, j);
          ++intra_count;
        } else {
          inter += inst.d(i, j);
          ++inter_count;
        }
      }
    }
    CHECK(intra / intra_count < inter / inter_count);
  }
}

TEST_CASE("generator configs are validated") {
  CitiesConfig ccfg;
  ccfg.n = 1;
  CHECK_THROWS_AS(generate_cities(ccfg), ConfigError);

  GeneralConfig gcfg;
  gcfg.n = 0;
  CHECK_THROWS_AS(generate_general(gcfg), ConfigError);

  CitiesConfig bad_var;
  bad_var.n = 8;
  bad_var.variance_low = 200.0;
  CHECK_THROWS_AS(generate_cities(bad_var), ConfigError);
}

TEST_CASE("instance save/load round-trips bit-exactly") {
  const auto path = temp_file("cliquepart_roundtrip.json");

  SUBCASE("figure-1 fixture") {
    const Instance inst = figure1_instance();
    save_instance(inst, path);
    const Instance back = load_instance(path);
    CHECK(back.n == inst.n);
    CHECK(back.threshold == inst.threshold);
    CHECK(back.distances == inst.distances);
  }

  SUBCASE("generated instance with irrational distances") {
    CitiesConfig cfg;
    cfg.n = 12;
    cfg.seed = 3;
    const Instance inst = generate_cities(cfg);
    save_instance(inst, path);
    const Instance back = load_instance(path);
    CHECK(back.distances == inst.distances);
  }

  std::filesystem::remove(path);
}

TEST_CASE("instance files are validated on load") {
  const auto path = temp_file("cliquepart_invalid.json");

  SUBCASE("asymmetric matrix names the pair") {
    std::ofstream(path) << R"({"n":2,"threshold":60,"distances":[[0,5],[6,0]]})";
    CHECK_THROWS_WITH_AS(load_instance(path), doctest::Contains("(0,1)"),
                         ValidationError);
  }

  SUBCASE("nonzero diagonal names the pair") {
    std::ofstream(path) << R"({"n":2,"threshold":60,"distances":[[5,1],[1,0]]})";
    CHECK_THROWS_WITH_AS(load_instance(path), doctest::Contains("(0,0)"),
                         ValidationError);
  }

  SUBCASE("negative entry") {
    std::ofstream(path) << R"({"n":2,"threshold":60,"distances":[[0,-1],[-1,0]]})";
    CHECK_THROWS_AS(load_instance(path), ValidationError);
  }

  SUBCASE("shape mismatch") {
    std::ofstream(path) << R"({"n":3,"threshold":60,"distances":[[0,1],[1,0]]})";
    CHECK_THROWS_AS(load_instance(path), ValidationError);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_instance(temp_file("does_not_exist.json")), IoError);
  }

  std::filesystem::remove(path);
}
