#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tsketch/experiment.hpp"
#include "tsketch/heavy_hitters.hpp"
#include "tsketch/sizing.hpp"

using namespace tsketch;

namespace {

TreeState heavy_tree(uint32_t n, int64_t m, double eps_hh, uint64_t seed) {
  SizingOverrides ov;
  ov.B = 16;
  ov.mode = RunMode::Reference;
  Params p = size_parameters(n, m, eps_hh * eps_hh / 100.0, ov);
  return TreeState(p, SeedPath{seed, {}});
}

}  // namespace

TEST_CASE("worked probe margins, single spike") {
  // x = 10 e1, eps = 0.5: margin (2.5 + 10)^2 - 100 = 56.25 > 28.75
  CHECK(probe_margin_exact(10, 10, 0.5) == doctest::Approx(56.25));
  CHECK(1.15 * 0.25 * 100 == doctest::Approx(28.75));
  CHECK(probe_margin_exact(10, 10, 0.5) > 1.15 * 0.25 * 100);
}

TEST_CASE("worked probe margins, flat vector") {
  // all-ones over 100 coordinates: X = 10, margin (2.5 + 1)^2 - 1 = 11.25
  CHECK(probe_margin_exact(1, 10, 0.5) == doctest::Approx(11.25));
  CHECK(probe_margin_exact(1, 10, 0.5) < 1.15 * 0.25 * 100);
}

TEST_CASE("zero vector reports no hits and no probes") {
  TreeState tree = heavy_tree(64, 1000, 0.5, 3);
  HeavyHitterReport rep = find_heavy(tree, 0.5);
  CHECK(rep.hits.empty());
  CHECK(rep.probes.empty());
  CHECK(tree.time() == 0);
}

TEST_CASE("probe below the integer grid is rejected") {
  TreeState tree = heavy_tree(64, 1000, 0.5, 4);
  tree.process_update({1, 5, 2});  // norm 2, eps*X = 1 < 2
  CHECK_THROWS_AS(find_heavy(tree, 0.5), Error);
}

TEST_CASE("planted spike is recovered, background excluded, state restored") {
  const uint32_t n = 100;
  PlantedVector pv = make_planted(n, 0.5, 1000, 17);
  TreeState tree = heavy_tree(n, int64_t(pv.stream.size()) + 3 * n + 8, 0.5, 17);
  for (const auto& u : pv.stream) tree.process_update(u);
  FrequencyVector before = tree.shadow();

  HeavyHitterReport rep = find_heavy(tree, 0.5);
  CHECK(std::find(rep.hits.begin(), rep.hits.end(), pv.planted) != rep.hits.end());
  for (uint32_t h : rep.hits) CHECK(h == pv.planted);
  CHECK(rep.estimator_queries == 2 * n);
  CHECK(rep.probes.size() == n);
  CHECK(tree.shadow().raw() == before.raw());  // restoration exactness
  CHECK(tree.time() == int64_t(pv.stream.size()) + 3 * n);
}

TEST_CASE("negative spike is recovered through the T-side probe") {
  const uint32_t n = 64;
  TreeState tree = heavy_tree(n, 4096, 0.5, 23);
  int64_t t = 0;
  for (uint32_t i = 1; i <= n; ++i)
    tree.process_update({++t, i, i == 7 ? -20000 : 300});
  HeavyHitterReport rep = find_heavy(tree, 0.5);
  CHECK(std::find(rep.hits.begin(), rep.hits.end(), 7u) != rep.hits.end());
}

TEST_CASE("exact-oracle margin separation on random planted vectors") {
  // with exact estimates: heavy margins >= 1.25 eps^2 ||x||^2 and light
  // margins <= 0.8525 eps^2 ||x||^2, both strictly separated from 1.15
  const double eps = 0.5;
  Rng64 rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    const uint32_t n = 50;
    std::vector<double> x(n);
    double background_cap = 0;
    for (uint32_t i = 1; i < n; ++i) {
      x[i] = double(int64_t(rng.next_below(200))) - 100.0;
      background_cap = std::max(background_cap, std::abs(x[i]));
    }
    double rest = 0;
    for (uint32_t i = 1; i < n; ++i) rest += x[i] * x[i];
    // plant so the spike is eps-heavy and the rest is below (eps/2)||x||
    double norm_wo = std::sqrt(rest);
    double spike = std::max(2.0 * norm_wo, 10.0);
    x[0] = spike;
    double norm = std::sqrt(rest + spike * spike);
    REQUIRE(std::abs(x[0]) >= eps * norm);

    double thresh = 1.15 * eps * eps * norm * norm;
    double heavy_margin = probe_margin_exact(x[0], norm, eps);
    CHECK(heavy_margin >= 1.25 * eps * eps * norm * norm * (1 - 1e-12));
    CHECK(heavy_margin > thresh);
    for (uint32_t i = 1; i < n; ++i) {
      if (std::abs(x[i]) > 0.5 * eps * norm) continue;
      double light_margin = probe_margin_exact(x[i], norm, eps);
      CHECK(light_margin <= 0.8525 * eps * eps * norm * norm * (1 + 1e-12));
      CHECK(light_margin < thresh);
    }
  }
}

TEST_CASE("lp variants reuse the L2 hit set") {
  const uint32_t n = 64;
  TreeState tree = heavy_tree(n, 4096, 0.5, 29);
  int64_t t = 0;
  for (uint32_t i = 1; i <= n; ++i)
    tree.process_update({++t, i, i == 3 ? 30000 : 700});

  TreeState tree2 = tree;
  HeavyHitterReport l2 = find_heavy(tree, 0.5);
  HeavyHitterReport lp = find_heavy_lp(tree2, 0.5, 1.0);
  CHECK(l2.hits == lp.hits);
  CHECK(std::find(lp.hits.begin(), lp.hits.end(), 3u) != lp.hits.end());

  TreeState zero = heavy_tree(n, 1000, 0.5, 30);
  CHECK(find_heavy_lp(zero, 0.5, 0.5).hits.empty());
  CHECK_THROWS_AS(find_heavy_lp(zero, 0.5, 2.5), Error);
  CHECK_THROWS_AS(find_heavy_lp(zero, 0.5, 0.0), Error);
}

TEST_CASE("probe budget is enforced against m") {
  const uint32_t n = 64;
  TreeState tree = heavy_tree(n, 100, 0.5, 31);  // m far below 3n
  tree.process_update({1, 2, 50});
  CHECK_THROWS_AS(find_heavy(tree, 0.5), Error);
}
