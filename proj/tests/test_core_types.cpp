#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "tsketch/core_types.hpp"
#include "tsketch/stream_io.hpp"

using namespace tsketch;

TEST_CASE("seed derivation is deterministic") {
  SeedPath s{42, {}};
  SeedPath a = derive_seed(s, 3, 0, SeedRole::Corrector);
  SeedPath b = derive_seed(s, 3, 0, SeedRole::Corrector);
  CHECK(a.digest() == b.digest());
  CHECK(a.to_string() == b.to_string());
}

TEST_CASE("seed derivation separates paths") {
  SeedPath s{42, {}};
  CHECK(derive_seed(s, 3, 0, SeedRole::Corrector).digest() !=
        derive_seed(s, 3, 1, SeedRole::Corrector).digest());
  CHECK(derive_seed(s, 3, 0, SeedRole::Corrector).digest() !=
        derive_seed(s, 3, 0, SeedRole::BlockMatrix).digest());
  CHECK(derive_seed(s, 2, 0, SeedRole::Corrector).digest() !=
        derive_seed(s, 3, 0, SeedRole::Corrector).digest());
}

TEST_CASE("10^4 derived seeds have no duplicate digests") {
  SeedPath s{7, {}};
  std::set<uint64_t> seen;
  for (uint32_t level = 1; level <= 10; ++level)
    for (int64_t ord = 0; ord < 500; ++ord) {
      seen.insert(derive_seed(s, level, ord, SeedRole::BlockMatrix).digest());
      seen.insert(derive_seed(s, level, ord, SeedRole::Corrector).digest());
    }
  CHECK(seen.size() == 10000);
}

TEST_CASE("nested derivations differ from flat ones") {
  SeedPath s{11, {}};
  SeedPath a = derive_seed(derive_seed(s, 1, 2, SeedRole::BlockMatrix), 3, 4,
                           SeedRole::Corrector);
  SeedPath b = derive_seed(s, 3, 4, SeedRole::Corrector);
  CHECK(a.digest() != b.digest());
}

TEST_CASE("apply_update basics") {
  FrequencyVector v(8);
  apply_update(v, {1, 1, 5});
  CHECK(v[0] == 5);
  CHECK(v.f2() == 25.0L);
  apply_update(v, {2, 1, -5});
  CHECK(v.is_zero());

  CHECK_THROWS_AS(apply_update(v, {3, 0, 1}), Error);
  CHECK_THROWS_AS(apply_update(v, {3, 9, 1}), Error);
}

TEST_CASE("fold of a random stream equals the coordinate sums") {
  Rng64 rng(99);
  FrequencyVector v(32);
  std::vector<int64_t> direct(32, 0);
  for (int t = 1; t <= 100; ++t) {
    uint32_t a = uint32_t(rng.next_below(32)) + 1;
    int64_t d = int64_t(rng.next_below(41)) - 20;
    apply_update(v, {t, a, d});
    direct[a - 1] += d;
  }
  CHECK(v.raw() == direct);
}

TEST_CASE("update order does not matter") {
  Rng64 rng(123);
  std::vector<Update> updates;
  for (int t = 1; t <= 60; ++t)
    updates.push_back({t, uint32_t(rng.next_below(16)) + 1,
                       int64_t(rng.next_below(9)) - 4});
  FrequencyVector a(16), b(16);
  for (auto& u : updates) a.apply(u);
  std::reverse(updates.begin(), updates.end());
  for (auto& u : updates) b.apply(u);
  CHECK(a.raw() == b.raw());
}

TEST_CASE("stream file round trip and diagnostics") {
  std::vector<Update> ups = {{1, 3, 5}, {2, 1, -2}, {7, 4, 0}};
  std::stringstream ss;
  write_stream(ss, ups);
  CHECK(ss.str() == "1 3 5\n2 1 -2\n7 4 0\n");
  auto back = read_stream(ss);
  REQUIRE(back.size() == 3);
  CHECK(back[2].t == 7);
  CHECK(back[1].delta == -2);

  std::stringstream bad1("1 2\n");
  CHECK_THROWS_AS(read_stream(bad1), Error);
  std::stringstream bad2("2 1 1\n1 1 1\n");
  CHECK_THROWS_AS(read_stream(bad2), Error);
  std::stringstream bad3("1 1 1 junk\n");
  CHECK_THROWS_AS(read_stream(bad3), Error);
}

TEST_CASE("params validation") {
  Params p;
  p.n = 64;
  p.m = 100;
  p.eps = 0.2;
  p.B = 4;
  p.H = 4;
  p.eta = p.eps / (100.0 * p.H);
  p.L_max = 10;
  p.g = 2;
  p.b = 4;
  CHECK_NOTHROW(p.validate());
  p.eta = 0.1;
  CHECK_THROWS_AS(p.validate(), Error);
  p.eta = p.eps / (100.0 * p.H);
  p.B = 2;  // 2^4 < 100
  CHECK_THROWS_AS(p.validate(), Error);
}
