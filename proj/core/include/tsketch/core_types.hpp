// Stream updates, dense reference vectors, parameter bundles and seed paths.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsketch/common.hpp"

namespace tsketch {

// One turnstile stream element. Coordinates are 1-based on the wire and in
// this struct; dense arrays are 0-based internally.
struct Update {
  int64_t t = 0;      // time index, strictly increasing within a stream
  uint32_t a = 0;     // coordinate, 1..n
  int64_t delta = 0;  // signed increment, |delta| <= delta_max
};

constexpr int64_t kDefaultDeltaMax = int64_t(1) << 30;
constexpr int64_t kEntryMagnitudeCap = int64_t(1) << 62;

// Dense signed frequency vector. Reference/shadow instrument: tests and
// reference mode only, never part of the sketch-space state.
class FrequencyVector {
 public:
  FrequencyVector() = default;
  explicit FrequencyVector(uint32_t n) : entries_(n, 0) {}

  uint32_t n() const { return uint32_t(entries_.size()); }
  int64_t operator[](uint32_t i0) const { return entries_[i0]; }  // 0-based

  void apply(const Update& u);

  // exact second moment, computed in 128-bit then widened
  long double f2() const;
  long double l1() const;
  bool is_zero() const;

  const std::vector<int64_t>& raw() const { return entries_; }
  std::vector<int64_t>& raw() { return entries_; }

 private:
  std::vector<int64_t> entries_;
};

enum class SeedRole : uint32_t {
  BlockMatrix = 1,
  Corrector = 2,
  L1Matrix = 3,
  Adversary = 4,
  StreamGen = 5,
  Baseline = 6,
};

const char* seed_role_name(SeedRole r);

// Deterministic seed derivation. The digest is a keyed mix over the path
// triples; equal (master_seed, path) always gives equal digests and distinct
// paths give independent-looking key streams.
struct SeedPath {
  uint64_t master_seed = 0;
  struct Segment {
    uint32_t level;
    int64_t ordinal;
    SeedRole role;
  };
  std::vector<Segment> path;

  uint64_t digest() const;
  std::string to_string() const;
};

SeedPath derive_seed(const SeedPath& base, uint32_t level, int64_t ordinal,
                     SeedRole role);

enum class RunMode { Reference, Streaming };
enum class SketchRealization { Auto, Exact, Random };

// Parameter bundle for the robust estimator tree. Produced by
// size_parameters(); all fields are plain data so they can be checkpointed.
struct Params {
  uint32_t n = 0;
  int64_t m = 0;
  double eps = 0.0;

  int64_t B = 0;       // branching factor
  uint32_t H = 0;      // tree height; levels run 1..H+1
  double eta = 0.0;    // per-level accuracy, eps / (100 H)
  int64_t L_max = 0;   // per-block iterate update cap

  // per-sketch shape: r = g * b rows
  int64_t g = 0;  // group count
  int64_t b = 0;  // rows per group
  // failure probability, kept in log form because the sized value underflows
  // any native float for honest union-bound sizing
  double log2_inv_delta = 0.0;

  double precision_scale = 0x1.0p-20;        // iterate coefficient grid
  double magnitude_cap = double(1ULL << 40); // iterate coefficient bound
  int64_t delta_max = kDefaultDeltaMax;

  RunMode mode = RunMode::Streaming;
  SketchRealization realization = SketchRealization::Auto;
  int64_t pool_slack = 4;       // extra block matrices kept per level
  int64_t memory_cap_words = int64_t(1) << 28;

  // sizing constants (overridable)
  double c_B = 1.0, c_L = 1.0, c_delta = 1.0;
  double c_b = 8.0, c_g = 8.0;

  int64_t rows() const { return g * b; }
  double delta_fail() const;  // exp2(-log2_inv_delta), clamped to denormal min
  bool use_exact() const;     // resolved realization
  void validate() const;
};

// entry += delta at u.a; throws Error(Index) for out-of-range coordinates.
void apply_update(FrequencyVector& v, const Update& u);

}  // namespace tsketch
