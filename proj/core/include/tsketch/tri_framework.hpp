// Generic robust estimation for symmetric functions with a beta-approximate
// triangle inequality: a shallow B-ary tree (B ~ n^(1/C)), one-sided
// kappa^(3i) acceptance per level, and an iterate that resets to -q1 whenever
// a level overshoots. Sketches are pluggable: the exact oracle or the Cauchy
// L1 sketch.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tsketch/core_types.hpp"
#include "tsketch/l1_sketch.hpp"
#include "tsketch/losses.hpp"

namespace tsketch {

enum class TriSketchKind { ExactOracle, L1Cauchy };

struct TriFunction {
  LossSpec loss;  // separable reference evaluation F(v) = sum g(v_i)
  TriSketchKind sketch_kind = TriSketchKind::ExactOracle;
  double value_floor = 0;  // admissible range endpoints
  double value_cap = 0;

  double beta() const { return loss.beta(); }
  double eval(std::span<const double> v) const { return eval_loss_vec(loss, v); }
  std::string name() const { return loss.name(); }
};

// floor = 1/(n m), cap = n m delta_max^2
TriFunction make_tri_function(const LossSpec& loss, TriSketchKind kind, uint32_t n,
                              int64_t m, int64_t delta_max = kDefaultDeltaMax);

struct TriParams {
  uint32_t n = 0;
  int64_t m = 0;
  double C = 2.0;      // depth constant > 1
  int64_t B = 0;       // branching = ceil(n^(1/C))
  uint32_t H = 0;      // levels, smallest with B^H >= m
  double kappa = 0;    // must exceed 2 beta + 1
  int64_t L_max_tri = 0;  // per-level reset cap: the closed-form bound
  int64_t l1_rows = 0;    // rows when the L1 sketch is plugged in
  int64_t pool_slack = 2;
  int64_t delta_max = kDefaultDeltaMax;
  RunMode mode = RunMode::Streaming;
};

// Validates kappa > 2 beta + 1 and derives B, H and the reset cap
//   ceil( log(cap/floor) / log((kappa-beta)/(beta+1)) ).
TriParams size_tri(const TriFunction& fn, uint32_t n, int64_t m, double C,
                   double kappa, RunMode mode = RunMode::Streaming,
                   int64_t l1_rows = 0);

int64_t tri_reset_bound(const TriFunction& fn, double kappa);

struct TriLevelReport {
  uint32_t level = 0;
  double P = 0, Q = 0, A = 0;
  bool accepted = true;
  bool reset = false;
};

struct TriResetEvent {
  uint32_t level = 0;
  int64_t t = 0;
  int64_t reset_count = 0;
  // reference mode: F(T - v) before/after, T = parent iterate + q0
  double metric_old = -1, metric_new = -1;
};

struct TriStepResult {
  int64_t t = 0;
  double estimate = 0;
  std::vector<TriLevelReport> reports;
  std::vector<TriResetEvent> events;
};

class TriEstimator {
 public:
  TriEstimator(const TriFunction& fn, const TriParams& params, const SeedPath& master);

  TriStepResult process_update(const Update& u);
  double current_estimate() const;

  const TriParams& params() const { return p_; }
  const TriFunction& function() const { return fn_; }
  int64_t time() const { return t_; }
  bool aborted() const { return aborted_; }
  // kappa^(3H+1), the top-level approximation envelope
  double envelope() const;

  const FrequencyVector& shadow() const;
  long double true_value() const;  // F on the shadow
  int64_t resets_at(uint32_t level) const;        // cumulative over the stream
  int64_t max_block_resets_at(uint32_t level) const;  // what the cap binds

 private:
  struct Slot {
    bool exact = true;
    uint32_t n = 0;
    int64_t rows = 0;
    SeedPath seed;
    uint64_t digest = 0;
    std::vector<double> accum, vpar, comb, q0, vown, comb_q;
    double f_comb = 0;    // F accumulator over comb (exact)
    double f_comb_q = 0;  // F accumulator over comb_q (exact)
    double p_cache = 0;
  };

  struct Level {
    int64_t span = 1;
    std::vector<Slot> slots;  // block slots then corrector
    int corrector = 0;
    int active = 0;
    int64_t used_in_scope = 0;
    int64_t scope_start = 1, block_start = 1;
    int64_t seed_seq = 0;
    double window = 1;  // kappa^(3i)
    int64_t resets = 0, accepts = 0, rejects = 0, boundaries = 0;
    int64_t block_resets = 0, max_block_resets = 0;
    std::vector<int64_t> scope_snap, block_snap;
    std::vector<double> v_shadow;
  };

  void slot_init(Slot& s, uint32_t level, SeedRole role);
  void slot_reset(Slot& s, uint32_t level, SeedRole role);
  double cauchy_entry(const Slot& s, int64_t row, uint32_t coord) const;
  void slot_ingest(Slot& s, uint32_t a, int64_t delta);
  void slot_activate(Slot& s);
  void slot_rebuild(Slot& s);
  double feval(const Slot& s, const std::vector<double>& v) const;
  double est_scope(const Slot& s) const;   // F(vpar + accum)
  double est_query(const Slot& s) const;   // F(vown + accum - q0)
  void refresh_p(Slot& s);

  void compute_reports(std::vector<TriLevelReport>& out) const;
  void apply_reset(uint32_t i, TriStepResult& res);
  void rotate_block(uint32_t i);
  void reseed_level(uint32_t i, int64_t new_start);
  void scheduled_closes();
  int64_t pool_block_slots(uint32_t level) const;
  Level& lv(uint32_t i) { return levels_[i]; }

  TriFunction fn_;
  TriParams p_;
  SeedPath master_;
  int64_t t_ = 0;
  int64_t last_wire_t_ = 0;
  int64_t seedseq_ = 0;
  bool aborted_ = false;
  std::vector<Level> levels_;
  std::vector<int64_t> span_;
  FrequencyVector xshadow_;
};

}  // namespace tsketch
