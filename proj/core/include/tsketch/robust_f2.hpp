// Adversarially robust F2 estimation: a B-ary block tree over the stream with
// per-level estimator/corrector pairs and a learner iterate per active block.
//
// Levels run 1..H+1; a level-i block spans B^(i-1) updates on a global grid,
// the root never closes. Every block slot at level i ingests from the start
// of the enclosing level-(i+1) block, so images of the parent iterate and of
// completed left siblings are always available under fresh matrices. Iterate
// updates move v toward (or away from) the active-block query v+q1; each one
// forcibly respawns the child chain below.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tsketch/core_types.hpp"
#include "tsketch/f2_sketch.hpp"

namespace tsketch {

struct LevelReport {
  uint32_t level = 0;
  double P = 0, Q = 0, A = 0;
  bool accepted = true;
  bool iterate_updated = false;
};

// acceptance window edges (1 -+ eta)^(3 level) around the corrector value
struct WindowBounds {
  double lo = 1, hi = 1;
};
WindowBounds window_bounds(double eta, uint32_t level);

// learner step: (1/4) sqrt(P/Q) * sigma * eta, clamped to [-1, 1];
// 0 when Q <= 0 (division guard)
double iterate_step_alpha(double P, double Q, double sigma, double eta);

struct IterateEvent {
  uint32_t level = 0;
  int64_t t = 0;
  double alpha = 0;           // gridded step, 0 for guarded no-ops
  int64_t update_count = 0;   // block's count after this event
  bool applied = false;       // false: Q=0 guard or alpha gridded to zero
  // reference mode only: ||T - v||^2 before/after, T = parent iterate + q0
  long double metric_old = -1, metric_new = -1;
};

struct StepResult {
  int64_t t = 0;
  double estimate = 0;
  uint32_t accepted_mask = 0;  // bit (i-1) set = level i accepted
  std::vector<LevelReport> reports;
  std::vector<IterateEvent> events;
  int64_t boundary_level = 0;  // highest level that closed on schedule
};

struct LedgerEntry {
  int64_t seg_start = 0;  // first update time of the segment
  int64_t seg_end = 0;
  double weight = 0;      // gridded at creation, scaled by gridded scalars after
};

struct IterateLedger {
  std::vector<LedgerEntry> entries;
  int64_t update_count = 0;
  void reset() {
    entries.clear();
    update_count = 0;
  }
};

struct SpaceLevelRow {
  uint32_t level = 0;
  int64_t slots = 0;
  int64_t state_words = 0;
  int64_t ledger_entries = 0;
  int64_t counter_words = 0;
};

struct SpaceReport {
  std::vector<SpaceLevelRow> rows;
  int64_t state_words = 0;
  int64_t ledger_entries = 0;
  int64_t counter_words = 0;
  int64_t total_words() const { return state_words + ledger_entries * 3 + counter_words; }
};

// One sketching slot: either a seeded tug-of-war matrix or (exact realization)
// the dense accumulator itself. Tracks the scope accumulation, the image of
// the parent iterate, and their sum for whole-scope norm queries.
class LevelSlot {
 public:
  void init(bool exact, const SeedPath& seed, uint32_t n, F2Shape shape);
  void reset_scope(const SeedPath& seed);
  void ingest(uint32_t a, int64_t delta);
  void activate();  // q0 <- accum, vown <- 0
  // estimate of || vpar + accum ||^2 (corrector view / level-1 query view)
  double scope_estimate() const;
  double p_value() const { return p_cache_; }
  void apply_parent_iterate(double s1, double s2);
  void apply_own_iterate(double s1, double s2);
  // level-1 variant: q1 is exactly the single update of the active block
  void apply_own_iterate_single(double s1, double s2, uint32_t a, int64_t delta);

  int64_t state_words() const;
  const SeedPath& seed() const { return seed_; }
  void serialize(std::ostream& out) const;
  void deserialize(std::istream& in);

 private:
  void rebuild_comb();
  void refresh_p();
  double estimate_of(const std::vector<double>& v) const;

  bool exact_ = true;
  uint32_t n_ = 0;
  int64_t g_ = 1, b_ = 1;
  SeedPath seed_;
  SignFamily signs_;
  std::vector<double> accum_;  // scope mass image
  std::vector<double> vpar_;   // parent iterate image
  std::vector<double> comb_;   // accum_ + vpar_
  std::vector<double> gsq_;    // per-group sum of squares over comb_
  std::vector<double> q0_;     // accum_ at activation
  std::vector<double> vown_;   // own iterate image
  double p_cache_ = 0;
};

class TreeState {
 public:
  TreeState(const Params& params, const SeedPath& master);

  // Absorb one update and return the top-level F2 estimate plus per-level
  // reports and any iterate events. Throws Error(StreamOverrun) past m,
  // Error(IterateCap) when a block exceeds L_max (run must be treated as
  // failed), Error(Overflow) on ledger precision overflow.
  StepResult process_update(const Update& u);

  // Same estimate the last/next step would report, without ingesting.
  double current_estimate() const;

  const Params& params() const { return p_; }
  int64_t time() const { return t_; }
  int64_t last_wire_t() const { return last_wire_t_; }
  bool aborted() const { return aborted_; }

  // reference mode instruments
  const FrequencyVector& shadow() const;
  long double true_f2() const;

  SpaceReport space_report() const;

  // transcript counters per level (1..H+1)
  struct LevelCounters {
    int64_t top = 0, bot = 0, boundaries = 0, alpha_zero = 0, q_zero = 0,
            recycles = 0, max_update_count = 0, ledger_entries = 0;
  };
  LevelCounters counters(uint32_t level) const;

  void serialize(std::ostream& out) const;
  static TreeState deserialize(std::istream& in);

 private:
  struct Level {
    int64_t span = 1;
    std::vector<LevelSlot> slots;  // block slots then one corrector (last)
    int corrector = 0;
    int active = 0;
    int64_t used_in_scope = 0;
    int64_t scope_start = 1;
    int64_t block_start = 1;
    int64_t seed_seq = 0;
    int64_t children_completed = 0;
    double window_lo = 1, window_hi = 1;
    IterateLedger ledger;
    // counters
    int64_t top = 0, bot = 0, boundaries = 0, alpha_zero = 0, q_zero = 0,
            recycles = 0, max_update_count = 0;
    // reference mode
    std::vector<int64_t> scope_snap, block_snap;
    std::vector<double> v_shadow;
  };

  TreeState() = default;
  void build_levels();
  void compute_reports(std::vector<LevelReport>& out) const;
  void maintain_iter(uint32_t i, const LevelReport& rep, StepResult& res,
                     const Update& u);
  void respawn_below(uint32_t i);
  void rotate_block(uint32_t i);
  void reseed_level(uint32_t i, int64_t new_start);
  void scheduled_closes(StepResult& res);
  int64_t pool_block_slots(uint32_t level) const;
  SeedPath slot_seed(uint32_t level, int64_t seq, SeedRole role) const;
  double grid(double x) const;

  Params p_;
  SeedPath master_;
  bool exact_ = true;
  F2Shape shape_{1, 1};
  int64_t t_ = 0;
  int64_t last_wire_t_ = 0;
  bool aborted_ = false;
  std::vector<Level> levels_;  // [0] unused
  std::vector<int64_t> span_;
  // reference
  FrequencyVector xshadow_;
};

}  // namespace tsketch
