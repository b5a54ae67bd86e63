// Stream generators, adaptive attackers, and the sequential game driver that
// alternates adversary moves and algorithm responses.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tsketch/f2_sketch.hpp"
#include "tsketch/robust_f2.hpp"

namespace tsketch {

struct BoundaryEvent {
  int64_t t = 0;
  uint32_t level = 0;  // highest level that closed on schedule at t
};

// One side of the game: absorbs updates, returns F2 estimates.
class StreamAlgo {
 public:
  virtual ~StreamAlgo() = default;
  virtual double process(const Update& u) = 0;
  virtual std::string name() const = 0;
  virtual uint32_t last_flags() const { return 0; }
  virtual void drain_events(std::vector<IterateEvent>& out) { (void)out; }
};

class RobustF2Algo : public StreamAlgo {
 public:
  RobustF2Algo(const Params& params, const SeedPath& master);
  double process(const Update& u) override;
  std::string name() const override { return "robust_f2"; }
  uint32_t last_flags() const override { return last_flags_; }
  void drain_events(std::vector<IterateEvent>& out) override;
  void drain_boundaries(std::vector<BoundaryEvent>& out);
  TreeState& tree() { return tree_; }
  const TreeState& tree() const { return tree_; }

 private:
  TreeState tree_;
  uint32_t last_flags_ = 0;
  std::vector<IterateEvent> pending_;
  std::vector<BoundaryEvent> pending_boundaries_;
};

// Deliberately non-robust strawman: one k-row sign sketch whose response is
// the raw mean quadratic form (1/k)||Ax||^2, no median, no refresh.
class NaiveMeanAms : public StreamAlgo {
 public:
  NaiveMeanAms(const SeedPath& seed, uint32_t n, int64_t k);
  double process(const Update& u) override;
  double query() const;  // response without an update
  std::string name() const override { return "naive_mean_ams"; }
  int64_t k() const { return k_; }

 private:
  F2Sketch sk_;
  int64_t k_;
};

struct GameStep {
  Update u;
  double response = 0;
  long double truth = 0;
  uint32_t flags = 0;
};

struct GameVerdict {
  double max_rel_err = 0;       // |response-truth| / max(truth,1), max over steps
  int64_t break_time = -1;      // first step outside (1 +- eps), -1 if none
  bool algorithm_failed = false;
  std::string failure;
  int64_t iterate_updates = 0;  // applied iterate updates across all levels
  int64_t max_block_updates = 0;
};

struct GameTranscript {
  std::string adversary;
  std::string algorithm;
  uint64_t adversary_seed = 0;
  double eps = 0;
  std::vector<GameStep> steps;
  std::vector<IterateEvent> events;
  std::vector<BoundaryEvent> boundaries;
  GameVerdict verdict;
};

class AdversaryStrategy {
 public:
  virtual ~AdversaryStrategy() = default;
  // next move given the transcript so far; nullopt ends the game
  virtual std::optional<Update> next(const GameTranscript& so_far) = 0;
  virtual std::string kind() const = 0;
};

std::unique_ptr<AdversaryStrategy> make_oblivious_random(uint32_t n, uint64_t seed,
                                                         int64_t delta_range = 100);
std::unique_ptr<AdversaryStrategy> make_deletion_heavy(uint32_t n, uint64_t seed,
                                                       int64_t delta_range = 1000);
// Shadow-assisted adaptive attacker: probes coordinate pairs for biased
// responses, then piles mass on the worst direction. Declares victory by
// ending the game at the first response outside (1 +- eps) of its shadow.
std::unique_ptr<AdversaryStrategy> make_alignment_attack(uint32_t n, uint64_t seed,
                                                         double eps,
                                                         int64_t probe_magnitude = 4096);

// named constructor used by config files
std::unique_ptr<AdversaryStrategy> make_strategy(const std::string& kind, uint32_t n,
                                                 uint64_t seed, double eps);

GameTranscript run_game(StreamAlgo& algo, AdversaryStrategy& strategy, int64_t m,
                        double eps, uint32_t n);

// ---------------------------------------------------------------------------
// Gram-matrix reconstruction attack against the naive baseline.

struct BreakCertificate {
  bool feasible = false;          // a kernel direction was found
  std::vector<int64_t> inserted;  // the final hard vector
  double reported = 0;
  double true_f2 = 0;
  int64_t probe_rounds = 0;  // <= n + n(n-1)/2
  int64_t updates_used = 0;
  double max_probe_rel_err = 0;  // response accuracy observed while probing
  double ratio() const { return true_f2 > 0 ? reported / true_f2 : 0.0; }
};

// Phase 1 reconstructs A^T A exactly from e_i / e_i + e_j probes, phase 2
// extracts an integer-scaled kernel vector (fails with Error(Attack) if the
// numerical rank check cannot certify rank <= k), phase 3 inserts the scaled
// kernel vector. Works against any responder; against an accurate one the
// reconstructed Gram matrix has full numerical rank and the certificate comes
// back infeasible.
BreakCertificate gram_attack(StreamAlgo& oracle, uint32_t n, int64_t k,
                             int64_t magnitude = 1000);

// transcript serialization
void write_transcript_csv(std::ostream& out, const GameTranscript& g);
void write_replay(std::ostream& out, const GameTranscript& g);
GameTranscript read_replay(std::istream& in);

}  // namespace tsketch
