// Experiment runner: sectioned key=value configs, seeded game batches with
// per-seed transcript CSVs and an ordered summary, heavy-hitter and triangle
// tasks, and the space sweep.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tsketch/adversary.hpp"
#include "tsketch/heavy_hitters.hpp"
#include "tsketch/sizing.hpp"
#include "tsketch/tri_framework.hpp"

namespace tsketch {

struct ExperimentConfig {
  // [experiment]
  std::string task = "f2";  // f2 | heavy | tri
  uint32_t n = 1024;
  int64_t m = 20000;
  double eps = 0.2;
  int64_t seeds = 1;
  uint64_t master_seed = 1;
  RunMode mode = RunMode::Reference;
  std::string adversary = "oblivious_random";  // or file:PATH
  int jobs = 1;

  // [sizing]
  SizingOverrides sizing;

  // [tri]
  double tri_kappa = 4.0;
  double tri_C = 2.0;
  std::string tri_loss = "lp_p";
  double tri_shape = 1.0;
  std::string tri_sketch = "exact";  // exact | l1
  int64_t tri_l1_rows = 0;

  // [heavy]
  double eps_hh = 0.5;
  int64_t heavy_background = 1000;

  // [sweep]
  std::vector<uint32_t> sweep_n = {1024, 4096, 16384};
  int64_t sweep_m = 4096;

  // [output]
  std::string out_dir;  // empty: no files written
  bool write_transcripts = true;
  bool write_checkpoints = false;  // final TreeState blob per seed (f2 task)

  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig parse_file(const std::string& path);
  // dotted override, e.g. "sizing.B=16"
  void set_kv(const std::string& dotted, const std::string& value);
  void validate() const;
  Params make_params() const;
};

struct RunSummary {
  uint64_t seed = 0;
  double max_rel_err = 0;
  int64_t break_time = -1;
  bool failed = false;
  std::string failure;
  int64_t iterate_updates = 0;
  int64_t max_block_updates = 0;
  std::vector<int64_t> updates_per_level;
  int64_t peak_words = 0;
  // heavy task
  uint32_t planted = 0;
  bool planted_hit = false;
  bool clean = true;  // no hit below the (eps/2) exclusion line
  // tri task
  double max_over = 0;   // max estimate/truth
  double min_over = 0;   // min estimate/truth
  int64_t resets_total = 0;
  bool contraction_ok = true;
  bool reset_bound_ok = true;
  bool envelope_ok = true;
};

struct BatchOutcome {
  std::vector<RunSummary> runs;
  // reference-mode iterate events per run (f2 tasks)
  std::vector<std::vector<IterateEvent>> events;
  double wall_seconds = 0;
};

BatchOutcome run_batch(const ExperimentConfig& cfg);

struct SpaceRow {
  uint32_t n = 0;
  int64_t B = 0;
  uint32_t H = 0;
  int64_t g = 0, b = 0;
  int64_t slots = 0;
  int64_t peak_words = 0;
};

struct SpaceSweepResult {
  std::vector<SpaceRow> rows;
  double growth() const;  // last peak / first peak
};

SpaceSweepResult run_space_sweep(const ExperimentConfig& cfg);

// planted heavy-hitter instance used by the heavy task and its tests
struct PlantedVector {
  uint32_t planted = 0;
  int64_t planted_value = 0;
  int64_t background = 0;
  std::vector<Update> stream;
  double norm = 0;  // exact L2 norm of the planted vector
};
PlantedVector make_planted(uint32_t n, double eps_hh, int64_t background,
                           uint64_t seed);

void write_summary_csv(std::ostream& out, const ExperimentConfig& cfg,
                       const BatchOutcome& outcome);

}  // namespace tsketch
