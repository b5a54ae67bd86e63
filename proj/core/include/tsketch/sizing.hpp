// Joint sizing of the estimator tree: branching factor, height, per-level
// accuracy, iterate cap, and the union-bound failure probability that the
// sketch shapes are derived from.
#pragma once

#include "tsketch/core_types.hpp"

namespace tsketch {

struct SizingOverrides {
  // <= 0 means "derive from the formula"
  int64_t B = 0;
  uint32_t H = 0;
  int64_t L_max = 0;
  double log2_inv_delta = 0.0;
  // explicit sketch shape (both or neither); used by space sweeps to keep
  // the randomized realization at measurable size
  double sketch_eps = 0.0;
  double sketch_log2_inv_delta = 0.0;

  double c_B = 1.0, c_L = 1.0, c_delta = 1.0;
  double c_b = 8.0, c_g = 8.0;

  RunMode mode = RunMode::Streaming;
  SketchRealization realization = SketchRealization::Auto;
  int64_t pool_slack = 4;
  int64_t memory_cap_words = int64_t(1) << 28;
  int64_t delta_max = kDefaultDeltaMax;
};

// Solves H = smallest height whose formula branching covers the stream:
//   eta(H) = eps/(100 H), B(H) = max(2, ceil(c_B ln(n)/eta^2)), B(H)^H >= m.
// Then L_max = ceil(c_L ln(n)/eta^2) and
//   log2(1/delta) = c_delta * (B + L_max) * log2(n*m),
// with sketch shape from f2_shape at accuracy eta and that delta.
// Throws Error(Sizing) when no feasible (B,H) exists under the memory cap.
Params size_parameters(uint32_t n, int64_t m, double eps,
                       const SizingOverrides& ov = {});

// Words of live sketch state the tree will allocate under these params.
int64_t planned_state_words(const Params& p);

}  // namespace tsketch
