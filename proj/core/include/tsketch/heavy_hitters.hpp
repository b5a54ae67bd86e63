// Robust L2 heavy hitters by deterministic coordinate probing against the
// robust F2 estimator: perturb each coordinate by +-(eps/2)*X, re-estimate,
// and threshold the moment increase at 1.15 * eps^2 * X^2.
#pragma once

#include <cstdint>
#include <vector>

#include "tsketch/robust_f2.hpp"

namespace tsketch {

struct ProbeRow {
  uint32_t i = 0;     // coordinate, 1-based
  double S2 = 0;      // estimate after +v_i
  double T2 = 0;      // estimate after -v_i
  double margin = 0;  // max(S2, T2) - X^2
  bool hit = false;
};

struct HeavyHitterReport {
  int64_t t = 0;
  double eps_hh = 0;
  double X = 0;  // norm estimate the probes were scaled by
  int64_t probe_magnitude = 0;
  std::vector<uint32_t> hits;
  std::vector<ProbeRow> probes;
  int64_t estimator_queries = 0;
};

// Probes are genuine stream updates charged against m; a full report consumes
// 3n updates (inject, flip, restore) and 2n estimator queries. Throws
// Error(Probe) when eps_hh * X < 2 (integer grid too coarse for the probe) or
// when fewer than 3n updates of stream budget remain.
HeavyHitterReport find_heavy(TreeState& state, double eps_hh);

// L2 hit set doubles as the filter output for L_p, p <= 2.
HeavyHitterReport find_heavy_lp(TreeState& state, double eps_hh, double p);

// Exact-arithmetic probe margin, unrounded: (eps/2 * X + |x_i|)^2 - x_i^2.
// Analysis-side helper for the separation tests.
double probe_margin_exact(double x_i, double X, double eps_hh);

}  // namespace tsketch
