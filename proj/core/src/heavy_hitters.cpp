#include "tsketch/heavy_hitters.hpp"

#include <cmath>

namespace tsketch {

double probe_margin_exact(double x_i, double X, double eps_hh) {
  double v = 0.5 * eps_hh * X;
  double ax = std::abs(x_i);
  return (v + ax) * (v + ax) - x_i * x_i;
}

HeavyHitterReport find_heavy(TreeState& state, double eps_hh) {
  if (!(eps_hh > 0 && eps_hh < 1))
    fail(ErrorKind::Config, "find_heavy: eps_hh must be in (0,1)");
  const Params& p = state.params();

  HeavyHitterReport rep;
  rep.t = state.time();
  rep.eps_hh = eps_hh;

  double X2 = std::max(state.current_estimate(), 0.0);
  double X = std::sqrt(X2);
  rep.X = X;

  // heaviness is undefined at zero norm; additive floor of 1
  if (X2 <= 1.0) return rep;

  if (eps_hh * X < 2.0)
    fail(ErrorKind::Probe, "find_heavy: probe magnitude below the integer grid");
  int64_t v = llround(0.5 * eps_hh * X);
  if (v > p.delta_max)
    fail(ErrorKind::Probe, "find_heavy: probe magnitude exceeds delta_max");
  if (state.time() + 3 * int64_t(p.n) > p.m)
    fail(ErrorKind::Probe, "find_heavy: not enough stream budget for 3n probes");
  rep.probe_magnitude = v;

  const double threshold = 1.15 * eps_hh * eps_hh * X2;
  int64_t wt = state.last_wire_t();

  for (uint32_t i = 1; i <= p.n; ++i) {
    ProbeRow row;
    row.i = i;
    StepResult s = state.process_update({++wt, i, v});
    row.S2 = s.estimate;
    rep.estimator_queries++;
    StepResult t = state.process_update({++wt, i, -2 * v});
    row.T2 = t.estimate;
    rep.estimator_queries++;
    state.process_update({++wt, i, v});  // restore exactly
    row.margin = std::max(row.S2, row.T2) - X2;
    row.hit = (row.S2 - X2 >= threshold) || (row.T2 - X2 >= threshold);
    if (row.hit) rep.hits.push_back(i);
    rep.probes.push_back(row);
  }
  return rep;
}

HeavyHitterReport find_heavy_lp(TreeState& state, double eps_hh, double p) {
  if (!(p > 0 && p <= 2))
    fail(ErrorKind::Config, "find_heavy_lp: p must be in (0, 2]");
  return find_heavy(state, eps_hh);
}

}  // namespace tsketch
