#include "tsketch/tri_framework.hpp"

#include <algorithm>
#include <cmath>

namespace tsketch {

TriFunction make_tri_function(const LossSpec& loss, TriSketchKind kind, uint32_t n,
                              int64_t m, int64_t delta_max) {
  loss.validate();
  if (kind == TriSketchKind::L1Cauchy &&
      !(loss.family == LossFamily::LpP && loss.p == 1.0))
    fail(ErrorKind::Config, "L1 sketch route only estimates the L1 norm (lp p=1)");
  TriFunction fn;
  fn.loss = loss;
  fn.sketch_kind = kind;
  fn.value_floor = 1.0 / (double(n) * double(m));
  fn.value_cap = double(n) * double(m) * double(delta_max) * double(delta_max);
  return fn;
}

int64_t tri_reset_bound(const TriFunction& fn, double kappa) {
  double beta = fn.beta();
  double shrink = (kappa - beta) / (beta + 1.0);
  if (!(shrink > 1.0)) fail(ErrorKind::Config, "tri: kappa too small for contraction");
  return int64_t(std::ceil(std::log(fn.value_cap / fn.value_floor) / std::log(shrink)));
}

TriParams size_tri(const TriFunction& fn, uint32_t n, int64_t m, double C,
                   double kappa, RunMode mode, int64_t l1_rows) {
  if (!(C > 1)) fail(ErrorKind::Config, "tri: C must be > 1");
  double beta = fn.beta();
  if (!(kappa > 2 * beta + 1))
    fail(ErrorKind::Config, "tri: kappa must exceed 2*beta + 1 = " +
                                std::to_string(2 * beta + 1));
  TriParams p;
  p.n = n;
  p.m = m;
  p.C = C;
  p.kappa = kappa;
  p.mode = mode;
  p.B = std::max<int64_t>(2, int64_t(std::ceil(std::pow(double(n), 1.0 / C))));
  uint32_t H = 1;
  while (H < 60 && std::pow(double(p.B), double(H)) < double(m)) ++H;
  p.H = H;
  p.L_max_tri = tri_reset_bound(fn, kappa);
  // rows for a (1+0.1)-accurate L1 sketch at moderate per-query confidence
  p.l1_rows = l1_rows > 0 ? l1_rows
                          : int64_t(std::ceil(8.0 * std::log(100.0) / 0.01));
  return p;
}

TriEstimator::TriEstimator(const TriFunction& fn, const TriParams& params,
                           const SeedPath& master)
    : fn_(fn), p_(params), master_(master) {
  if (p_.n < 1 || p_.m < 1) fail(ErrorKind::Config, "tri: bad dimensions");
  if (double(p_.H) * std::log(double(p_.B)) < std::log(double(p_.m)) - 1e-12)
    fail(ErrorKind::Config, "tri: B^H < m");
  if (p_.mode == RunMode::Reference) xshadow_ = FrequencyVector(p_.n);

  // level-i blocks span B^i updates; the root level H covers the stream
  span_.assign(p_.H + 1, 1);
  int64_t s = 1;
  for (uint32_t i = 1; i <= p_.H; ++i) {
    s = s > p_.m / p_.B ? p_.m + 1 : s * p_.B;
    span_[i] = s;
  }
  if (span_[p_.H] <= p_.m) span_[p_.H] = p_.m + 1;

  levels_.assign(p_.H + 1, Level{});
  for (uint32_t i = 1; i <= p_.H; ++i) {
    Level& L = levels_[i];
    L.span = span_[i];
    L.window = std::pow(p_.kappa, 3.0 * i);
    int64_t nblocks = pool_block_slots(i);
    L.slots.resize(size_t(nblocks) + 1);
    L.corrector = int(nblocks);
    for (int64_t k = 0; k <= nblocks; ++k)
      slot_init(L.slots[size_t(k)], i,
                k == nblocks ? SeedRole::Corrector : SeedRole::L1Matrix);
    L.active = 0;
    slot_activate(L.slots[0]);
    if (p_.mode == RunMode::Reference) {
      L.scope_snap.assign(p_.n, 0);
      L.block_snap.assign(p_.n, 0);
      L.v_shadow.assign(p_.n, 0.0);
    }
  }
}

int64_t TriEstimator::pool_block_slots(uint32_t level) const {
  if (fn_.sketch_kind == TriSketchKind::ExactOracle) return 1;
  if (level == p_.H) return 1;
  int64_t total_blocks = (p_.m + span_[level] - 1) / span_[level] + 1;
  return std::min(p_.B, total_blocks) + p_.pool_slack;
}

void TriEstimator::slot_init(Slot& s, uint32_t level, SeedRole role) {
  s.exact = fn_.sketch_kind == TriSketchKind::ExactOracle;
  s.n = p_.n;
  s.rows = s.exact ? p_.n : p_.l1_rows;
  s.seed = derive_seed(master_, level, seedseq_++, role);
  s.digest = s.seed.digest();
  size_t len = size_t(s.rows);
  s.accum.assign(len, 0.0);
  s.vpar.assign(len, 0.0);
  s.comb.assign(len, 0.0);
  s.q0.assign(len, 0.0);
  s.vown.assign(len, 0.0);
  s.comb_q.assign(len, 0.0);
  s.f_comb = s.f_comb_q = s.p_cache = 0;
}

void TriEstimator::slot_reset(Slot& s, uint32_t level, SeedRole role) {
  s.seed = derive_seed(master_, level, seedseq_++, role);
  s.digest = s.seed.digest();
  std::fill(s.accum.begin(), s.accum.end(), 0.0);
  std::fill(s.vpar.begin(), s.vpar.end(), 0.0);
  std::fill(s.comb.begin(), s.comb.end(), 0.0);
  std::fill(s.q0.begin(), s.q0.end(), 0.0);
  std::fill(s.vown.begin(), s.vown.end(), 0.0);
  std::fill(s.comb_q.begin(), s.comb_q.end(), 0.0);
  s.f_comb = s.f_comb_q = s.p_cache = 0;
}

double TriEstimator::cauchy_entry(const Slot& s, int64_t row, uint32_t coord) const {
  uint64_t h = mix64(s.digest, mix64(uint64_t(row), uint64_t(coord)));
  double u = (double(h >> 11) + 0.5) * 0x1.0p-53;
  return std::tan(M_PI * (u - 0.5));
}

void TriEstimator::slot_ingest(Slot& s, uint32_t a, int64_t delta) {
  if (s.exact) {
    size_t i = a - 1;
    double d = double(delta);
    s.accum[i] += d;
    double oldc = s.comb[i];
    s.comb[i] = oldc + d;
    s.f_comb += eval_loss(fn_.loss, s.comb[i]) - eval_loss(fn_.loss, oldc);
    double oldq = s.comb_q[i];
    s.comb_q[i] = oldq + d;
    s.f_comb_q += eval_loss(fn_.loss, s.comb_q[i]) - eval_loss(fn_.loss, oldq);
    return;
  }
  double d = double(delta);
  for (int64_t r = 0; r < s.rows; ++r) {
    double c = d * cauchy_entry(s, r, a);
    s.accum[size_t(r)] += c;
    s.comb[size_t(r)] += c;
    s.comb_q[size_t(r)] += c;
  }
}

double TriEstimator::feval(const Slot& s, const std::vector<double>& v) const {
  if (s.exact) return eval_loss_vec(fn_.loss, v);
  // median of |entries|: the L1 route
  std::vector<double> mag(v.size());
  for (size_t i = 0; i < v.size(); ++i) mag[i] = std::abs(v[i]);
  size_t mid = mag.size() / 2;
  std::nth_element(mag.begin(), mag.begin() + mid, mag.end());
  if (mag.size() % 2 == 1) return mag[mid];
  double hi = mag[mid];
  std::nth_element(mag.begin(), mag.begin() + mid - 1, mag.begin() + mid);
  return 0.5 * (mag[mid - 1] + hi);
}

double TriEstimator::est_scope(const Slot& s) const {
  if (s.exact) return std::max(s.f_comb, 0.0);
  return feval(s, s.comb);
}

double TriEstimator::est_query(const Slot& s) const {
  if (s.exact) return std::max(s.f_comb_q, 0.0);
  return feval(s, s.comb_q);
}

void TriEstimator::slot_rebuild(Slot& s) {
  for (size_t i = 0; i < s.comb.size(); ++i) {
    s.comb[i] = s.accum[i] + s.vpar[i];
    s.comb_q[i] = s.accum[i] + (s.vown[i] - s.q0[i]);
  }
  if (s.exact) {
    s.f_comb = eval_loss_vec(fn_.loss, s.comb);
    s.f_comb_q = eval_loss_vec(fn_.loss, s.comb_q);
  }
}

void TriEstimator::refresh_p(Slot& s) {
  std::vector<double> tmp(s.comb.size());
  for (size_t i = 0; i < tmp.size(); ++i) tmp[i] = s.vpar[i] + s.q0[i] - s.vown[i];
  s.p_cache = feval(s, tmp);
}

void TriEstimator::slot_activate(Slot& s) {
  s.q0 = s.accum;
  std::fill(s.vown.begin(), s.vown.end(), 0.0);
  slot_rebuild(s);
  refresh_p(s);
}

void TriEstimator::compute_reports(std::vector<TriLevelReport>& out) const {
  out.resize(p_.H);
  double below = 0;
  for (uint32_t i = 1; i <= p_.H; ++i) {
    const Level& L = levels_[i];
    TriLevelReport& rep = out[i - 1];
    rep.level = i;
    rep.A = est_scope(L.slots[size_t(L.corrector)]);
    rep.P = L.slots[size_t(L.active)].p_cache;
    rep.Q = i == 1 ? est_query(L.slots[size_t(L.active)]) : below;
    rep.accepted = rep.P + rep.Q <= L.window * rep.A;
    rep.reset = false;
    below = rep.accepted ? rep.P + rep.Q : rep.A;
  }
}

double TriEstimator::current_estimate() const {
  std::vector<TriLevelReport> reps;
  compute_reports(reps);
  const TriLevelReport& top = reps.back();
  return top.accepted ? top.P + top.Q : top.A;
}

double TriEstimator::envelope() const {
  return std::pow(p_.kappa, 3.0 * p_.H + 1.0);
}

TriStepResult TriEstimator::process_update(const Update& u) {
  if (aborted_) fail(ErrorKind::IterateCap, "tri: run already aborted");
  if (t_ >= p_.m) fail(ErrorKind::StreamOverrun, "tri: stream length bound reached");
  if (u.a < 1 || u.a > p_.n) fail(ErrorKind::Index, "tri: coordinate out of range");
  if (u.delta > p_.delta_max || u.delta < -p_.delta_max)
    fail(ErrorKind::Overflow, "tri: |delta| exceeds delta_max");
  if (u.t <= last_wire_t_) fail(ErrorKind::Index, "tri: time not increasing");
  last_wire_t_ = u.t;
  ++t_;
  if (p_.mode == RunMode::Reference) xshadow_.apply(u);

  for (uint32_t i = 1; i <= p_.H; ++i)
    for (auto& s : levels_[i].slots) slot_ingest(s, u.a, u.delta);

  TriStepResult res;
  res.t = t_;
  compute_reports(res.reports);
  const TriLevelReport& top = res.reports.back();
  res.estimate = top.accepted ? top.P + top.Q : top.A;

  for (uint32_t i = 1; i <= p_.H; ++i) {
    Level& L = levels_[i];
    if (res.reports[i - 1].accepted) {
      L.accepts++;
    } else {
      L.rejects++;
      apply_reset(i, res);
    }
  }

  scheduled_closes();
  return res;
}

void TriEstimator::apply_reset(uint32_t i, TriStepResult& res) {
  Level& L = levels_[i];
  // the contraction potential recharges when a block spawns with a fresh
  // iterate, so the closed-form bound caps resets within one block's life
  if (L.block_resets + 1 > p_.L_max_tri) {
    aborted_ = true;
    fail(ErrorKind::IterateCap, "tri: resets in a level-" + std::to_string(i) +
                                    " block exceed cap " +
                                    std::to_string(p_.L_max_tri));
  }
  L.resets++;
  L.block_resets++;
  L.max_block_resets = std::max(L.max_block_resets, L.block_resets);

  TriResetEvent ev;
  ev.level = i;
  ev.t = t_;
  ev.reset_count = L.block_resets;

  if (p_.mode == RunMode::Reference) {
    std::vector<double> target(p_.n), q1(p_.n);
    const std::vector<double>* vpar = i < p_.H ? &levels_[i + 1].v_shadow : nullptr;
    for (uint32_t j = 0; j < p_.n; ++j) {
      double x_now = double(xshadow_.raw()[j]);
      double blk = double(L.block_snap[j]);
      target[j] = (vpar ? (*vpar)[j] : 0.0) + (blk - double(L.scope_snap[j]));
      q1[j] = x_now - blk;
    }
    std::vector<double> d_old(p_.n), d_new(p_.n);
    for (uint32_t j = 0; j < p_.n; ++j) {
      d_old[j] = target[j] - L.v_shadow[j];
      d_new[j] = target[j] + q1[j];
    }
    ev.metric_old = eval_loss_vec(fn_.loss, d_old);
    ev.metric_new = eval_loss_vec(fn_.loss, d_new);
    for (uint32_t j = 0; j < p_.n; ++j) L.v_shadow[j] = -q1[j];
  }

  // v <- -q1 in every tracked image
  Slot& act = L.slots[size_t(L.active)];
  for (size_t k = 0; k < act.vown.size(); ++k)
    act.vown[k] = -(act.accum[k] - act.q0[k]);
  slot_rebuild(act);
  refresh_p(act);
  if (i >= 2) {
    for (auto& s : levels_[i - 1].slots) {
      for (size_t k = 0; k < s.vpar.size(); ++k) s.vpar[k] = -s.accum[k];
      slot_rebuild(s);
    }
  }

  res.events.push_back(ev);
  res.reports[i - 1].reset = true;

  // respawn the child chain
  if (i >= 2) {
    rotate_block(i - 1);
    for (int j = int(i) - 2; j >= 1; --j) reseed_level(uint32_t(j), t_ + 1);
  }
}

void TriEstimator::rotate_block(uint32_t i) {
  Level& L = levels_[i];
  L.used_in_scope++;
  int64_t nblocks = int64_t(L.slots.size()) - 1;
  L.active = int(L.used_in_scope % nblocks);
  L.block_start = t_ + 1;
  L.block_resets = 0;
  slot_activate(L.slots[size_t(L.active)]);
  if (p_.mode == RunMode::Reference) {
    std::fill(L.v_shadow.begin(), L.v_shadow.end(), 0.0);
    for (uint32_t j = 0; j < p_.n; ++j) L.block_snap[j] = xshadow_.raw()[j];
  }
}

void TriEstimator::reseed_level(uint32_t i, int64_t new_start) {
  Level& L = levels_[i];
  int64_t nblocks = int64_t(L.slots.size()) - 1;
  for (int64_t k = 0; k <= nblocks; ++k)
    slot_reset(L.slots[size_t(k)], i,
               k == nblocks ? SeedRole::Corrector : SeedRole::L1Matrix);
  L.scope_start = L.block_start = new_start;
  L.used_in_scope = 0;
  L.active = 0;
  L.block_resets = 0;
  slot_activate(L.slots[0]);
  if (p_.mode == RunMode::Reference) {
    std::fill(L.v_shadow.begin(), L.v_shadow.end(), 0.0);
    for (uint32_t j = 0; j < p_.n; ++j) {
      L.scope_snap[j] = xshadow_.raw()[j];
      L.block_snap[j] = xshadow_.raw()[j];
    }
  }
}

void TriEstimator::scheduled_closes() {
  uint32_t jmax = 0;
  for (uint32_t j = 1; j + 1 <= p_.H; ++j)
    if (t_ % span_[j] == 0) jmax = j;
  if (jmax == 0) return;
  for (uint32_t j = 1; j <= jmax; ++j) levels_[j].boundaries++;
  rotate_block(jmax);
  for (int j = int(jmax) - 1; j >= 1; --j) reseed_level(uint32_t(j), t_ + 1);
}

const FrequencyVector& TriEstimator::shadow() const {
  if (p_.mode != RunMode::Reference)
    fail(ErrorKind::Config, "tri: shadow only kept in reference mode");
  return xshadow_;
}

long double TriEstimator::true_value() const {
  const FrequencyVector& x = shadow();
  std::vector<double> v(p_.n);
  for (uint32_t j = 0; j < p_.n; ++j) v[j] = double(x.raw()[j]);
  return eval_loss_vec(fn_.loss, v);
}

int64_t TriEstimator::resets_at(uint32_t level) const {
  if (level < 1 || level > p_.H) fail(ErrorKind::Index, "resets_at: bad level");
  return levels_[level].resets;
}

int64_t TriEstimator::max_block_resets_at(uint32_t level) const {
  if (level < 1 || level > p_.H) fail(ErrorKind::Index, "resets_at: bad level");
  return levels_[level].max_block_resets;
}

}  // namespace tsketch
