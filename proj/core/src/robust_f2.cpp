#include "tsketch/robust_f2.hpp"

#include <algorithm>
#include <cmath>

#include "wire.hpp"

#include "tsketch/sizing.hpp"

namespace tsketch {

namespace {

std::vector<int64_t> spans_for(const Params& p) {
  std::vector<int64_t> span(p.H + 2, 1);
  for (uint32_t i = 2; i <= p.H + 1; ++i) {
    int64_t prev = span[i - 1];
    span[i] = prev > p.m / p.B ? p.m + 1 : prev * p.B;
  }
  if (span[p.H + 1] <= p.m) span[p.H + 1] = p.m + 1;
  return span;
}

int64_t pool_slots_for(const Params& p, const std::vector<int64_t>& span,
                       uint32_t level) {
  if (p.use_exact()) return 1;
  if (level == p.H + 1) return 1;
  int64_t total_blocks = (p.m + span[level] - 1) / span[level] + 1;
  return std::min(p.B, total_blocks) + p.pool_slack;
}

}  // namespace

int64_t planned_state_words(const Params& p) {
  // mirrors the tree construction: per level, block-slot pool plus one
  // corrector; each slot holds five state arrays plus its group sums
  double per_slot = p.use_exact() ? 5.0 * p.n + 1.0
                                  : 5.0 * double(p.g) * double(p.b) + double(p.g);
  std::vector<int64_t> span = spans_for(p);
  double total = 0;
  for (uint32_t i = 1; i <= p.H + 1; ++i)
    total += double(pool_slots_for(p, span, i) + 1) * per_slot;
  if (total > 0x1.0p62) return int64_t(1) << 62;
  return int64_t(total);
}

WindowBounds window_bounds(double eta, uint32_t level) {
  WindowBounds w;
  w.lo = std::pow(1.0 - eta, 3.0 * level);
  w.hi = std::pow(1.0 + eta, 3.0 * level);
  return w;
}

double iterate_step_alpha(double P, double Q, double sigma, double eta) {
  if (Q <= 0) return 0.0;
  return std::clamp(0.25 * std::sqrt(P / Q) * sigma * eta, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// LevelSlot

void LevelSlot::init(bool exact, const SeedPath& seed, uint32_t n, F2Shape shape) {
  exact_ = exact;
  n_ = n;
  g_ = exact ? 1 : shape.g;
  b_ = exact ? 1 : shape.b;
  seed_ = seed;
  size_t len = exact ? n : size_t(shape.g * shape.b);
  if (!exact) signs_ = SignFamily(seed.digest(), shape.g * shape.b);
  accum_.assign(len, 0.0);
  vpar_.assign(len, 0.0);
  comb_.assign(len, 0.0);
  gsq_.assign(exact ? 1 : size_t(g_), 0.0);
  q0_.assign(len, 0.0);
  vown_.assign(len, 0.0);
  p_cache_ = 0;
}

void LevelSlot::reset_scope(const SeedPath& seed) {
  seed_ = seed;
  if (!exact_) signs_ = SignFamily(seed.digest(), g_ * b_);
  std::fill(accum_.begin(), accum_.end(), 0.0);
  std::fill(vpar_.begin(), vpar_.end(), 0.0);
  std::fill(comb_.begin(), comb_.end(), 0.0);
  std::fill(gsq_.begin(), gsq_.end(), 0.0);
  std::fill(q0_.begin(), q0_.end(), 0.0);
  std::fill(vown_.begin(), vown_.end(), 0.0);
  p_cache_ = 0;
}

void LevelSlot::ingest(uint32_t a, int64_t delta) {
  if (exact_) {
    size_t i = a - 1;
    double d = double(delta);
    accum_[i] += d;
    double old = comb_[i];
    comb_[i] = old + d;
    gsq_[0] += comb_[i] * comb_[i] - old * old;
    return;
  }
  const double d = double(delta);
  for (int64_t r = 0; r < g_ * b_; ++r) {
    double v = signs_.sign(r, a) > 0 ? d : -d;
    accum_[size_t(r)] += v;
    double old = comb_[size_t(r)];
    double nw = old + v;
    comb_[size_t(r)] = nw;
    gsq_[size_t(r / b_)] += nw * nw - old * old;
  }
}

void LevelSlot::rebuild_comb() {
  for (size_t i = 0; i < comb_.size(); ++i) comb_[i] = accum_[i] + vpar_[i];
  std::fill(gsq_.begin(), gsq_.end(), 0.0);
  if (exact_) {
    double acc = 0;
    for (double v : comb_) acc += v * v;
    gsq_[0] = acc;
  } else {
    for (int64_t k = 0; k < g_; ++k) {
      double acc = 0;
      const double* p = comb_.data() + k * b_;
      for (int64_t r = 0; r < b_; ++r) acc += p[r] * p[r];
      gsq_[size_t(k)] = acc;
    }
  }
}

double LevelSlot::estimate_of(const std::vector<double>& v) const {
  if (exact_) {
    double acc = 0;
    for (double x : v) acc += x * x;
    return acc;
  }
  return f2_estimate_raw(v, g_, b_);
}

double LevelSlot::scope_estimate() const {
  if (exact_) return std::max(gsq_[0], 0.0);
  std::vector<double> means(static_cast<size_t>(g_), 0.0);
  for (int64_t k = 0; k < g_; ++k)
    means[size_t(k)] = std::max(gsq_[size_t(k)], 0.0) / double(b_);
  size_t mid = means.size() / 2;
  std::nth_element(means.begin(), means.begin() + mid, means.end());
  if (means.size() % 2 == 1) return means[mid];
  double hi = means[mid];
  std::nth_element(means.begin(), means.begin() + mid - 1, means.begin() + mid);
  return 0.5 * (means[mid - 1] + hi);
}

void LevelSlot::refresh_p() {
  std::vector<double> tmp(comb_.size());
  for (size_t i = 0; i < tmp.size(); ++i) tmp[i] = vpar_[i] + q0_[i] - vown_[i];
  p_cache_ = estimate_of(tmp);
}

void LevelSlot::activate() {
  q0_ = accum_;
  std::fill(vown_.begin(), vown_.end(), 0.0);
  rebuild_comb();
  refresh_p();
}

void LevelSlot::apply_parent_iterate(double s1, double s2) {
  for (size_t i = 0; i < vpar_.size(); ++i)
    vpar_[i] = s1 * vpar_[i] + s2 * accum_[i];
  rebuild_comb();
}

void LevelSlot::apply_own_iterate(double s1, double s2) {
  for (size_t i = 0; i < vown_.size(); ++i)
    vown_[i] = s1 * vown_[i] + s2 * (accum_[i] - q0_[i]);
  refresh_p();
}

void LevelSlot::apply_own_iterate_single(double s1, double s2, uint32_t a,
                                         int64_t delta) {
  if (exact_) {
    for (double& v : vown_) v *= s1;
    vown_[a - 1] += s2 * double(delta);
    return;
  }
  for (int64_t r = 0; r < g_ * b_; ++r) {
    double col = signs_.sign(r, a) > 0 ? double(delta) : -double(delta);
    vown_[size_t(r)] = s1 * vown_[size_t(r)] + s2 * col;
  }
}

int64_t LevelSlot::state_words() const {
  return int64_t(accum_.size() + vpar_.size() + comb_.size() + gsq_.size() +
                 q0_.size() + vown_.size());
}

void LevelSlot::serialize(std::ostream& out) const {
  wire::put_u64(out, exact_ ? 1 : 0);
  wire::put_u64(out, n_);
  wire::put_i64(out, g_);
  wire::put_i64(out, b_);
  wire::put_u64(out, seed_.master_seed);
  wire::put_u64(out, seed_.path.size());
  for (const auto& s : seed_.path) {
    wire::put_u64(out, s.level);
    wire::put_i64(out, s.ordinal);
    wire::put_u64(out, uint64_t(s.role));
  }
  wire::put_f64_vec(out, accum_);
  wire::put_f64_vec(out, vpar_);
  wire::put_f64_vec(out, comb_);
  wire::put_f64_vec(out, gsq_);
  wire::put_f64_vec(out, q0_);
  wire::put_f64_vec(out, vown_);
  wire::put_f64(out, p_cache_);
}

void LevelSlot::deserialize(std::istream& in) {
  exact_ = wire::get_u64(in) != 0;
  n_ = uint32_t(wire::get_u64(in));
  g_ = wire::get_i64(in);
  b_ = wire::get_i64(in);
  seed_.master_seed = wire::get_u64(in);
  seed_.path.clear();
  uint64_t plen = wire::get_u64(in);
  for (uint64_t i = 0; i < plen; ++i) {
    SeedPath::Segment s;
    s.level = uint32_t(wire::get_u64(in));
    s.ordinal = wire::get_i64(in);
    s.role = SeedRole(wire::get_u64(in));
    seed_.path.push_back(s);
  }
  if (!exact_) signs_ = SignFamily(seed_.digest(), g_ * b_);
  accum_ = wire::get_f64_vec(in);
  vpar_ = wire::get_f64_vec(in);
  comb_ = wire::get_f64_vec(in);
  gsq_ = wire::get_f64_vec(in);
  q0_ = wire::get_f64_vec(in);
  vown_ = wire::get_f64_vec(in);
  p_cache_ = wire::get_f64(in);
}

// ---------------------------------------------------------------------------
// TreeState

TreeState::TreeState(const Params& params, const SeedPath& master)
    : p_(params), master_(master) {
  p_.validate();
  exact_ = p_.use_exact();
  shape_ = F2Shape{p_.g, p_.b};
  if (!exact_) {
    double words = double(p_.g) * double(p_.b);
    if (words > double(p_.memory_cap_words))
      fail(ErrorKind::Sizing, "tree: randomized sketch shape exceeds memory cap");
  }
  if (p_.mode == RunMode::Reference) xshadow_ = FrequencyVector(p_.n);
  build_levels();
}

int64_t TreeState::pool_block_slots(uint32_t level) const {
  return pool_slots_for(p_, span_, level);
}

SeedPath TreeState::slot_seed(uint32_t level, int64_t seq, SeedRole role) const {
  return derive_seed(master_, level, seq, role);
}

void TreeState::build_levels() {
  span_ = spans_for(p_);
  levels_.assign(p_.H + 2, Level{});
  for (uint32_t i = 1; i <= p_.H + 1; ++i) {
    Level& L = levels_[i];
    L.span = span_[i];
    WindowBounds w = window_bounds(p_.eta, i);
    L.window_lo = w.lo;
    L.window_hi = w.hi;
    int64_t nblocks = pool_block_slots(i);
    L.slots.resize(size_t(nblocks) + 1);
    L.corrector = int(nblocks);
    for (int64_t s = 0; s <= nblocks; ++s) {
      SeedRole role = s == nblocks ? SeedRole::Corrector : SeedRole::BlockMatrix;
      L.slots[size_t(s)].init(exact_, slot_seed(i, L.seed_seq++, role), p_.n, shape_);
    }
    L.active = 0;
    L.slots[0].activate();
    if (p_.mode == RunMode::Reference) {
      L.scope_snap.assign(p_.n, 0);
      L.block_snap.assign(p_.n, 0);
      L.v_shadow.assign(p_.n, 0.0);
    }
  }
}

double TreeState::grid(double x) const {
  double scaled = x / p_.precision_scale;
  if (std::abs(scaled) > 0x1.0p62) fail(ErrorKind::Overflow, "step size overflow");
  return double(std::llround(scaled)) * p_.precision_scale;
}

void TreeState::compute_reports(std::vector<LevelReport>& out) const {
  out.resize(p_.H + 1);
  double below = 0;
  for (uint32_t i = 1; i <= p_.H + 1; ++i) {
    const Level& L = levels_[i];
    LevelReport& rep = out[i - 1];
    rep.level = i;
    rep.A = L.slots[size_t(L.corrector)].scope_estimate();
    if (i == 1) {
      rep.P = 0;
      rep.Q = L.slots[size_t(L.active)].scope_estimate();
    } else {
      rep.P = L.slots[size_t(L.active)].p_value();
      rep.Q = below;
    }
    double sum = rep.P + rep.Q;
    rep.accepted = sum >= L.window_lo * rep.A && sum <= L.window_hi * rep.A;
    rep.iterate_updated = false;
    below = rep.accepted ? sum : rep.A;
  }
}

double TreeState::current_estimate() const {
  std::vector<LevelReport> reps;
  compute_reports(reps);
  const LevelReport& top = reps.back();
  return top.accepted ? top.P + top.Q : top.A;
}

StepResult TreeState::process_update(const Update& u) {
  if (aborted_) fail(ErrorKind::IterateCap, "tree: run already aborted");
  if (t_ >= p_.m) fail(ErrorKind::StreamOverrun, "tree: stream length bound reached");
  if (u.a < 1 || u.a > p_.n) fail(ErrorKind::Index, "tree: coordinate out of range");
  if (u.delta > p_.delta_max || u.delta < -p_.delta_max)
    fail(ErrorKind::Overflow, "tree: |delta| exceeds delta_max");
  if (u.t <= last_wire_t_)
    fail(ErrorKind::Index, "tree: time index not strictly increasing");
  last_wire_t_ = u.t;
  ++t_;

  if (p_.mode == RunMode::Reference) xshadow_.apply(u);

  for (uint32_t i = 1; i <= p_.H + 1; ++i)
    for (auto& slot : levels_[i].slots) slot.ingest(u.a, u.delta);

  StepResult res;
  res.t = t_;
  compute_reports(res.reports);
  const LevelReport& top = res.reports.back();
  res.estimate = top.accepted ? top.P + top.Q : top.A;
  for (uint32_t i = 1; i <= p_.H + 1; ++i) {
    if (res.reports[i - 1].accepted) {
      res.accepted_mask |= (1u << (i - 1));
      levels_[i].bot++;
    } else {
      levels_[i].top++;
    }
  }

  for (uint32_t i = 1; i <= p_.H + 1; ++i)
    if (!res.reports[i - 1].accepted) maintain_iter(i, res.reports[i - 1], res, u);

  scheduled_closes(res);
  return res;
}

void TreeState::maintain_iter(uint32_t i, const LevelReport& rep, StepResult& res,
                              const Update& u) {
  Level& L = levels_[i];
  IterateEvent ev;
  ev.level = i;
  ev.t = t_;

  if (rep.Q <= 0) {
    L.q_zero++;
    ev.alpha = 0;
    ev.applied = false;
    ev.update_count = L.ledger.update_count;
    res.events.push_back(ev);
    return;
  }

  double sigma = rep.A >= rep.P + rep.Q ? 1.0 : -1.0;
  double a = grid(iterate_step_alpha(rep.P, rep.Q, sigma, p_.eta));
  if (a == 0.0) {
    L.alpha_zero++;
    ev.alpha = 0;
    ev.applied = false;
    ev.update_count = L.ledger.update_count;
    res.events.push_back(ev);
    return;
  }

  if (L.ledger.update_count + 1 > p_.L_max) {
    aborted_ = true;
    fail(ErrorKind::IterateCap,
         "tree: iterate updates at level " + std::to_string(i) + " exceed L_max=" +
             std::to_string(p_.L_max));
  }

  const double s1 = 1.0 + a, s2 = a;
  for (auto& e : L.ledger.entries) {
    e.weight *= s1;
    if (std::abs(e.weight) > p_.magnitude_cap)
      fail(ErrorKind::Overflow, "tree: ledger coefficient exceeds magnitude cap");
  }
  if (std::abs(a) > p_.magnitude_cap)
    fail(ErrorKind::Overflow, "tree: ledger coefficient exceeds magnitude cap");
  L.ledger.entries.push_back({L.block_start, t_, a});
  L.ledger.update_count++;
  L.max_update_count = std::max(L.max_update_count, L.ledger.update_count);

  if (p_.mode == RunMode::Reference) {
    // T = parent iterate + q0; level-1 blocks span this single update
    const uint32_t n = p_.n;
    std::vector<long double> target(n), q1(n);
    const std::vector<double>* vpar =
        i < p_.H + 1 ? &levels_[i + 1].v_shadow : nullptr;
    for (uint32_t j = 0; j < n; ++j) {
      long double x_now = xshadow_.raw()[j];
      long double blk = i == 1 ? x_now - (j == u.a - 1 ? u.delta : 0)
                               : (long double)L.block_snap[j];
      target[j] = (vpar ? (*vpar)[j] : 0.0L) + (blk - L.scope_snap[j]);
      q1[j] = x_now - blk;
    }
    long double mo = 0, mn = 0;
    for (uint32_t j = 0; j < n; ++j) {
      long double d0 = target[j] - L.v_shadow[j];
      long double v1 = s1 * L.v_shadow[j] + s2 * (double)q1[j];
      long double d1 = target[j] - v1;
      mo += d0 * d0;
      mn += d1 * d1;
    }
    ev.metric_old = mo;
    ev.metric_new = mn;
    for (uint32_t j = 0; j < n; ++j)
      L.v_shadow[j] = s1 * L.v_shadow[j] + s2 * double(q1[j]);
  }

  if (i == 1)
    L.slots[size_t(L.active)].apply_own_iterate_single(s1, s2, u.a, u.delta);
  else
    L.slots[size_t(L.active)].apply_own_iterate(s1, s2);
  if (i >= 2)
    for (auto& slot : levels_[i - 1].slots) slot.apply_parent_iterate(s1, s2);

  ev.alpha = a;
  ev.applied = true;
  ev.update_count = L.ledger.update_count;
  res.events.push_back(ev);
  res.reports[i - 1].iterate_updated = true;

  respawn_below(i);
}

void TreeState::rotate_block(uint32_t i) {
  Level& L = levels_[i];
  L.used_in_scope++;
  int64_t nblocks = int64_t(L.slots.size()) - 1;
  if (!exact_ && L.used_in_scope >= nblocks) L.recycles++;
  L.active = int(L.used_in_scope % nblocks);
  L.block_start = t_ + 1;
  L.ledger.reset();
  L.children_completed = 0;
  L.slots[size_t(L.active)].activate();
  if (p_.mode == RunMode::Reference) {
    std::fill(L.v_shadow.begin(), L.v_shadow.end(), 0.0);
    for (uint32_t j = 0; j < p_.n; ++j) L.block_snap[j] = xshadow_.raw()[j];
  }
}

void TreeState::reseed_level(uint32_t i, int64_t new_start) {
  Level& L = levels_[i];
  int64_t nblocks = int64_t(L.slots.size()) - 1;
  for (int64_t s = 0; s <= nblocks; ++s) {
    SeedRole role = s == nblocks ? SeedRole::Corrector : SeedRole::BlockMatrix;
    L.slots[size_t(s)].reset_scope(slot_seed(i, L.seed_seq++, role));
  }
  L.scope_start = new_start;
  L.block_start = new_start;
  L.used_in_scope = 0;
  L.active = 0;
  L.children_completed = 0;
  L.ledger.reset();
  L.slots[0].activate();
  if (p_.mode == RunMode::Reference) {
    std::fill(L.v_shadow.begin(), L.v_shadow.end(), 0.0);
    for (uint32_t j = 0; j < p_.n; ++j) {
      L.scope_snap[j] = xshadow_.raw()[j];
      L.block_snap[j] = xshadow_.raw()[j];
    }
  }
}

void TreeState::respawn_below(uint32_t i) {
  if (i < 2) return;
  rotate_block(i - 1);
  for (int j = int(i) - 2; j >= 1; --j) reseed_level(uint32_t(j), t_ + 1);
}

void TreeState::scheduled_closes(StepResult& res) {
  uint32_t jmax = 0;
  for (uint32_t j = 1; j <= p_.H; ++j)
    if (t_ % span_[j] == 0) jmax = j;
  if (jmax == 0) return;

  for (uint32_t j = 1; j <= jmax; ++j) levels_[j].boundaries++;
  levels_[jmax + 1].children_completed++;
  res.boundary_level = jmax;

  rotate_block(jmax);
  for (int j = int(jmax) - 1; j >= 1; --j) reseed_level(uint32_t(j), t_ + 1);
}

const FrequencyVector& TreeState::shadow() const {
  if (p_.mode != RunMode::Reference)
    fail(ErrorKind::Config, "tree: shadow only kept in reference mode");
  return xshadow_;
}

long double TreeState::true_f2() const { return shadow().f2(); }

SpaceReport TreeState::space_report() const {
  SpaceReport rep;
  for (uint32_t i = 1; i <= p_.H + 1; ++i) {
    const Level& L = levels_[i];
    SpaceLevelRow row;
    row.level = i;
    row.slots = int64_t(L.slots.size());
    for (const auto& s : L.slots) row.state_words += s.state_words();
    row.ledger_entries = int64_t(L.ledger.entries.size());
    row.counter_words = 12;  // scalars tracked per level
    rep.rows.push_back(row);
    rep.state_words += row.state_words;
    rep.ledger_entries += row.ledger_entries;
    rep.counter_words += row.counter_words;
  }
  return rep;
}

TreeState::LevelCounters TreeState::counters(uint32_t level) const {
  if (level < 1 || level > p_.H + 1) fail(ErrorKind::Index, "counters: bad level");
  const Level& L = levels_[level];
  LevelCounters c;
  c.top = L.top;
  c.bot = L.bot;
  c.boundaries = L.boundaries;
  c.alpha_zero = L.alpha_zero;
  c.q_zero = L.q_zero;
  c.recycles = L.recycles;
  c.max_update_count = L.max_update_count;
  c.ledger_entries = int64_t(L.ledger.entries.size());
  return c;
}

// ---------------------------------------------------------------------------
// checkpointing

namespace {
constexpr uint64_t kTreeMagic = 0x5453544b54524545ULL;  // "TSTKTREE"
constexpr uint64_t kTreeVersion = 1;
}  // namespace

void TreeState::serialize(std::ostream& out) const {
  wire::put_u64(out, kTreeMagic);
  wire::put_u64(out, kTreeVersion);
  wire::put_u64(out, p_.n);
  wire::put_i64(out, p_.m);
  wire::put_f64(out, p_.eps);
  wire::put_i64(out, p_.B);
  wire::put_u64(out, p_.H);
  wire::put_f64(out, p_.eta);
  wire::put_i64(out, p_.L_max);
  wire::put_i64(out, p_.g);
  wire::put_i64(out, p_.b);
  wire::put_f64(out, p_.log2_inv_delta);
  wire::put_f64(out, p_.precision_scale);
  wire::put_f64(out, p_.magnitude_cap);
  wire::put_i64(out, p_.delta_max);
  wire::put_u64(out, p_.mode == RunMode::Reference ? 1 : 0);
  wire::put_u64(out, uint64_t(p_.realization));
  wire::put_i64(out, p_.pool_slack);
  wire::put_i64(out, p_.memory_cap_words);
  wire::put_f64(out, p_.c_B);
  wire::put_f64(out, p_.c_L);
  wire::put_f64(out, p_.c_delta);
  wire::put_f64(out, p_.c_b);
  wire::put_f64(out, p_.c_g);
  wire::put_u64(out, master_.master_seed);
  wire::put_i64(out, t_);
  wire::put_i64(out, last_wire_t_);
  wire::put_u64(out, aborted_ ? 1 : 0);
  for (uint32_t i = 1; i <= p_.H + 1; ++i) {
    const Level& L = levels_[i];
    wire::put_i64(out, L.span);
    wire::put_u64(out, uint64_t(L.corrector));
    wire::put_u64(out, uint64_t(L.active));
    wire::put_i64(out, L.used_in_scope);
    wire::put_i64(out, L.scope_start);
    wire::put_i64(out, L.block_start);
    wire::put_i64(out, L.seed_seq);
    wire::put_i64(out, L.children_completed);
    wire::put_i64(out, L.top);
    wire::put_i64(out, L.bot);
    wire::put_i64(out, L.boundaries);
    wire::put_i64(out, L.alpha_zero);
    wire::put_i64(out, L.q_zero);
    wire::put_i64(out, L.recycles);
    wire::put_i64(out, L.max_update_count);
    wire::put_i64(out, L.ledger.update_count);
    wire::put_u64(out, L.ledger.entries.size());
    for (const auto& e : L.ledger.entries) {
      wire::put_i64(out, e.seg_start);
      wire::put_i64(out, e.seg_end);
      wire::put_f64(out, e.weight);
    }
    wire::put_u64(out, L.slots.size());
    for (const auto& s : L.slots) s.serialize(out);
    if (p_.mode == RunMode::Reference) {
      wire::put_i64_vec(out, L.scope_snap);
      wire::put_i64_vec(out, L.block_snap);
      wire::put_f64_vec(out, L.v_shadow);
    }
  }
  if (p_.mode == RunMode::Reference) wire::put_i64_vec(out, xshadow_.raw());
}

TreeState TreeState::deserialize(std::istream& in) {
  if (wire::get_u64(in) != kTreeMagic) fail(ErrorKind::Io, "bad checkpoint magic");
  if (wire::get_u64(in) != kTreeVersion)
    fail(ErrorKind::Io, "unsupported checkpoint version");
  TreeState ts;
  Params& p = ts.p_;
  p.n = uint32_t(wire::get_u64(in));
  p.m = wire::get_i64(in);
  p.eps = wire::get_f64(in);
  p.B = wire::get_i64(in);
  p.H = uint32_t(wire::get_u64(in));
  p.eta = wire::get_f64(in);
  p.L_max = wire::get_i64(in);
  p.g = wire::get_i64(in);
  p.b = wire::get_i64(in);
  p.log2_inv_delta = wire::get_f64(in);
  p.precision_scale = wire::get_f64(in);
  p.magnitude_cap = wire::get_f64(in);
  p.delta_max = wire::get_i64(in);
  p.mode = wire::get_u64(in) ? RunMode::Reference : RunMode::Streaming;
  p.realization = SketchRealization(wire::get_u64(in));
  p.pool_slack = wire::get_i64(in);
  p.memory_cap_words = wire::get_i64(in);
  p.c_B = wire::get_f64(in);
  p.c_L = wire::get_f64(in);
  p.c_delta = wire::get_f64(in);
  p.c_b = wire::get_f64(in);
  p.c_g = wire::get_f64(in);
  ts.master_.master_seed = wire::get_u64(in);
  ts.t_ = wire::get_i64(in);
  ts.last_wire_t_ = wire::get_i64(in);
  ts.aborted_ = wire::get_u64(in) != 0;
  ts.exact_ = p.use_exact();
  ts.shape_ = F2Shape{p.g, p.b};

  ts.span_ = spans_for(p);
  ts.levels_.assign(p.H + 2, Level{});
  for (uint32_t i = 1; i <= p.H + 1; ++i) {
    Level& L = ts.levels_[i];
    L.span = wire::get_i64(in);
    WindowBounds w = window_bounds(p.eta, i);
    L.window_lo = w.lo;
    L.window_hi = w.hi;
    L.corrector = int(wire::get_u64(in));
    L.active = int(wire::get_u64(in));
    L.used_in_scope = wire::get_i64(in);
    L.scope_start = wire::get_i64(in);
    L.block_start = wire::get_i64(in);
    L.seed_seq = wire::get_i64(in);
    L.children_completed = wire::get_i64(in);
    L.top = wire::get_i64(in);
    L.bot = wire::get_i64(in);
    L.boundaries = wire::get_i64(in);
    L.alpha_zero = wire::get_i64(in);
    L.q_zero = wire::get_i64(in);
    L.recycles = wire::get_i64(in);
    L.max_update_count = wire::get_i64(in);
    L.ledger.update_count = wire::get_i64(in);
    uint64_t ne = wire::get_u64(in);
    for (uint64_t k = 0; k < ne; ++k) {
      LedgerEntry e;
      e.seg_start = wire::get_i64(in);
      e.seg_end = wire::get_i64(in);
      e.weight = wire::get_f64(in);
      L.ledger.entries.push_back(e);
    }
    uint64_t nslots = wire::get_u64(in);
    L.slots.resize(nslots);
    for (auto& s : L.slots) s.deserialize(in);
    if (p.mode == RunMode::Reference) {
      L.scope_snap = wire::get_i64_vec(in);
      L.block_snap = wire::get_i64_vec(in);
      L.v_shadow = wire::get_f64_vec(in);
    }
  }
  if (p.mode == RunMode::Reference) {
    ts.xshadow_ = FrequencyVector(p.n);
    ts.xshadow_.raw() = wire::get_i64_vec(in);
  }
  return ts;
}

}  // namespace tsketch
