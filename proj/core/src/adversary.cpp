#include "tsketch/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <unordered_map>
#include <ostream>

#include "wire.hpp"

namespace tsketch {

RobustF2Algo::RobustF2Algo(const Params& params, const SeedPath& master)
    : tree_(params, master) {}

double RobustF2Algo::process(const Update& u) {
  StepResult r = tree_.process_update(u);
  last_flags_ = r.accepted_mask;
  for (auto& e : r.events) pending_.push_back(e);
  // level-1 blocks are single updates and close every step; only closes of
  // real aggregation levels are transcript events
  if (r.boundary_level > 1)
    pending_boundaries_.push_back({r.t, uint32_t(r.boundary_level)});
  return r.estimate;
}

void RobustF2Algo::drain_events(std::vector<IterateEvent>& out) {
  for (auto& e : pending_) out.push_back(e);
  pending_.clear();
}

void RobustF2Algo::drain_boundaries(std::vector<BoundaryEvent>& out) {
  for (auto& b : pending_boundaries_) out.push_back(b);
  pending_boundaries_.clear();
}

NaiveMeanAms::NaiveMeanAms(const SeedPath& seed, uint32_t n, int64_t k)
    : sk_(seed, n, F2Shape{1, k}), k_(k) {}

double NaiveMeanAms::process(const Update& u) {
  sk_.update(u);
  return query();
}

double NaiveMeanAms::query() const {
  // single group: the estimate is exactly the raw mean (1/k)||Ax||^2
  return sk_.estimate();
}

// ---------------------------------------------------------------------------
// strategies

namespace {

class ObliviousRandom : public AdversaryStrategy {
 public:
  ObliviousRandom(uint32_t n, uint64_t seed, int64_t range)
      : n_(n), rng_(mix64(seed, 0x0b1f)), range_(std::max<int64_t>(range, 1)) {}

  std::optional<Update> next(const GameTranscript& g) override {
    int64_t t = int64_t(g.steps.size()) + 1;
    uint32_t a = uint32_t(rng_.next_below(n_)) + 1;
    int64_t d = int64_t(rng_.next_below(uint64_t(range_))) + 1;
    if (rng_.next() & 1) d = -d;
    return Update{t, a, d};
  }
  std::string kind() const override { return "oblivious_random"; }

 private:
  uint32_t n_;
  Rng64 rng_;
  int64_t range_;
};

// Inserts a batch on random coordinates, then deletes it exactly, repeatedly
// driving the frequency vector back toward zero.
class DeletionHeavy : public AdversaryStrategy {
 public:
  DeletionHeavy(uint32_t n, uint64_t seed, int64_t range)
      : n_(n), rng_(mix64(seed, 0xde1e)), range_(std::max<int64_t>(range, 1)) {}

  std::optional<Update> next(const GameTranscript& g) override {
    int64_t t = int64_t(g.steps.size()) + 1;
    if (pending_deletes_.empty()) {
      if (batch_left_ == 0) batch_left_ = 1 + int64_t(rng_.next_below(32));
      uint32_t a = uint32_t(rng_.next_below(n_)) + 1;
      int64_t d = int64_t(rng_.next_below(uint64_t(range_))) + 1;
      if (rng_.next() & 1) d = -d;
      inserted_.push_back({a, d});
      if (--batch_left_ == 0) {
        pending_deletes_ = inserted_;
        inserted_.clear();
      }
      return Update{t, a, d};
    }
    auto [a, d] = pending_deletes_.back();
    pending_deletes_.pop_back();
    return Update{t, a, -d};
  }
  std::string kind() const override { return "deletion_heavy"; }

 private:
  uint32_t n_;
  Rng64 rng_;
  int64_t range_;
  int64_t batch_left_ = 0;
  std::vector<std::pair<uint32_t, int64_t>> inserted_;
  std::vector<std::pair<uint32_t, int64_t>> pending_deletes_;
};

// Probes coordinate pairs for response bias against a private shadow, then
// pushes the worst pair. Every move it makes is its own, so the shadow is
// exact by bookkeeping.
class AlignmentAttack : public AdversaryStrategy {
 public:
  AlignmentAttack(uint32_t n, uint64_t seed, double eps, int64_t c)
      : n_(n), eps_(eps), c_(c), rng_(mix64(seed, 0xa116)) {}

  std::optional<Update> next(const GameTranscript& g) override {
    int64_t t = int64_t(g.steps.size()) + 1;
    if (!g.steps.empty()) observe(g.steps.back());
    if (broke_) return std::nullopt;

    // phase 0: small random warmup prefix
    if (warmup_left_ < 0) warmup_left_ = 128;
    if (warmup_left_ > 0) {
      --warmup_left_;
      uint32_t a = uint32_t(rng_.next_below(n_)) + 1;
      int64_t d = 1 + int64_t(rng_.next_below(16));
      return emit(t, a, (rng_.next() & 1) ? d : -d);
    }

    // phase 1: probe pairs with four updates each: +c@i, +c@j, -c@j, -c@i
    if (probes_done_ < probe_budget()) {
      switch (probe_phase_) {
        case 0:
          pi_ = uint32_t(rng_.next_below(n_)) + 1;
          do {
            pj_ = uint32_t(rng_.next_below(n_)) + 1;
          } while (pj_ == pi_);
          probe_phase_ = 1;
          return emit(t, pi_, c_);
        case 1:
          probe_phase_ = 2;
          return emit(t, pj_, c_);
        case 2: {
          probe_phase_ = 3;
          return emit(t, pj_, -c_);
        }
        default:
          probe_phase_ = 0;
          probes_done_++;
          return emit(t, pi_, -c_);
      }
    }

    // phase 2: pile mass on the most under-estimated pair
    if (push_i_ == 0) {
      push_i_ = worst_i_ ? worst_i_ : 1;
      push_j_ = worst_j_ ? worst_j_ : 2;
      push_sign_ = worst_sign_;
    }
    if (push_flip_) {
      push_flip_ = false;
      return emit(t, push_j_, push_sign_ * c_);
    }
    push_flip_ = true;
    return emit(t, push_i_, c_);
  }

  std::string kind() const override { return "alignment_attack"; }

 private:
  int64_t probe_budget() const { return std::min<int64_t>(600, n_ * 2); }

  Update emit(int64_t t, uint32_t a, int64_t d) {
    shadow_sq_ += 2.0 * double(shadow_val(a)) * double(d) + double(d) * double(d);
    shadow_[a] += d;
    return Update{t, a, d};
  }

  int64_t shadow_val(uint32_t a) const {
    auto it = shadow_.find(a);
    return it == shadow_.end() ? 0 : it->second;
  }

  void observe(const GameStep& s) {
    double truth = shadow_sq_;
    double denom = std::max(truth, 1.0);
    double rel = std::abs(s.response - truth) / denom;
    if (rel > eps_) broke_ = true;
    // record bias after the second insert of a probe (phase 2 observation)
    if (probe_phase_ == 2 && truth > 0) {
      double ratio = s.response / truth;
      if (ratio < worst_ratio_) {
        worst_ratio_ = ratio;
        worst_i_ = pi_;
        worst_j_ = pj_;
        worst_sign_ = 1;
      }
      // an over-estimate on (i, +j) is an under-estimate on (i, -j)
      double over = ratio - 1.0;
      if (1.0 - over < worst_ratio_) {
        worst_ratio_ = 1.0 - over;
        worst_i_ = pi_;
        worst_j_ = pj_;
        worst_sign_ = -1;
      }
    }
  }

  uint32_t n_;
  double eps_;
  int64_t c_;
  Rng64 rng_;
  std::unordered_map<uint32_t, int64_t> shadow_;
  double shadow_sq_ = 0;
  bool broke_ = false;
  int64_t warmup_left_ = -1;
  int probe_phase_ = 0;
  int64_t probes_done_ = 0;
  uint32_t pi_ = 0, pj_ = 0;
  double worst_ratio_ = 2.0;
  uint32_t worst_i_ = 0, worst_j_ = 0;
  int worst_sign_ = 1;
  int push_sign_ = 1;
  uint32_t push_i_ = 0, push_j_ = 0;
  bool push_flip_ = false;
};

}  // namespace

std::unique_ptr<AdversaryStrategy> make_oblivious_random(uint32_t n, uint64_t seed,
                                                         int64_t delta_range) {
  return std::make_unique<ObliviousRandom>(n, seed, delta_range);
}

std::unique_ptr<AdversaryStrategy> make_deletion_heavy(uint32_t n, uint64_t seed,
                                                       int64_t delta_range) {
  return std::make_unique<DeletionHeavy>(n, seed, delta_range);
}

std::unique_ptr<AdversaryStrategy> make_alignment_attack(uint32_t n, uint64_t seed,
                                                         double eps,
                                                         int64_t probe_magnitude) {
  return std::make_unique<AlignmentAttack>(n, seed, eps, probe_magnitude);
}

std::unique_ptr<AdversaryStrategy> make_strategy(const std::string& kind, uint32_t n,
                                                 uint64_t seed, double eps) {
  if (kind == "oblivious_random") return make_oblivious_random(n, seed);
  if (kind == "deletion_heavy") return make_deletion_heavy(n, seed);
  if (kind == "alignment_attack") return make_alignment_attack(n, seed, eps);
  fail(ErrorKind::Config, "unknown adversary kind: " + kind);
}

// ---------------------------------------------------------------------------

GameTranscript run_game(StreamAlgo& algo, AdversaryStrategy& strategy, int64_t m,
                        double eps, uint32_t n) {
  GameTranscript g;
  g.adversary = strategy.kind();
  g.algorithm = algo.name();
  g.eps = eps;

  FrequencyVector truth(n);
  long double f2 = 0;

  for (int64_t t = 1; t <= m; ++t) {
    std::optional<Update> mu = strategy.next(g);
    if (!mu) break;
    Update u = *mu;
    // exact incremental F2 of the true vector
    int64_t before = u.a >= 1 && u.a <= n ? truth.raw()[u.a - 1] : 0;
    truth.apply(u);
    f2 += 2.0L * before * u.delta + 1.0L * u.delta * u.delta;

    GameStep step;
    step.u = u;
    step.truth = f2;
    try {
      step.response = algo.process(u);
    } catch (const Error& e) {
      g.verdict.algorithm_failed = true;
      g.verdict.failure = e.what();
      g.steps.push_back(step);
      break;
    }
    step.flags = algo.last_flags();
    g.steps.push_back(step);

    long double denom = f2 > 1.0L ? f2 : 1.0L;
    double rel = double(std::abs((long double)step.response - f2) / denom);
    g.verdict.max_rel_err = std::max(g.verdict.max_rel_err, rel);
    if (rel > eps && g.verdict.break_time < 0) g.verdict.break_time = t;
  }

  algo.drain_events(g.events);
  if (auto* robust = dynamic_cast<RobustF2Algo*>(&algo))
    robust->drain_boundaries(g.boundaries);
  for (const auto& e : g.events) {
    if (!e.applied) continue;
    g.verdict.iterate_updates++;
    g.verdict.max_block_updates = std::max(g.verdict.max_block_updates, e.update_count);
  }
  return g;
}

// ---------------------------------------------------------------------------
// gram attack

namespace {

// kernel vector of a symmetric PSD n x n matrix by diagonal-pivot
// elimination (for PSD the largest remaining entry sits on the diagonal);
// returns empty when numerically full rank
std::vector<double> kernel_vector(std::vector<std::vector<double>> a, int64_t& rank_out) {
  size_t n = a.size();
  double scale = 1e-12;
  for (auto& row : a)
    for (double v : row) scale = std::max(scale, std::abs(v));
  double tol = scale * double(n) * 1e-9;

  std::vector<size_t> col_of(n);
  for (size_t i = 0; i < n; ++i) col_of[i] = i;
  size_t r = 0;
  for (; r < n; ++r) {
    size_t piv = r;
    double best = 0;
    for (size_t j = r; j < n; ++j)
      if (std::abs(a[j][j]) > best) {
        best = std::abs(a[j][j]);
        piv = j;
      }
    if (best <= tol) break;
    std::swap(a[r], a[piv]);
    for (size_t i = 0; i < n; ++i) std::swap(a[i][r], a[i][piv]);
    std::swap(col_of[r], col_of[piv]);
    for (size_t i = r + 1; i < n; ++i) {
      double f = a[i][r] / a[r][r];
      for (size_t j = r; j < n; ++j) a[i][j] -= f * a[r][j];
    }
  }
  rank_out = int64_t(r);
  if (r >= n) return {};

  // free variable = column r; back-substitute the pivot block
  std::vector<double> y(n, 0.0);
  y[r] = 1.0;
  for (size_t i = r; i-- > 0;) {
    double s = a[i][r];  // coefficient of the free column
    for (size_t j = i + 1; j < r; ++j) s += a[i][j] * y[j];
    y[i] = -s / a[i][i];
  }
  std::vector<double> u(n, 0.0);
  for (size_t i = 0; i < n; ++i) u[col_of[i]] = y[i];
  double norm = 0;
  for (double v : u) norm = std::max(norm, std::abs(v));
  for (double& v : u) v /= norm;
  return u;
}

}  // namespace

BreakCertificate gram_attack(StreamAlgo& oracle, uint32_t n, int64_t k,
                             int64_t magnitude) {
  if (n < 2) fail(ErrorKind::Attack, "gram_attack: n must be >= 2");
  BreakCertificate cert;
  int64_t wt = 0;
  FrequencyVector shadow(n);
  long double f2 = 0;

  auto push = [&](uint32_t a, int64_t d) {
    int64_t before = shadow.raw()[a - 1];
    shadow.apply({wt + 1, a, d});
    f2 += 2.0L * before * d + 1.0L * d * d;
    double r = oracle.process({++wt, a, d});
    long double denom = f2 > 1.0L ? f2 : 1.0L;
    cert.max_probe_rel_err = std::max(
        cert.max_probe_rel_err, double(std::abs((long double)r - f2) / denom));
    cert.updates_used++;
    return r;
  };

  // phase 1: responses to e_i give the diagonal, e_i + e_j the off-diagonal
  std::vector<std::vector<double>> G(n, std::vector<double>(n, 0.0));
  std::vector<double> diag(n, 0.0);
  for (uint32_t i = 1; i <= n; ++i) {
    double r = push(i, 1);
    diag[i - 1] = double(k) * r;
    G[i - 1][i - 1] = diag[i - 1];
    push(i, -1);
    cert.probe_rounds++;
  }
  for (uint32_t i = 1; i <= n; ++i) {
    for (uint32_t j = i + 1; j <= n; ++j) {
      push(i, 1);
      double r = push(j, 1);
      double gij = 0.5 * (double(k) * r - diag[i - 1] - diag[j - 1]);
      G[i - 1][j - 1] = G[j - 1][i - 1] = std::llround(gij);
      push(j, -1);
      push(i, -1);
      cert.probe_rounds++;
    }
  }

  // phase 2: integer-scaled kernel direction of the reconstructed Gram matrix
  int64_t rank = 0;
  std::vector<double> u = kernel_vector(G, rank);
  if (u.empty()) {
    cert.feasible = false;  // full numerical rank: nothing to exploit
    return cert;
  }
  if (rank > k)
    fail(ErrorKind::Attack, "gram_attack: rank check failed (rank " +
                                std::to_string(rank) + " > k = " + std::to_string(k) + ")");

  // kernel quality: ||G u|| must be negligible against ||u||
  double resid = 0, unorm = 0;
  for (uint32_t i = 0; i < n; ++i) {
    double s = 0;
    for (uint32_t j = 0; j < n; ++j) s += G[i][j] * u[j];
    resid += s * s;
    unorm += u[i] * u[i];
  }
  if (resid > 1e-10 * double(k) * double(k) * unorm)
    fail(ErrorKind::Attack, "gram_attack: kernel extraction residual too large");

  // phase 3: insert the scaled kernel vector
  cert.inserted.assign(n, 0);
  double last = 0;
  for (uint32_t i = 1; i <= n; ++i) {
    int64_t d = std::llround(double(magnitude) * u[i - 1]);
    cert.inserted[i - 1] = d;
    if (d != 0) last = push(i, d);
  }
  cert.reported = last;
  cert.true_f2 = 0;
  for (int64_t d : cert.inserted) cert.true_f2 += double(d) * double(d);
  cert.feasible = true;
  return cert;
}

// ---------------------------------------------------------------------------
// transcript serialization

void write_transcript_csv(std::ostream& out, const GameTranscript& g) {
  out << "t,a,delta,response,truth,flags\n";
  char buf[128];
  for (const auto& s : g.steps) {
    std::snprintf(buf, sizeof buf, "%lld,%u,%lld,%.17g,%.17g,%u\n",
                  (long long)s.u.t, s.u.a, (long long)s.u.delta, s.response,
                  double(s.truth), s.flags);
    out << buf;
  }
}

namespace {
constexpr uint64_t kReplayMagic = 0x59414c5045525354ULL;  // "TSREPLAY"
}

void write_replay(std::ostream& out, const GameTranscript& g) {
  wire::put_u64(out, kReplayMagic);
  wire::put_u64(out, 1);
  wire::put_u64(out, g.adversary_seed);
  wire::put_f64(out, g.eps);
  wire::put_u64(out, g.steps.size());
  for (const auto& s : g.steps) {
    wire::put_i64(out, s.u.t);
    wire::put_u64(out, s.u.a);
    wire::put_i64(out, s.u.delta);
    wire::put_f64(out, s.response);
    wire::put_f64(out, double(s.truth));
    wire::put_u64(out, s.flags);
  }
}

GameTranscript read_replay(std::istream& in) {
  if (wire::get_u64(in) != kReplayMagic) fail(ErrorKind::Io, "bad replay magic");
  if (wire::get_u64(in) != 1) fail(ErrorKind::Io, "unsupported replay version");
  GameTranscript g;
  g.adversary_seed = wire::get_u64(in);
  g.eps = wire::get_f64(in);
  uint64_t nsteps = wire::get_u64(in);
  for (uint64_t i = 0; i < nsteps; ++i) {
    GameStep s;
    s.u.t = wire::get_i64(in);
    s.u.a = uint32_t(wire::get_u64(in));
    s.u.delta = wire::get_i64(in);
    s.response = wire::get_f64(in);
    s.truth = wire::get_f64(in);
    s.flags = uint32_t(wire::get_u64(in));
    g.steps.push_back(s);
  }
  return g;
}

}  // namespace tsketch
