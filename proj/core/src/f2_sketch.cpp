#include "tsketch/f2_sketch.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "wire.hpp"

namespace tsketch {

namespace {

constexpr uint64_t kMersenne61 = (uint64_t(1) << 61) - 1;

inline uint64_t mod_p(unsigned __int128 x) {
  uint64_t r = uint64_t(x & kMersenne61) + uint64_t(x >> 61);
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

inline uint64_t mulmod_p(uint64_t a, uint64_t b) {
  return mod_p((unsigned __int128)a * b);
}

constexpr uint64_t kMagic = 0x32464b5354ULL;  // "TSKF2"
constexpr uint64_t kVersion = 1;

}  // namespace

SignFamily::SignFamily(uint64_t key, int64_t rows) : rows_(rows) {
  coef_.resize(size_t(rows) * 4);
  Rng64 rng(key);
  for (auto& c : coef_) c = rng.next() % kMersenne61;
}

int SignFamily::sign(int64_t row, uint32_t coord) const {
  const uint64_t* c = &coef_[size_t(row) * 4];
  uint64_t x = coord % kMersenne61;
  uint64_t h = c[3];
  h = mod_p((unsigned __int128)mulmod_p(h, x) + c[2]);
  h = mod_p((unsigned __int128)mulmod_p(h, x) + c[1]);
  h = mod_p((unsigned __int128)mulmod_p(h, x) + c[0]);
  return (h & 1) ? 1 : -1;
}

void SignFamily::apply_column(std::span<double> state, uint32_t coord,
                              double delta) const {
  const uint64_t x = coord % kMersenne61;
  const uint64_t* c = coef_.data();
  for (int64_t r = 0; r < rows_; ++r, c += 4) {
    uint64_t h = c[3];
    h = mod_p((unsigned __int128)mulmod_p(h, x) + c[2]);
    h = mod_p((unsigned __int128)mulmod_p(h, x) + c[1]);
    h = mod_p((unsigned __int128)mulmod_p(h, x) + c[0]);
    state[size_t(r)] += (h & 1) ? delta : -delta;
  }
}

F2Shape f2_shape(double eps_s, double delta_s, double c_b, double c_g) {
  if (!(eps_s > 0 && eps_s <= 1) || !(delta_s > 0 && delta_s < 1))
    fail(ErrorKind::Config, "f2_shape: eps_s and delta_s must be in (0,1)");
  return f2_shape_log(eps_s, std::log2(1.0 / delta_s), c_b, c_g);
}

F2Shape f2_shape_log(double eps_s, double log2_inv_delta, double c_b, double c_g) {
  F2Shape s;
  s.b = int64_t(std::ceil(c_b / (eps_s * eps_s)));
  s.g = int64_t(std::ceil(c_g * log2_inv_delta * std::log(2.0)));
  if (s.b < 1) s.b = 1;
  if (s.g < 1) s.g = 1;
  return s;
}

F2Sketch::F2Sketch(const SeedPath& seed, uint32_t n, double eps_s, double delta_s,
                   double c_b, double c_g, int64_t memory_cap_words)
    : F2Sketch(seed, n, f2_shape(eps_s, delta_s, c_b, c_g), memory_cap_words) {}

F2Sketch::F2Sketch(const SeedPath& seed, uint32_t n, F2Shape shape,
                   int64_t memory_cap_words)
    : seed_(seed), n_(n), g_(shape.g), b_(shape.b) {
  if (n_ < 1) fail(ErrorKind::Config, "f2 sketch: n must be >= 1");
  double words = double(g_) * double(b_);
  if (words > double(memory_cap_words))
    fail(ErrorKind::Sizing,
         "f2 sketch: g*b = " + std::to_string(words) + " words exceeds cap " +
             std::to_string(memory_cap_words));
  digest_ = seed_.digest();
  signs_ = SignFamily(digest_, g_ * b_);
  state_.assign(size_t(g_ * b_), 0.0);
}

void F2Sketch::update(const Update& u) {
  if (u.a < 1 || u.a > n_)
    fail(ErrorKind::Index, "f2 sketch: coordinate out of range");
  signs_.apply_column(std::span<double>(state_), u.a, double(u.delta));
}

double f2_estimate_raw(std::span<const double> state, int64_t g, int64_t b) {
  std::vector<double> means(static_cast<size_t>(g), 0.0);
  for (int64_t k = 0; k < g; ++k) {
    double acc = 0;
    const double* p = state.data() + k * b;
    for (int64_t r = 0; r < b; ++r) acc += p[r] * p[r];
    means[size_t(k)] = acc / double(b);
  }
  size_t mid = means.size() / 2;
  std::nth_element(means.begin(), means.begin() + mid, means.end());
  if (means.size() % 2 == 1) return means[mid];
  double hi = means[mid];
  std::nth_element(means.begin(), means.begin() + mid - 1, means.begin() + mid);
  return 0.5 * (means[mid - 1] + hi);
}

double F2Sketch::estimate() const { return f2_estimate_raw(state_, g_, b_); }

bool F2Sketch::compatible(const F2Sketch& other) const {
  return digest_ == other.digest_ && n_ == other.n_ && g_ == other.g_ &&
         b_ == other.b_;
}

F2Sketch combine(const F2Sketch& s1, const F2Sketch& s2, double alpha, double beta) {
  if (!s1.compatible(s2))
    fail(ErrorKind::Incompatible, "combine: sketch matrices differ");
  F2Sketch out = s1;
  for (size_t i = 0; i < out.state_.size(); ++i)
    out.state_[i] = alpha * s1.state_[i] + beta * s2.state_[i];
  return out;
}

void F2Sketch::serialize(std::ostream& out) const {
  wire::put_u64(out, kMagic);
  wire::put_u64(out, kVersion);
  wire::put_u64(out, n_);
  wire::put_u64(out, uint64_t(g_));
  wire::put_u64(out, uint64_t(b_));
  wire::put_u64(out, seed_.master_seed);
  wire::put_u64(out, seed_.path.size());
  for (const auto& s : seed_.path) {
    wire::put_u64(out, s.level);
    wire::put_u64(out, uint64_t(s.ordinal));
    wire::put_u64(out, uint64_t(s.role));
  }
  for (double d : state_) wire::put_f64(out, d);
}

F2Sketch F2Sketch::deserialize(std::istream& in) {
  if (wire::get_u64(in) != kMagic) fail(ErrorKind::Io, "bad sketch magic");
  if (wire::get_u64(in) != kVersion) fail(ErrorKind::Io, "unsupported sketch version");
  uint32_t n = uint32_t(wire::get_u64(in));
  F2Shape shape;
  shape.g = int64_t(wire::get_u64(in));
  shape.b = int64_t(wire::get_u64(in));
  SeedPath seed;
  seed.master_seed = wire::get_u64(in);
  uint64_t plen = wire::get_u64(in);
  for (uint64_t i = 0; i < plen; ++i) {
    SeedPath::Segment s;
    s.level = uint32_t(wire::get_u64(in));
    s.ordinal = int64_t(wire::get_u64(in));
    s.role = SeedRole(wire::get_u64(in));
    seed.path.push_back(s);
  }
  F2Sketch sk(seed, n, shape);
  for (auto& d : sk.state_) d = wire::get_f64(in);
  return sk;
}

}  // namespace tsketch
