#include "tsketch/l1_sketch.hpp"

#include <algorithm>
#include <cmath>

namespace tsketch {

L1Sketch::L1Sketch(const SeedPath& seed, uint32_t n, double kappa, double delta_s,
                   double c_r)
    : L1Sketch(seed, n,
               [&] {
                 if (!(kappa > 1)) fail(ErrorKind::Config, "l1 sketch: kappa must be > 1");
                 if (!(delta_s > 0 && delta_s < 1))
                   fail(ErrorKind::Config, "l1 sketch: delta_s must be in (0,1)");
                 double e = kappa - 1.0;
                 return int64_t(std::ceil(c_r * std::log(1.0 / delta_s) / (e * e)));
               }()) {}

L1Sketch::L1Sketch(const SeedPath& seed, uint32_t n, int64_t rows)
    : seed_(seed), n_(n), rows_(std::max<int64_t>(rows, 1)) {
  if (n_ < 1) fail(ErrorKind::Config, "l1 sketch: n must be >= 1");
  digest_ = seed_.digest();
  state_.assign(size_t(rows_), 0.0);
}

double L1Sketch::entry(int64_t row, uint32_t coord) const {
  uint64_t h = mix64(digest_, mix64(uint64_t(row), uint64_t(coord)));
  // u in (0,1), then inverse-CDF of the standard Cauchy
  double u = (double(h >> 11) + 0.5) * 0x1.0p-53;
  return std::tan(M_PI * (u - 0.5));
}

void L1Sketch::update(const Update& u) {
  if (u.a < 1 || u.a > n_)
    fail(ErrorKind::Index, "l1 sketch: coordinate out of range");
  for (int64_t r = 0; r < rows_; ++r)
    state_[size_t(r)] += double(u.delta) * entry(r, u.a);
}

double L1Sketch::estimate() const {
  std::vector<double> mag(state_.size());
  for (size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(state_[i]);
  size_t mid = mag.size() / 2;
  std::nth_element(mag.begin(), mag.begin() + mid, mag.end());
  if (mag.size() % 2 == 1) return mag[mid];
  double hi = mag[mid];
  std::nth_element(mag.begin(), mag.begin() + mid - 1, mag.begin() + mid);
  return 0.5 * (mag[mid - 1] + hi);
}

bool L1Sketch::compatible(const L1Sketch& other) const {
  return digest_ == other.digest_ && n_ == other.n_ && rows_ == other.rows_;
}

L1Sketch combine(const L1Sketch& s1, const L1Sketch& s2, double alpha, double beta) {
  if (!s1.compatible(s2))
    fail(ErrorKind::Incompatible, "combine: l1 sketch matrices differ");
  L1Sketch out = s1;
  for (size_t i = 0; i < out.state_.size(); ++i)
    out.state_[i] = alpha * s1.state_[i] + beta * s2.state_[i];
  return out;
}

void OracleSketch::update(const Update& u) {
  if (u.a < 1 || u.a > n())
    fail(ErrorKind::Index, "oracle sketch: coordinate out of range");
  vec_[u.a - 1] += double(u.delta);
}

double OracleSketch::f2() const {
  double acc = 0;
  for (double v : vec_) acc += v * v;
  return acc;
}

double OracleSketch::l1() const {
  double acc = 0;
  for (double v : vec_) acc += std::abs(v);
  return acc;
}

OracleSketch combine(const OracleSketch& s1, const OracleSketch& s2, double alpha,
                     double beta) {
  if (s1.n() != s2.n())
    fail(ErrorKind::Incompatible, "combine: oracle dimensions differ");
  OracleSketch out = s1;
  for (uint32_t i = 0; i < out.n(); ++i)
    out.raw()[i] = alpha * s1.state()[i] + beta * s2.state()[i];
  return out;
}

}  // namespace tsketch
