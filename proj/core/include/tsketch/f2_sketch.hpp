// AMS-style F2 sketch: g groups of b tug-of-war rows, 4-wise independent
// signs from a polynomial hash over the Mersenne prime 2^61 - 1. The state is
// an exactly linear function of the accumulated frequency vector.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "tsketch/core_types.hpp"

namespace tsketch {

// Per-row 4-wise sign generator. Rows are keyed off a seed digest; the same
// digest always reproduces the same implicit +-1 matrix.
class SignFamily {
 public:
  SignFamily() = default;
  SignFamily(uint64_t key, int64_t rows);

  int64_t rows() const { return rows_; }
  // sign of entry (row, coord), coord 1-based
  int sign(int64_t row, uint32_t coord) const;
  // state[row] += delta * sign(row, coord) for every row
  void apply_column(std::span<double> state, uint32_t coord, double delta) const;

 private:
  int64_t rows_ = 0;
  std::vector<uint64_t> coef_;  // 4 coefficients per row
};

struct F2Shape {
  int64_t g = 0;
  int64_t b = 0;
};

// b = ceil(c_b / eps_s^2), g = ceil(c_g * ln(1/delta_s)).
F2Shape f2_shape(double eps_s, double delta_s, double c_b = 8.0, double c_g = 8.0);
// log-form variant for failure probabilities below float range
F2Shape f2_shape_log(double eps_s, double log2_inv_delta, double c_b = 8.0,
                     double c_g = 8.0);

class F2Sketch {
 public:
  F2Sketch() = default;
  // Throws Error(Sizing) if g*b exceeds memory_cap_words.
  F2Sketch(const SeedPath& seed, uint32_t n, double eps_s, double delta_s,
           double c_b = 8.0, double c_g = 8.0,
           int64_t memory_cap_words = int64_t(1) << 28);
  // direct shape constructor
  F2Sketch(const SeedPath& seed, uint32_t n, F2Shape shape,
           int64_t memory_cap_words = int64_t(1) << 28);

  uint32_t n() const { return n_; }
  int64_t g() const { return g_; }
  int64_t b() const { return b_; }
  const SeedPath& seed() const { return seed_; }
  uint64_t seed_digest() const { return digest_; }
  const std::vector<double>& state() const { return state_; }

  void update(const Update& u);
  // median over the g groups of (1/b) * ||group state||^2
  double estimate() const;

  bool compatible(const F2Sketch& other) const;

  void serialize(std::ostream& out) const;
  static F2Sketch deserialize(std::istream& in);

  friend F2Sketch combine(const F2Sketch& s1, const F2Sketch& s2, double alpha,
                          double beta);

 private:
  SeedPath seed_;
  uint64_t digest_ = 0;
  uint32_t n_ = 0;
  int64_t g_ = 0, b_ = 0;
  SignFamily signs_;
  std::vector<double> state_;
};

// alpha * s1 + beta * s2; sketches alpha*x1 + beta*x2. Throws
// Error(Incompatible) on matrix mismatch.
F2Sketch combine(const F2Sketch& s1, const F2Sketch& s2, double alpha, double beta);

// median over g groups of (1/b)*sum of squares, on a raw state array
double f2_estimate_raw(std::span<const double> state, int64_t g, int64_t b);

}  // namespace tsketch
