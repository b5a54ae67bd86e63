// Cauchy-type L1 sketch (median-of-|entries| estimator) and the exact-oracle
// pseudo-sketch used as the kappa -> 1 reference instrument.
#pragma once

#include <cstdint>
#include <vector>

#include "tsketch/core_types.hpp"

namespace tsketch {

// Rows are inner products with implicit standard-Cauchy vectors; each matrix
// entry is recomputed on demand from (seed, row, coordinate), so the matrix
// is frozen without being stored.
class L1Sketch {
 public:
  L1Sketch() = default;
  // rows = ceil(c_r * ln(1/delta_s) / (kappa-1)^2)
  L1Sketch(const SeedPath& seed, uint32_t n, double kappa, double delta_s,
           double c_r = 8.0);
  L1Sketch(const SeedPath& seed, uint32_t n, int64_t rows);

  uint32_t n() const { return n_; }
  int64_t rows() const { return rows_; }
  uint64_t seed_digest() const { return digest_; }
  const std::vector<double>& state() const { return state_; }

  double entry(int64_t row, uint32_t coord) const;  // cauchy variate
  void update(const Update& u);
  // median of |state|; median |Cauchy| = 1, so no rescale
  double estimate() const;

  bool compatible(const L1Sketch& other) const;
  friend L1Sketch combine(const L1Sketch& s1, const L1Sketch& s2, double alpha,
                          double beta);

 private:
  SeedPath seed_;
  uint64_t digest_ = 0;
  uint32_t n_ = 0;
  int64_t rows_ = 0;
  std::vector<double> state_;
};

L1Sketch combine(const L1Sketch& s1, const L1Sketch& s2, double alpha, double beta);

// Full dense copy; estimate() is exact. Test/reference instrument that
// participates in the same linear-sketch interface.
class OracleSketch {
 public:
  OracleSketch() = default;
  explicit OracleSketch(uint32_t n) : vec_(n, 0.0) {}

  uint32_t n() const { return uint32_t(vec_.size()); }
  const std::vector<double>& state() const { return vec_; }
  std::vector<double>& raw() { return vec_; }

  void update(const Update& u);
  double f2() const;
  double l1() const;

 private:
  std::vector<double> vec_;
};

OracleSketch combine(const OracleSketch& s1, const OracleSketch& s2, double alpha,
                     double beta);

}  // namespace tsketch
