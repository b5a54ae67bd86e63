#include "tsketch/sizing.hpp"

#include <cmath>

#include "tsketch/f2_sketch.hpp"

namespace tsketch {

namespace {

int64_t branching_for(uint32_t n, double eta, double c_B) {
  double v = std::ceil(c_B * std::log(double(n)) / (eta * eta));
  if (v < 2) return 2;
  if (v > 0x1.0p62) fail(ErrorKind::Sizing, "branching factor overflows");
  return int64_t(v);
}

bool covers(int64_t B, uint32_t H, int64_t m) {
  return double(H) * std::log(double(B)) >= std::log(double(m)) - 1e-12;
}

}  // namespace

Params size_parameters(uint32_t n, int64_t m, double eps, const SizingOverrides& ov) {
  if (n < 2) fail(ErrorKind::Sizing, "size_parameters: n must be >= 2");
  if (m < 1) fail(ErrorKind::Sizing, "size_parameters: m must be >= 1");
  if (!(eps > 0 && eps < 1))
    fail(ErrorKind::Sizing, "size_parameters: eps must be in (0,1)");

  Params p;
  p.n = n;
  p.m = m;
  p.eps = eps;
  p.c_B = ov.c_B;
  p.c_L = ov.c_L;
  p.c_delta = ov.c_delta;
  p.c_b = ov.c_b;
  p.c_g = ov.c_g;
  p.mode = ov.mode;
  p.realization = ov.realization;
  p.pool_slack = ov.pool_slack;
  p.memory_cap_words = ov.memory_cap_words;
  p.delta_max = ov.delta_max;

  const uint32_t kMaxHeight = 64;
  if (ov.B > 0) {
    p.B = ov.B;
    if (ov.H > 0) {
      p.H = ov.H;
    } else {
      uint32_t H = 1;
      while (H < kMaxHeight && !covers(p.B, H, m)) ++H;
      p.H = H;
    }
  } else {
    // fixed point over eta = eps/(100 H): smallest feasible height
    uint32_t H = 0;
    int64_t B = 0;
    for (uint32_t h = 1; h <= kMaxHeight; ++h) {
      int64_t cand = branching_for(n, eps / (100.0 * h), ov.c_B);
      if (covers(cand, h, m)) {
        H = h;
        B = cand;
        break;
      }
    }
    if (H == 0)
      fail(ErrorKind::Sizing, "size_parameters: no feasible (B,H) covers m");
    p.H = ov.H > 0 ? ov.H : H;
    p.B = B;
  }
  if (!covers(p.B, p.H, m))
    fail(ErrorKind::Sizing,
         "size_parameters: B^H < m (B=" + std::to_string(p.B) +
             ", H=" + std::to_string(p.H) + ", m=" + std::to_string(m) + ")");

  p.eta = eps / (100.0 * double(p.H));

  p.L_max = ov.L_max > 0
                ? ov.L_max
                : int64_t(std::min(std::ceil(ov.c_L * std::log(double(n)) /
                                             (p.eta * p.eta)),
                                   0x1.0p62));
  if (p.L_max < 1) p.L_max = 1;

  p.log2_inv_delta =
      ov.log2_inv_delta > 0
          ? ov.log2_inv_delta
          : ov.c_delta * (double(p.B) + double(p.L_max)) *
                std::log2(double(n) * double(m));

  F2Shape shape;
  if (ov.sketch_eps > 0) {
    double ld = ov.sketch_log2_inv_delta > 0 ? ov.sketch_log2_inv_delta
                                             : p.log2_inv_delta;
    shape = f2_shape_log(ov.sketch_eps, ld, ov.c_b, ov.c_g);
  } else {
    shape = f2_shape_log(p.eta, p.log2_inv_delta, ov.c_b, ov.c_g);
  }
  p.g = shape.g;
  p.b = shape.b;

  int64_t words = planned_state_words(p);
  if (words > p.memory_cap_words)
    fail(ErrorKind::Sizing,
         "size_parameters: planned state of " + std::to_string(words) +
             " words exceeds cap " + std::to_string(p.memory_cap_words) +
             " (B=" + std::to_string(p.B) + " L_max=" + std::to_string(p.L_max) +
             " g=" + std::to_string(p.g) + " b=" + std::to_string(p.b) +
             (p.use_exact() ? ", exact realization" : ", random realization") +
             ")");

  p.validate();
  return p;
}

}  // namespace tsketch
