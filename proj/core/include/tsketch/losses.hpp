// Loss catalogue for the approximate-triangle framework: Lp powers plus the
// robust-statistics losses of the form g(x) = f(x^2) for a Bernstein f.
#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "tsketch/common.hpp"

namespace tsketch {

enum class LossFamily {
  LpP,           // |x|^p
  PseudoHuber,   // tau * (sqrt(1 + (x/tau)^2) - 1)
  CauchyLoss,    // log(1 + x^2/tau)
  Charbonnier,   // (1 + x^2/tau)^e - 1, 0 < e <= 1
  Welsch,        // 1 - exp(-x^2/tau)
  GemanMcClure,  // x^2 / (x^2 + tau)
};

struct LossSpec {
  LossFamily family = LossFamily::LpP;
  double p = 1.0;         // LpP exponent, p >= 0
  double tau = 1.0;       // scale, tau > 0
  double charb_exp = 0.5; // Charbonnier exponent in (0, 1]

  void validate() const;
  std::string name() const;
  // p in [0,1] -> 1; p >= 1 -> 2^(p-1); Bernstein-composed -> 2
  double beta() const;
  bool bernstein_composed() const;
};

LossSpec parse_loss(const std::string& family, double shape);

// scalar g(x); g(0) = 0 for every family
double eval_loss(const LossSpec& spec, double x);
// sum over coordinates
double eval_loss_vec(const LossSpec& spec, std::span<const double> v);
// the Bernstein part: f with g(x) = f(x^2); requires bernstein_composed()
// (LpP allowed for p <= 2, where f(t) = t^(p/2))
double bernstein_f(const LossSpec& spec, double t);

struct BetaCheckReport {
  bool pass = false;
  double beta = 0;
  double worst_ratio = 0;  // max g(a+b) / (g(a)+g(b)) observed
  int64_t samples = 0;
  std::string worst_case;
};

// Samples random scalar pairs and vector pairs and checks
// F(x+y) <= beta * (F(x) + F(y)) pointwise and summed.
BetaCheckReport check_beta_triangle(const LossSpec& spec, int64_t samples,
                                    uint64_t seed);

struct BernsteinCheckReport {
  bool pass = false;
  bool derivative_ok = false;    // f' >= 0 on the grid
  bool concavity_ok = false;     // f'' <= 0 on the grid
  bool slow_jumping_ok = false;  // g(y) <= (y/x)^2 g(x) for sampled x < y
  bool predictable_ok = false;   // |g(x+y)-g(x)| <= eps g(x) for y <= x/ceil(3/eps)
  std::string detail;
};

// Central differences at relative step 1e-5, tolerance 1e-6 * (1 + |value|),
// over a log-spaced grid of the given size.
BernsteinCheckReport check_bernstein_derivative(const LossSpec& spec,
                                                int grid_points);

}  // namespace tsketch
