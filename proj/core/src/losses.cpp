#include "tsketch/losses.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace tsketch {

void LossSpec::validate() const {
  switch (family) {
    case LossFamily::LpP:
      if (p < 0) fail(ErrorKind::Config, "loss lp: p must be >= 0");
      return;
    case LossFamily::Charbonnier:
      if (!(charb_exp > 0 && charb_exp <= 1))
        fail(ErrorKind::Config, "loss charbonnier: exponent must be in (0,1]");
      break;
    default:
      break;
  }
  if (!(tau > 0)) fail(ErrorKind::Config, "loss: tau must be > 0");
}

std::string LossSpec::name() const {
  std::ostringstream os;
  switch (family) {
    case LossFamily::LpP: os << "lp_p(p=" << p << ")"; break;
    case LossFamily::PseudoHuber: os << "pseudo_huber(tau=" << tau << ")"; break;
    case LossFamily::CauchyLoss: os << "cauchy_loss(tau=" << tau << ")"; break;
    case LossFamily::Charbonnier:
      os << "charbonnier(tau=" << tau << ",e=" << charb_exp << ")";
      break;
    case LossFamily::Welsch: os << "welsch(tau=" << tau << ")"; break;
    case LossFamily::GemanMcClure: os << "geman_mcclure(tau=" << tau << ")"; break;
  }
  return os.str();
}

double LossSpec::beta() const {
  if (family == LossFamily::LpP) return p <= 1 ? 1.0 : std::exp2(p - 1);
  return 2.0;
}

bool LossSpec::bernstein_composed() const { return family != LossFamily::LpP; }

LossSpec parse_loss(const std::string& family, double shape) {
  LossSpec s;
  if (family == "lp_p" || family == "lp") {
    s.family = LossFamily::LpP;
    s.p = shape;
  } else if (family == "pseudo_huber") {
    s.family = LossFamily::PseudoHuber;
    s.tau = shape;
  } else if (family == "cauchy_loss" || family == "cauchy") {
    s.family = LossFamily::CauchyLoss;
    s.tau = shape;
  } else if (family == "charbonnier") {
    s.family = LossFamily::Charbonnier;
    s.charb_exp = shape;
  } else if (family == "welsch") {
    s.family = LossFamily::Welsch;
    s.tau = shape;
  } else if (family == "geman_mcclure") {
    s.family = LossFamily::GemanMcClure;
    s.tau = shape;
  } else {
    fail(ErrorKind::Config, "unknown loss family: " + family);
  }
  s.validate();
  return s;
}

double eval_loss(const LossSpec& spec, double x) {
  switch (spec.family) {
    case LossFamily::LpP:
      if (x == 0) return 0;  // 0^0 counts the support
      if (spec.p == 1.0) return std::abs(x);
      if (spec.p == 2.0) return x * x;
      return std::pow(std::abs(x), spec.p);
    case LossFamily::PseudoHuber: {
      // tau * (sqrt(1 + r^2) - 1), cancellation-free for small r
      double r = x / spec.tau;
      double z = r * r;
      return spec.tau * z / (std::sqrt(1.0 + z) + 1.0);
    }
    case LossFamily::CauchyLoss:
      return std::log1p(x * x / spec.tau);
    case LossFamily::Charbonnier:
      // (1 + z)^e - 1 via expm1(e log1p(z))
      return std::expm1(spec.charb_exp * std::log1p(x * x / spec.tau));
    case LossFamily::Welsch:
      return -std::expm1(-x * x / spec.tau);
    case LossFamily::GemanMcClure:
      return x * x / (x * x + spec.tau);
  }
  return 0;
}

double eval_loss_vec(const LossSpec& spec, std::span<const double> v) {
  double acc = 0;
  for (double x : v) acc += eval_loss(spec, x);
  return acc;
}

double bernstein_f(const LossSpec& spec, double t) {
  switch (spec.family) {
    case LossFamily::LpP:
      if (spec.p > 2) fail(ErrorKind::Config, "bernstein_f: lp needs p <= 2");
      return std::pow(t, spec.p / 2.0);
    case LossFamily::PseudoHuber: {
      double z = t / (spec.tau * spec.tau);
      return spec.tau * z / (std::sqrt(1.0 + z) + 1.0);
    }
    case LossFamily::CauchyLoss:
      return std::log1p(t / spec.tau);
    case LossFamily::Charbonnier:
      return std::expm1(spec.charb_exp * std::log1p(t / spec.tau));
    case LossFamily::Welsch:
      return -std::expm1(-t / spec.tau);
    case LossFamily::GemanMcClure:
      return t / (t + spec.tau);
  }
  return 0;
}

BetaCheckReport check_beta_triangle(const LossSpec& spec, int64_t samples,
                                    uint64_t seed) {
  spec.validate();
  if (samples < 1) fail(ErrorKind::Config, "check_beta_triangle: samples >= 1");
  BetaCheckReport rep;
  rep.beta = spec.beta();
  rep.samples = samples;
  rep.pass = true;
  Rng64 rng(mix64(seed, 0xb7a1));

  auto record = [&](double lhs, double rhs, const std::string& what) {
    if (rhs <= 0) return;  // both sides zero
    double ratio = lhs / rhs;
    if (ratio > rep.worst_ratio) {
      rep.worst_ratio = ratio;
      rep.worst_case = what;
    }
    // exact-arithmetic slack for the float evaluation of both sides
    if (lhs > rep.beta * rhs * (1.0 + 1e-9)) rep.pass = false;
  };

  for (int64_t s = 0; s < samples; ++s) {
    // scalar pair on a wide magnitude range, signed
    double a = (rng.next_unit() * 2 - 1) * std::exp2(rng.next_unit() * 20 - 6);
    double b = (rng.next_unit() * 2 - 1) * std::exp2(rng.next_unit() * 20 - 6);
    std::ostringstream os;
    os << "a=" << a << " b=" << b;
    record(eval_loss(spec, a + b), eval_loss(spec, a) + eval_loss(spec, b),
           os.str());

    if (s % 16 == 0) {
      uint32_t n = 2 + uint32_t(rng.next_below(14));
      std::vector<double> x(n), y(n), xy(n);
      for (uint32_t i = 0; i < n; ++i) {
        x[i] = (rng.next_unit() * 2 - 1) * std::exp2(rng.next_unit() * 16 - 4);
        y[i] = (rng.next_unit() * 2 - 1) * std::exp2(rng.next_unit() * 16 - 4);
        xy[i] = x[i] + y[i];
      }
      record(eval_loss_vec(spec, xy),
             eval_loss_vec(spec, x) + eval_loss_vec(spec, y), "vector pair");
    }
  }
  return rep;
}

BernsteinCheckReport check_bernstein_derivative(const LossSpec& spec,
                                                int grid_points) {
  spec.validate();
  if (!spec.bernstein_composed() && !(spec.family == LossFamily::LpP && spec.p <= 2))
    fail(ErrorKind::Config, "check_bernstein_derivative: not a Bernstein-composed family");
  if (grid_points < 3) fail(ErrorKind::Config, "grid too small");

  BernsteinCheckReport rep;
  rep.derivative_ok = rep.concavity_ok = rep.slow_jumping_ok = rep.predictable_ok = true;
  std::ostringstream detail;

  auto f = [&](double t) { return bernstein_f(spec, t); };
  auto g = [&](double x) { return eval_loss(spec, x); };

  // log grid over [1e-4, 1e6]
  std::vector<double> grid(static_cast<size_t>(grid_points), 0.0);
  for (int i = 0; i < grid_points; ++i)
    grid[size_t(i)] = std::pow(10.0, -4.0 + 10.0 * double(i) / double(grid_points - 1));

  const double rel_step = 1e-5;
  const double mach = std::numeric_limits<double>::epsilon();
  for (double t : grid) {
    double h = rel_step * t;
    double fm = f(t - h), f0 = f(t), fp = f(t + h);
    double d1 = (fp - fm) / (2 * h);
    double d2 = (fp - 2 * f0 + fm) / (h * h);
    // cancellation noise of the finite differences themselves
    double tol1 = 1e-6 * (1 + std::abs(d1)) + 2 * mach * std::abs(f0) / h;
    double tol2 = 1e-6 * (1 + std::abs(d2)) + 8 * mach * std::abs(f0) / (h * h);
    if (d1 < -tol1) {
      rep.derivative_ok = false;
      detail << "f' < 0 at t=" << t << " (" << d1 << "); ";
    }
    if (d2 > tol2) {
      rep.concavity_ok = false;
      detail << "f'' > 0 at t=" << t << " (" << d2 << "); ";
    }
  }

  // slow-jumping: g(y) <= (y/x)^2 g(x) for 0 < x < y
  for (size_t i = 0; i + 1 < grid.size(); ++i)
    for (size_t j = i + 1; j < grid.size(); j += 7) {
      double x = grid[i], y = grid[j];
      double gx = g(x);
      if (gx <= 0) continue;
      if (g(y) > (y / x) * (y / x) * gx * (1 + 1e-9)) {
        rep.slow_jumping_ok = false;
        detail << "slow-jump fail x=" << x << " y=" << y << "; ";
      }
    }

  // predictability with h(x) = ceil(3/eps): |g(x+y) - g(x)| <= eps g(x)
  for (double eps : {0.9, 0.5, 0.2}) {
    double hx = std::ceil(3.0 / eps);
    for (double x : grid) {
      if (g(x) <= 0) continue;
      for (double frac : {1.0, 0.5, 0.1}) {
        double y = frac * x / hx;
        if (std::abs(g(x + y) - g(x)) > eps * g(x) * (1 + 1e-9)) {
          rep.predictable_ok = false;
          detail << "predictability fail x=" << x << " y=" << y
                 << " eps=" << eps << "; ";
        }
      }
    }
  }

  rep.pass = rep.derivative_ok && rep.concavity_ok && rep.slow_jumping_ok &&
             rep.predictable_ok;
  rep.detail = detail.str();
  return rep;
}

}  // namespace tsketch
