#include <doctest.h>

#include <cmath>
#include <vector>

#include "tsketch/losses.hpp"

using namespace tsketch;

TEST_CASE("catalogue point values") {
  CHECK(eval_loss(parse_loss("geman_mcclure", 1.0), 2.0) == doctest::Approx(0.8));
  CHECK(eval_loss(parse_loss("cauchy_loss", 1.0), 1.0) ==
        doctest::Approx(std::log(2.0)));
  CHECK(eval_loss(parse_loss("lp_p", 0.5), 4.0) == doctest::Approx(2.0));
  CHECK(eval_loss(parse_loss("welsch", 1.0), 1.0) ==
        doctest::Approx(1.0 - std::exp(-1.0)));
}

TEST_CASE("every family vanishes at zero") {
  for (const char* fam :
       {"lp_p", "pseudo_huber", "cauchy_loss", "charbonnier", "welsch",
        "geman_mcclure"}) {
    LossSpec s = parse_loss(fam, 0.5);
    CHECK(eval_loss(s, 0.0) == 0.0);
  }
}

TEST_CASE("pseudo huber approaches unit slope") {
  LossSpec s = parse_loss("pseudo_huber", 1.0);
  double r = eval_loss(s, 100.0) / 100.0;
  CHECK(r >= 0.98);
  CHECK(r <= 1.0);
}

TEST_CASE("derived beta per family") {
  CHECK(parse_loss("lp_p", 0.5).beta() == 1.0);
  CHECK(parse_loss("lp_p", 1.0).beta() == 1.0);
  CHECK(parse_loss("lp_p", 1.5).beta() == doctest::Approx(std::exp2(0.5)));
  CHECK(parse_loss("lp_p", 2.0).beta() == 2.0);
  CHECK(parse_loss("welsch", 1.0).beta() == 2.0);
  CHECK(parse_loss("geman_mcclure", 2.0).beta() == 2.0);
}

TEST_CASE("scalar triangle cases") {
  // p = 0.5 at a = b = 1: sqrt(2) <= 2
  LossSpec half = parse_loss("lp_p", 0.5);
  CHECK(eval_loss(half, 2.0) <= eval_loss(half, 1.0) + eval_loss(half, 1.0));
  // p = 2 tight case: (1+1)^2 = 4 = 2 (1 + 1)
  LossSpec sq = parse_loss("lp_p", 2.0);
  CHECK(eval_loss(sq, 2.0) ==
        doctest::Approx(2.0 * (eval_loss(sq, 1.0) + eval_loss(sq, 1.0))));
}

TEST_CASE("beta triangle sampling passes for the whole catalogue") {
  for (auto [fam, shape] : std::initializer_list<std::pair<const char*, double>>{
           {"lp_p", 0.5},
           {"lp_p", 1.0},
           {"lp_p", 1.5},
           {"lp_p", 2.0},
           {"pseudo_huber", 1.0},
           {"cauchy_loss", 1.0},
           {"charbonnier", 0.5},
           {"welsch", 1.0},
           {"geman_mcclure", 1.0}}) {
    BetaCheckReport rep = check_beta_triangle(parse_loss(fam, shape), 2000, 99);
    CHECK_MESSAGE(rep.pass, fam, " worst=", rep.worst_ratio);
    CHECK(rep.worst_ratio <= rep.beta * (1 + 1e-9));
  }
}

TEST_CASE("welsch worst ratio stays below 2 over many pairs") {
  BetaCheckReport rep = check_beta_triangle(parse_loss("welsch", 1.0), 10000, 7);
  CHECK(rep.pass);
  CHECK(rep.worst_ratio <= 2.0);
}

TEST_CASE("bernstein derivative checks") {
  for (auto [fam, shape] : std::initializer_list<std::pair<const char*, double>>{
           {"pseudo_huber", 1.0},
           {"cauchy_loss", 1.0},
           {"charbonnier", 0.5},
           {"welsch", 1.0},
           {"geman_mcclure", 1.0}}) {
    BernsteinCheckReport rep =
        check_bernstein_derivative(parse_loss(fam, shape), 100);
    CHECK_MESSAGE(rep.pass, fam, ": ", rep.detail);
  }
}

TEST_CASE("slow jumping is tight for the square") {
  // g(x) = x^2 has f = id: g(y)/g(x) = (y/x)^2 exactly
  BernsteinCheckReport rep = check_bernstein_derivative(parse_loss("lp_p", 2.0), 60);
  CHECK(rep.slow_jumping_ok);
  CHECK(rep.pass);  // f' = 1 >= 0 passes the non-strict check
}

TEST_CASE("invalid shapes are rejected") {
  CHECK_THROWS_AS(parse_loss("lp_p", -0.5), Error);
  CHECK_THROWS_AS(parse_loss("charbonnier", 1.5), Error);
  CHECK_THROWS_AS(parse_loss("welsch", 0.0), Error);
  CHECK_THROWS_AS(parse_loss("nonsense", 1.0), Error);
  LossSpec lp = parse_loss("lp_p", 2.5);
  CHECK_THROWS_AS(bernstein_f(lp, 1.0), Error);  // composed form needs p <= 2
}

TEST_CASE("vector evaluation is the coordinate sum") {
  LossSpec l1 = parse_loss("lp_p", 1.0);
  std::vector<double> v = {1, -2, 3};
  CHECK(eval_loss_vec(l1, v) == doctest::Approx(6.0));
}
