// tsketch CLI: run seeded game batches, attack demos, heavy-hitter reports,
// loss catalogue checks, and space sweeps. Exit codes: 0 ok, 1 config error,
// 2 runtime failure.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tsketch/experiment.hpp"
#include "tsketch/losses.hpp"

using namespace tsketch;

namespace {

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& sets) {
  ExperimentConfig cfg;
  if (!path.empty()) cfg = ExperimentConfig::parse_file(path);
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Config, "--set expects key=value, got '" + kv + "'");
    cfg.set_kv(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (cfg.out_dir.empty()) {
    const char* env = std::getenv("TSKETCH_OUT");
    cfg.out_dir = env ? env : "out";
  }
  cfg.validate();
  return cfg;
}

int cmd_run(const ExperimentConfig& cfg) {
  BatchOutcome out = run_batch(cfg);
  int64_t ok = 0, broken = 0, failed = 0;
  for (const auto& r : out.runs) {
    if (r.failed) failed++;
    else if (r.break_time >= 0) broken++;
    else ok++;
  }
  std::printf("task=%s seeds=%lld ok=%lld broken=%lld failed=%lld wall=%.2fs\n",
              cfg.task.c_str(), (long long)cfg.seeds, (long long)ok,
              (long long)broken, (long long)failed, out.wall_seconds);
  std::printf("outputs under %s\n", cfg.out_dir.c_str());
  // verdicts are data; only run completion decides the exit code
  for (const auto& r : out.runs)
    if (r.failed) return 2;
  return 0;
}

int cmd_attack_demo(const ExperimentConfig& cfg) {
  uint32_t n = cfg.n;
  int64_t k = std::max<int64_t>(2, n / 2);
  std::printf("gram attack vs naive mean sketch: n=%u k=%lld\n", n, (long long)k);

  SeedPath base{cfg.master_seed, {}};
  NaiveMeanAms naive(derive_seed(base, 1, 0, SeedRole::Baseline), n, k);
  BreakCertificate cert = gram_attack(naive, n, k);
  std::printf("  feasible=%d probe_rounds=%lld updates=%lld\n", cert.feasible ? 1 : 0,
              (long long)cert.probe_rounds, (long long)cert.updates_used);
  if (cert.feasible)
    std::printf("  reported=%.6g true=%.6g ratio=%.3g\n", cert.reported,
                cert.true_f2, cert.ratio());

  std::printf("gram attack vs robust estimator:\n");
  ExperimentConfig rcfg = cfg;
  rcfg.m = std::max<int64_t>(cfg.m, 4 * int64_t(n) * int64_t(n));
  Params params = rcfg.make_params();
  RobustF2Algo robust(params, derive_seed(base, 1, 1, SeedRole::Baseline));
  BreakCertificate rc = gram_attack(robust, n, k);
  std::printf("  feasible=%d max_probe_rel_err=%.3g\n", rc.feasible ? 1 : 0,
              rc.max_probe_rel_err);
  if (!cfg.out_dir.empty() && cert.feasible) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream f(cfg.out_dir + "/gram_certificate.csv", std::ios::binary);
    f << "i,u_i\n";
    for (size_t i = 0; i < cert.inserted.size(); ++i)
      f << i + 1 << "," << cert.inserted[i] << "\n";
  }
  return 0;
}

int cmd_tri_check(int64_t samples, int grid) {
  std::vector<LossSpec> catalogue = {
      parse_loss("lp_p", 0.5),        parse_loss("lp_p", 1.0),
      parse_loss("lp_p", 1.5),        parse_loss("lp_p", 2.0),
      parse_loss("pseudo_huber", 1.0), parse_loss("cauchy_loss", 1.0),
      parse_loss("charbonnier", 0.5), parse_loss("welsch", 1.0),
      parse_loss("geman_mcclure", 1.0),
  };
  bool all = true;
  for (const auto& spec : catalogue) {
    BetaCheckReport b = check_beta_triangle(spec, samples, 0xc0ffee);
    std::printf("beta-triangle %-28s beta=%.3g worst=%.6g %s\n",
                spec.name().c_str(), b.beta, b.worst_ratio,
                b.pass ? "PASS" : "FAIL");
    all = all && b.pass;
    if (spec.bernstein_composed()) {
      BernsteinCheckReport r = check_bernstein_derivative(spec, grid);
      std::printf("bernstein     %-28s d1=%d d2=%d jump=%d pred=%d %s\n",
                  spec.name().c_str(), r.derivative_ok, r.concavity_ok,
                  r.slow_jumping_ok, r.predictable_ok, r.pass ? "PASS" : "FAIL");
      all = all && r.pass;
    }
  }
  return all ? 0 : 2;
}

int cmd_space_sweep(const ExperimentConfig& cfg) {
  SpaceSweepResult res = run_space_sweep(cfg);
  std::printf("n,B,H,g,b,slots,peak_words\n");
  for (const auto& r : res.rows)
    std::printf("%u,%lld,%u,%lld,%lld,%lld,%lld\n", r.n, (long long)r.B, r.H,
                (long long)r.g, (long long)r.b, (long long)r.slots,
                (long long)r.peak_words);
  std::printf("growth end-to-end: %.3fx\n", res.growth());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tsketch: adversarially robust turnstile sketching"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (sectioned key = value)");
    sub->add_option("--set", sets, "override, e.g. --set sizing.B=16");
  };

  auto* run = app.add_subcommand("run", "run a seeded game batch");
  add_common(run);
  auto* attack = app.add_subcommand("attack-demo", "gram attack vs naive and robust");
  add_common(attack);
  auto* heavy = app.add_subcommand("heavy", "planted heavy-hitter reports");
  add_common(heavy);
  auto* tri = app.add_subcommand("tri-check", "loss catalogue property checks");
  int64_t samples = 10000;
  int grid = 100;
  tri->add_option("--samples", samples, "samples per family");
  tri->add_option("--grid", grid, "log-grid points");
  auto* sweep = app.add_subcommand("space-sweep", "peak words across a universe sweep");
  add_common(sweep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (tri->parsed()) return cmd_tri_check(samples, grid);
    ExperimentConfig cfg = load_config(config_path, sets);
    if (run->parsed()) return cmd_run(cfg);
    if (heavy->parsed()) {
      ExperimentConfig hc = cfg;
      hc.task = "heavy";
      return cmd_run(hc);
    }
    if (attack->parsed()) return cmd_attack_demo(cfg);
    if (sweep->parsed()) return cmd_space_sweep(cfg);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ErrorKind::Config ? 1 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
