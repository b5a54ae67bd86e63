// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Runs the full batch sizes; expect a few minutes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tsketch/adversary.hpp"
#include "tsketch/experiment.hpp"
#include "tsketch/heavy_hitters.hpp"
#include "tsketch/losses.hpp"
#include "tsketch/sizing.hpp"

using namespace tsketch;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
  std::printf("%s criterion-%d %s: %s\n", pass ? "PASS" : "FAIL", idx, name,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) g_failures++;
}

int hw_jobs() {
  unsigned hc = std::thread::hardware_concurrency();
  return int(std::min<unsigned>(std::max<unsigned>(hc, 1), 8));
}

ExperimentConfig batch_config(const std::string& adversary, uint64_t master) {
  ExperimentConfig cfg;
  cfg.task = "f2";
  cfg.n = 1024;
  cfg.m = 20000;
  cfg.eps = 0.2;
  cfg.seeds = 100;
  cfg.master_seed = master;
  cfg.mode = RunMode::Reference;
  cfg.sizing.mode = RunMode::Reference;
  cfg.sizing.B = 16;  // tree shape; every other constant is the formula default
  cfg.adversary = adversary;
  cfg.jobs = hw_jobs();
  cfg.write_transcripts = false;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) return "<missing " + p.string() + ">";
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// criteria 1-2 share their outcomes with criterion 4
BatchOutcome g_oblivious, g_adaptive;
Params g_params;

void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = batch_config("oblivious_random", 1001);
  g_params = cfg.make_params();
  g_oblivious = run_batch(cfg);
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  int pass_runs = 0;
  for (const auto& r : g_oblivious.runs)
    if (!r.failed && r.max_rel_err <= cfg.eps) pass_runs++;
  bool ok = pass_runs >= 95 && wall <= 600.0;
  std::ostringstream d;
  d << pass_runs << "/100 runs with max rel err <= 0.2, wall " << wall << "s";
  report(1, "oblivious accuracy", ok, d.str());
}

void criterion_2() {
  ExperimentConfig cfg = batch_config("alignment_attack", 2002);
  g_adaptive = run_batch(cfg);

  int pass_runs = 0, cap_ok = 0;
  for (const auto& r : g_adaptive.runs) {
    if (!r.failed && r.max_rel_err <= cfg.eps) pass_runs++;
    if (!r.failed && r.max_block_updates <= g_params.L_max) cap_ok++;
  }
  bool ok = pass_runs >= 95 && cap_ok == 100;
  std::ostringstream d;
  d << pass_runs << "/100 accurate, " << cap_ok << "/100 within L_max="
    << g_params.L_max;
  report(2, "adaptive robustness", ok, d.str());
}

void criterion_3() {
  const uint32_t n = 64;
  const int64_t k = 32;
  const int64_t max_rounds = int64_t(n) + int64_t(n) * (n - 1) / 2;
  int naive_broken = 0;
  bool rounds_ok = true;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    NaiveMeanAms naive(derive_seed(SeedPath{seed, {}}, 1, 0, SeedRole::Baseline),
                       n, k);
    BreakCertificate cert = gram_attack(naive, n, k);
    if (cert.feasible && cert.ratio() <= 1e-2) naive_broken++;
    if (cert.probe_rounds > max_rounds) rounds_ok = false;
  }

  int robust_clean = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    SizingOverrides ov;
    ov.B = 16;
    ov.mode = RunMode::Reference;
    Params p = size_parameters(n, 4 * int64_t(n) * n + 2 * n + 8, 0.2, ov);
    RobustF2Algo robust(p, SeedPath{seed, {}});
    BreakCertificate cert = gram_attack(robust, n, k);
    if (!cert.feasible && cert.max_probe_rel_err <= 0.2) robust_clean++;
  }

  bool ok = naive_broken == 10 && rounds_ok && robust_clean == 10;
  std::ostringstream d;
  d << naive_broken << "/10 naive breaks at ratio <= 1e-2 within " << max_rounds
    << " rounds, " << robust_clean << "/10 robust runs unmoved";
  report(3, "baseline break", ok, d.str());
}

void criterion_4() {
  const long double shrink = 1.0L - (long double)(g_params.eta * g_params.eta) / 200.0L;
  int64_t events = 0, violations = 0;
  for (const auto* batch : {&g_oblivious, &g_adaptive}) {
    for (const auto& run : batch->events) {
      for (const auto& ev : run) {
        if (!ev.applied) continue;
        events++;
        if (ev.metric_old < 0 || ev.metric_new > shrink * ev.metric_old)
          violations++;
      }
    }
  }
  bool ok = violations == 0 && events > 0;
  std::ostringstream d;
  d << events << " iterate updates shadow-checked, " << violations
    << " violations of the (1 - eta^2/200) contraction";
  report(4, "progress lemma", ok, d.str());
}

void criterion_5() {
  const double eps = 0.5;
  int recovered = 0, clean = 0;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    ExperimentConfig cfg;
    cfg.task = "heavy";
    cfg.n = 1024;
    cfg.eps_hh = eps;
    cfg.seeds = 1;
    cfg.master_seed = seed;
    cfg.sizing.B = 16;
    cfg.mode = RunMode::Reference;
    cfg.sizing.mode = RunMode::Reference;
    cfg.m = 1;  // resized internally to stream + probes
    cfg.write_transcripts = false;
    BatchOutcome out = run_batch(cfg);
    if (out.runs[0].planted_hit) recovered++;
    if (out.runs[0].clean) clean++;
  }

  // exact-oracle margin separation on random planted vectors
  bool margins_ok = true;
  Rng64 rng(0x5e9a);
  for (int trial = 0; trial < 1000; ++trial) {
    const uint32_t n = 64;
    std::vector<double> x(n, 0.0);
    double rest = 0;
    for (uint32_t i = 1; i < n; ++i) {
      x[i] = double(int64_t(rng.next_below(512))) - 256.0;
      rest += x[i] * x[i];
    }
    double spike = std::max(2.0 * std::sqrt(rest), 8.0);
    x[0] = spike;
    double norm = std::sqrt(rest + spike * spike);
    double e2n2 = eps * eps * norm * norm;
    double thresh = 1.15 * e2n2;
    double heavy_m = probe_margin_exact(x[0], norm, eps);
    if (!(heavy_m >= 1.25 * e2n2 * (1 - 1e-12) && heavy_m > thresh))
      margins_ok = false;
    for (uint32_t i = 1; i < n; ++i) {
      if (std::abs(x[i]) > 0.5 * eps * norm) continue;
      double light_m = probe_margin_exact(x[i], norm, eps);
      if (!(light_m <= 0.8525 * e2n2 * (1 + 1e-12) && light_m < thresh))
        margins_ok = false;
    }
  }

  bool ok = recovered == 100 && clean == 100 && margins_ok;
  std::ostringstream d;
  d << recovered << "/100 planted recovered, " << clean
    << "/100 clean of sub-threshold hits, margin gap "
    << (margins_ok ? "1.25/0.8525 vs 1.15 holds" : "VIOLATED");
  report(5, "heavy hitters", ok, d.str());
}

void criterion_6() {
  ExperimentConfig cfg;
  cfg.task = "tri";
  cfg.n = 1024;
  cfg.m = 10000;
  cfg.seeds = 100;
  cfg.master_seed = 6006;
  cfg.tri_kappa = 4.0;
  cfg.tri_C = 2.0;
  cfg.tri_loss = "lp_p";
  cfg.tri_shape = 1.0;
  cfg.tri_sketch = "exact";
  cfg.adversary = "deletion_heavy";  // exercises the reset path
  cfg.jobs = hw_jobs();
  cfg.write_transcripts = false;
  BatchOutcome out = run_batch(cfg);

  int env_ok = 0, contr_ok = 0, bound_ok = 0, resets = 0;
  for (const auto& r : out.runs) {
    if (!r.failed && r.envelope_ok) env_ok++;
    if (!r.failed && r.contraction_ok) contr_ok++;
    if (!r.failed && r.reset_bound_ok) bound_ok++;
    resets += int(r.resets_total);
  }
  bool ok = env_ok == 100 && contr_ok == 100 && bound_ok == 100;
  std::ostringstream d;
  d << env_ok << "/100 in [F, kappa^(3H+1) F], " << contr_ok
    << "/100 resets contract by 2/3, " << bound_ok << "/100 within the bound ("
    << resets << " resets total)";
  report(6, "triangle framework", ok, d.str());
}

void criterion_7() {
  bool all = true;
  std::ostringstream d;
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
    LossSpec spec = parse_loss(fam, shape);
    BetaCheckReport b = check_beta_triangle(spec, 10000, 0xacce97);
    if (!b.pass) {
      all = false;
      d << spec.name() << " beta FAIL; ";
    }
    if (spec.bernstein_composed()) {
      BernsteinCheckReport r = check_bernstein_derivative(spec, 100);
      if (!r.pass) {
        all = false;
        d << spec.name() << " bernstein FAIL; ";
      }
    }
  }
  if (all) d << "6 families, beta at 10^4 samples, bernstein on 100-point grid";
  report(7, "loss catalogue", all, d.str());
}

void criterion_8() {
  ExperimentConfig cfg;
  cfg.eps = 0.2;
  cfg.sweep_n = {1024, 4096, 16384};
  cfg.sweep_m = 4096;
  cfg.mode = RunMode::Streaming;
  cfg.sizing.mode = RunMode::Streaming;
  // randomized realization at a measurable desk shape: the formulas keep
  // their n-dependence, the fixed sketch accuracy keeps b constant
  cfg.sizing.H = 4;
  cfg.sizing.c_B = 3.6e-7;
  cfg.sizing.c_L = 3.6e-4;
  cfg.sizing.c_delta = 2e-5;
  cfg.sizing.sketch_eps = 0.3;
  cfg.sizing.realization = SketchRealization::Random;
  cfg.sizing.pool_slack = 4;
  SpaceSweepResult res = run_space_sweep(cfg);

  double growth = res.growth();
  bool ok = res.rows.size() == 3 && growth > 0 && growth <= 3.0;
  std::ostringstream d;
  d << "peak words";
  for (const auto& r : res.rows) d << " n=" << r.n << ":" << r.peak_words;
  d << ", growth " << growth << "x (<= 3x)";
  report(8, "space scaling", ok, d.str());
}

void criterion_9() {
  fs::path d1 = fs::temp_directory_path() / "tsketch_accept_det1";
  fs::path d2 = fs::temp_directory_path() / "tsketch_accept_det2";
  fs::remove_all(d1);
  fs::remove_all(d2);

  ExperimentConfig cfg = batch_config("oblivious_random", 1001);
  cfg.seeds = 100;
  cfg.write_transcripts = true;
  cfg.out_dir = d1.string();
  run_batch(cfg);
  cfg.out_dir = d2.string();
  run_batch(cfg);

  bool ok = slurp(d1 / "summary.csv") == slurp(d2 / "summary.csv");
  int mismatches = ok ? 0 : 1;
  for (int s = 0; s < 100 && ok; ++s) {
    std::string name = "transcript_seed" + std::to_string(s) + ".csv";
    if (slurp(d1 / name) != slurp(d2 / name)) {
      ok = false;
      mismatches++;
    }
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
  std::ostringstream d;
  d << (ok ? "summary + 100 transcripts byte-identical across reruns"
           : "outputs differ across reruns");
  report(9, "determinism", ok, d.str());
}

}  // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d/9 criteria passed in %.1fs\n", 9 - g_failures, wall);
  return g_failures == 0 ? 0 : 1;
}
