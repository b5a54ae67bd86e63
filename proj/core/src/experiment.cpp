#include "tsketch/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "tsketch/stream_io.hpp"

namespace tsketch {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int64_t to_i64(const std::string& v, const std::string& key) {
  try {
    size_t pos;
    int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (...) {
    fail(ErrorKind::Config, "bad integer for " + key + ": '" + v + "'");
  }
}

double to_f64(const std::string& v, const std::string& key) {
  try {
    size_t pos;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (...) {
    fail(ErrorKind::Config, "bad number for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::Config, "bad bool for " + key + ": '" + v + "'");
}

}  // namespace

void ExperimentConfig::set_kv(const std::string& dotted, const std::string& value) {
  auto dot = dotted.find('.');
  std::string sec = dot == std::string::npos ? "experiment" : dotted.substr(0, dot);
  std::string key = dot == std::string::npos ? dotted : dotted.substr(dot + 1);
  const std::string full = sec + "." + key;

  if (sec == "experiment") {
    if (key == "task") task = value;
    else if (key == "n") n = uint32_t(to_i64(value, full));
    else if (key == "m") m = to_i64(value, full);
    else if (key == "eps") eps = to_f64(value, full);
    else if (key == "seeds") seeds = to_i64(value, full);
    else if (key == "master_seed") master_seed = uint64_t(to_i64(value, full));
    else if (key == "mode") {
      if (value == "reference") mode = RunMode::Reference;
      else if (value == "streaming") mode = RunMode::Streaming;
      else fail(ErrorKind::Config, "mode must be reference|streaming");
      sizing.mode = mode;
    } else if (key == "adversary") adversary = value;
    else if (key == "jobs") jobs = int(to_i64(value, full));
    else fail(ErrorKind::Config, "unknown key " + full);
  } else if (sec == "sizing") {
    if (key == "c_B") sizing.c_B = to_f64(value, full);
    else if (key == "c_L") sizing.c_L = to_f64(value, full);
    else if (key == "c_delta") sizing.c_delta = to_f64(value, full);
    else if (key == "c_b") sizing.c_b = to_f64(value, full);
    else if (key == "c_g") sizing.c_g = to_f64(value, full);
    else if (key == "B") sizing.B = to_i64(value, full);
    else if (key == "H") sizing.H = uint32_t(to_i64(value, full));
    else if (key == "L_max") sizing.L_max = to_i64(value, full);
    else if (key == "log2_inv_delta") sizing.log2_inv_delta = to_f64(value, full);
    else if (key == "sketch_eps") sizing.sketch_eps = to_f64(value, full);
    else if (key == "sketch_log2_inv_delta")
      sizing.sketch_log2_inv_delta = to_f64(value, full);
    else if (key == "pool_slack") sizing.pool_slack = to_i64(value, full);
    else if (key == "memory_cap_words") sizing.memory_cap_words = to_i64(value, full);
    else if (key == "delta_max") sizing.delta_max = to_i64(value, full);
    else if (key == "realization") {
      if (value == "auto") sizing.realization = SketchRealization::Auto;
      else if (value == "exact") sizing.realization = SketchRealization::Exact;
      else if (value == "random") sizing.realization = SketchRealization::Random;
      else fail(ErrorKind::Config, "realization must be auto|exact|random");
    } else fail(ErrorKind::Config, "unknown key " + full);
  } else if (sec == "tri") {
    if (key == "kappa") tri_kappa = to_f64(value, full);
    else if (key == "C") tri_C = to_f64(value, full);
    else if (key == "loss") tri_loss = value;
    else if (key == "shape") tri_shape = to_f64(value, full);
    else if (key == "sketch") tri_sketch = value;
    else if (key == "l1_rows") tri_l1_rows = to_i64(value, full);
    else fail(ErrorKind::Config, "unknown key " + full);
  } else if (sec == "heavy") {
    if (key == "eps_hh") eps_hh = to_f64(value, full);
    else if (key == "background") heavy_background = to_i64(value, full);
    else fail(ErrorKind::Config, "unknown key " + full);
  } else if (sec == "sweep") {
    if (key == "n_list") {
      sweep_n.clear();
      std::istringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ','))
        sweep_n.push_back(uint32_t(to_i64(trim(tok), full)));
    } else if (key == "m") sweep_m = to_i64(value, full);
    else fail(ErrorKind::Config, "unknown key " + full);
  } else if (sec == "output") {
    if (key == "dir") out_dir = value;
    else if (key == "transcripts") write_transcripts = to_bool(value, full);
    else if (key == "checkpoints") write_checkpoints = to_bool(value, full);
    else fail(ErrorKind::Config, "unknown key " + full);
  } else {
    fail(ErrorKind::Config, "unknown section [" + sec + "]");
  }
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  ExperimentConfig cfg;
  std::string line, section = "experiment";
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": bad section");
      section = s.substr(1, s.size() - 2);
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    // strip trailing comment
    auto hash = value.find('#');
    if (hash != std::string::npos) value = trim(value.substr(0, hash));
    try {
      cfg.set_kv(section + "." + key, value);
    } catch (const Error& e) {
      fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config " + path);
  return parse(in);
}

void ExperimentConfig::validate() const {
  if (task != "f2" && task != "heavy" && task != "tri")
    fail(ErrorKind::Config, "task must be f2|heavy|tri");
  if (n < 2) fail(ErrorKind::Config, "n must be >= 2");
  if (m < 1) fail(ErrorKind::Config, "m must be >= 1");
  if (!(eps > 0 && eps < 1)) fail(ErrorKind::Config, "eps must be in (0,1)");
  if (seeds < 1) fail(ErrorKind::Config, "seeds must be >= 1");
  if (task == "tri") {
    LossSpec loss = parse_loss(tri_loss, tri_shape);
    if (!(tri_kappa > 2 * loss.beta() + 1))
      fail(ErrorKind::Config, "tri: kappa must exceed 2*beta+1 = " +
                                  std::to_string(2 * loss.beta() + 1));
    if (tri_sketch != "exact" && tri_sketch != "l1")
      fail(ErrorKind::Config, "tri: sketch must be exact|l1");
  }
  if (task == "heavy" && !(eps_hh > 0 && eps_hh < 1))
    fail(ErrorKind::Config, "heavy: eps_hh must be in (0,1)");
}

Params ExperimentConfig::make_params() const {
  SizingOverrides ov = sizing;
  ov.mode = mode;
  double e = task == "heavy" ? eps_hh * eps_hh / 100.0 : eps;
  return size_parameters(n, m, e, ov);
}

// ---------------------------------------------------------------------------

PlantedVector make_planted(uint32_t n, double eps_hh, int64_t background,
                           uint64_t seed) {
  PlantedVector pv;
  Rng64 rng(mix64(seed, 0x9ea7));
  pv.planted = uint32_t(rng.next_below(n)) + 1;
  pv.background = background;
  // one coordinate at 1.01 * eps_hh * ||x||, the rest flat
  double rho = 1.01 * eps_hh;
  double vf = double(background) *
              std::sqrt(rho * rho * double(n - 1) / (1.0 - rho * rho));
  pv.planted_value = llround(vf);

  int64_t t = 0;
  double sq = 0;
  for (uint32_t i = 1; i <= n; ++i) {
    int64_t val = i == pv.planted ? pv.planted_value : background;
    pv.stream.push_back({++t, i, val});
    sq += double(val) * double(val);
  }
  pv.norm = std::sqrt(sq);
  // deterministic shuffle so the planted coordinate is not positionally last
  for (size_t i = pv.stream.size(); i > 1; --i) {
    size_t j = size_t(rng.next_below(i));
    std::swap(pv.stream[i - 1], pv.stream[j]);
  }
  for (size_t i = 0; i < pv.stream.size(); ++i) pv.stream[i].t = int64_t(i) + 1;
  return pv;
}

namespace {

class FileStrategy : public AdversaryStrategy {
 public:
  explicit FileStrategy(std::vector<Update> updates) : updates_(std::move(updates)) {}
  std::optional<Update> next(const GameTranscript& g) override {
    size_t i = g.steps.size();
    if (i >= updates_.size()) return std::nullopt;
    return updates_[i];
  }
  std::string kind() const override { return "file"; }

 private:
  std::vector<Update> updates_;
};

std::unique_ptr<AdversaryStrategy> strategy_for(const ExperimentConfig& cfg,
                                                uint64_t seed) {
  if (cfg.adversary.rfind("file:", 0) == 0)
    return std::make_unique<FileStrategy>(
        read_stream_file(cfg.adversary.substr(5)));
  return make_strategy(cfg.adversary, cfg.n, seed, cfg.eps);
}

struct SeedJob {
  RunSummary summary;
  std::vector<IterateEvent> events;
  std::string transcript;  // rendered CSV (empty when not requested)
  std::string events_csv;  // iterate events, so summaries recompute from disk
  std::string probes_csv;  // heavy task
  std::string checkpoint;  // serialized final TreeState (f2 task)
};

SeedJob run_f2_seed(const ExperimentConfig& cfg, int64_t seed_index) {
  SeedJob job;
  uint64_t run_seed = mix64(cfg.master_seed, uint64_t(seed_index));
  job.summary.seed = run_seed;

  Params params = cfg.make_params();
  SeedPath master{mix64(run_seed, 0xa19a), {}};
  RobustF2Algo algo(params, master);
  auto strat = strategy_for(cfg, mix64(run_seed, 0xad3e));

  GameTranscript g = run_game(algo, *strat, cfg.m, cfg.eps, cfg.n);
  g.adversary_seed = run_seed;

  RunSummary& s = job.summary;
  s.max_rel_err = g.verdict.max_rel_err;
  s.break_time = g.verdict.break_time;
  s.failed = g.verdict.algorithm_failed;
  s.failure = g.verdict.failure;
  s.iterate_updates = g.verdict.iterate_updates;
  s.max_block_updates = g.verdict.max_block_updates;
  s.updates_per_level.assign(params.H + 1, 0);
  for (const auto& e : g.events)
    if (e.applied) s.updates_per_level[e.level - 1]++;
  s.peak_words = algo.tree().space_report().total_words();

  job.events = g.events;
  if (cfg.write_transcripts && !cfg.out_dir.empty()) {
    std::ostringstream os;
    write_transcript_csv(os, g);
    job.transcript = os.str();
    std::ostringstream es;
    es << "t,level,alpha,applied,update_count\n";
    char buf[96];
    for (const auto& e : g.events) {
      std::snprintf(buf, sizeof buf, "%lld,%u,%.17g,%d,%lld\n", (long long)e.t,
                    e.level, e.alpha, e.applied ? 1 : 0,
                    (long long)e.update_count);
      es << buf;
    }
    job.events_csv = es.str();
  }
  if (cfg.write_checkpoints && !cfg.out_dir.empty()) {
    std::ostringstream os(std::ios::binary);
    algo.tree().serialize(os);
    job.checkpoint = os.str();
  }
  return job;
}

SeedJob run_heavy_seed(const ExperimentConfig& cfg, int64_t seed_index) {
  SeedJob job;
  uint64_t run_seed = mix64(cfg.master_seed, uint64_t(seed_index));
  job.summary.seed = run_seed;

  PlantedVector pv = make_planted(cfg.n, cfg.eps_hh, cfg.heavy_background, run_seed);
  int64_t need = int64_t(pv.stream.size()) + 3 * int64_t(cfg.n) + 8;
  ExperimentConfig local = cfg;
  local.m = std::max(cfg.m, need);
  Params params = local.make_params();

  SeedPath master{mix64(run_seed, 0xa19a), {}};
  TreeState tree(params, master);
  for (const auto& u : pv.stream) tree.process_update(u);

  HeavyHitterReport rep = find_heavy(tree, cfg.eps_hh);

  RunSummary& s = job.summary;
  s.planted = pv.planted;
  s.planted_hit = std::find(rep.hits.begin(), rep.hits.end(), pv.planted) !=
                  rep.hits.end();
  s.clean = true;
  double exclusion = 0.5 * cfg.eps_hh * pv.norm;
  for (uint32_t h : rep.hits) {
    int64_t val = h == pv.planted ? pv.planted_value : pv.background;
    if (std::abs(double(val)) <= exclusion) s.clean = false;
  }
  s.peak_words = tree.space_report().total_words();

  if (cfg.write_transcripts && !cfg.out_dir.empty()) {
    std::ostringstream os;
    os << "t,i,S2,T2,margin\n";
    char buf[160];
    for (const auto& r : rep.probes) {
      std::snprintf(buf, sizeof buf, "%lld,%u,%.17g,%.17g,%.17g\n",
                    (long long)rep.t, r.i, r.S2, r.T2, r.margin);
      os << buf;
    }
    job.probes_csv = os.str();
  }
  return job;
}

SeedJob run_tri_seed(const ExperimentConfig& cfg, int64_t seed_index) {
  SeedJob job;
  uint64_t run_seed = mix64(cfg.master_seed, uint64_t(seed_index));
  job.summary.seed = run_seed;

  LossSpec loss = parse_loss(cfg.tri_loss, cfg.tri_shape);
  TriSketchKind kind = cfg.tri_sketch == "l1" ? TriSketchKind::L1Cauchy
                                              : TriSketchKind::ExactOracle;
  TriFunction fn = make_tri_function(loss, kind, cfg.n, cfg.m, cfg.sizing.delta_max);
  // the tri summary compares against the exact shadow, so this task always
  // runs with the reference instruments on
  TriParams tp = size_tri(fn, cfg.n, cfg.m, cfg.tri_C, cfg.tri_kappa,
                          RunMode::Reference, cfg.tri_l1_rows);
  SeedPath master{mix64(run_seed, 0xa19a), {}};
  TriEstimator est(fn, tp, master);
  auto strat = strategy_for(cfg, mix64(run_seed, 0xad3e));

  RunSummary& s = job.summary;
  s.min_over = 1e300;
  const double shrink = (cfg.tri_kappa - fn.beta()) / (fn.beta() + 1.0);
  const double envelope = est.envelope();
  const double vfloor = fn.value_floor;

  GameTranscript fake;  // the strategy interface wants a transcript view
  std::ostringstream os;
  if (cfg.write_transcripts && !cfg.out_dir.empty()) os << "t,estimate,truth,ratio\n";
  char buf[160];
  for (int64_t t = 1; t <= cfg.m; ++t) {
    auto mu = strat->next(fake);
    if (!mu) break;
    Update u = *mu;
    TriStepResult r;
    try {
      r = est.process_update(u);
    } catch (const Error& e) {
      s.failed = true;
      s.failure = e.what();
      break;
    }
    GameStep gs;
    gs.u = u;
    gs.response = r.estimate;
    fake.steps.push_back(gs);

    double truth = double(est.true_value());
    double denom = std::max(truth, vfloor);
    double ratio = r.estimate / denom;
    if (truth > vfloor) {
      s.max_over = std::max(s.max_over, ratio);
      s.min_over = std::min(s.min_over, ratio);
      if (fn.beta() == 1.0 && r.estimate < truth * (1 - 1e-9)) s.envelope_ok = false;
      if (r.estimate > envelope * truth * (1 + 1e-9)) s.envelope_ok = false;
    }
    for (const auto& ev : r.events) {
      s.resets_total++;
      if (ev.metric_old >= 0 && ev.metric_new >= 0 && ev.metric_old > vfloor) {
        if (ev.metric_new > (1.0 / shrink) * ev.metric_old * (1 + 1e-9))
          s.contraction_ok = false;
      }
    }
    if (cfg.write_transcripts && !cfg.out_dir.empty()) {
      std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n", (long long)t,
                    r.estimate, truth, ratio);
      os << buf;
    }
  }
  for (uint32_t lv = 1; lv <= tp.H; ++lv) {
    if (est.max_block_resets_at(lv) > tp.L_max_tri) s.reset_bound_ok = false;
  }
  job.transcript = os.str();
  return job;
}

}  // namespace

BatchOutcome run_batch(const ExperimentConfig& cfg) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();

  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  std::vector<SeedJob> jobs(size_t(cfg.seeds));
  int nthreads = std::max(1, std::min<int>(cfg.jobs, int(cfg.seeds)));
  auto worker = [&](int w) {
    for (int64_t s = w; s < cfg.seeds; s += nthreads) {
      if (cfg.task == "f2") jobs[size_t(s)] = run_f2_seed(cfg, s);
      else if (cfg.task == "heavy") jobs[size_t(s)] = run_heavy_seed(cfg, s);
      else jobs[size_t(s)] = run_tri_seed(cfg, s);
    }
  };
  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }

  BatchOutcome out;
  for (int64_t s = 0; s < cfg.seeds; ++s) {
    out.runs.push_back(jobs[size_t(s)].summary);
    out.events.push_back(std::move(jobs[size_t(s)].events));
  }

  if (!cfg.out_dir.empty()) {
    for (int64_t s = 0; s < cfg.seeds; ++s) {
      const SeedJob& j = jobs[size_t(s)];
      if (!j.transcript.empty()) {
        std::string name = cfg.task == "tri" ? "tri_seed" : "transcript_seed";
        std::ofstream f(cfg.out_dir + "/" + name + std::to_string(s) + ".csv",
                        std::ios::binary);
        f << j.transcript;
      }
      if (!j.events_csv.empty()) {
        std::ofstream f(cfg.out_dir + "/events_seed" + std::to_string(s) + ".csv",
                        std::ios::binary);
        f << j.events_csv;
      }
      if (!j.probes_csv.empty()) {
        std::ofstream f(cfg.out_dir + "/heavy_seed" + std::to_string(s) + ".csv",
                        std::ios::binary);
        f << j.probes_csv;
      }
      if (!j.checkpoint.empty()) {
        std::ofstream f(cfg.out_dir + "/checkpoint_seed" + std::to_string(s) + ".bin",
                        std::ios::binary);
        f << j.checkpoint;
      }
    }
    std::ofstream f(cfg.out_dir + "/summary.csv", std::ios::binary);
    write_summary_csv(f, cfg, out);
  }

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void write_summary_csv(std::ostream& out, const ExperimentConfig& cfg,
                       const BatchOutcome& outcome) {
  char buf[256];
  if (cfg.task == "heavy") {
    out << "seed,planted,planted_hit,clean,peak_words\n";
    for (const auto& r : outcome.runs) {
      std::snprintf(buf, sizeof buf, "%llu,%u,%d,%d,%lld\n",
                    (unsigned long long)r.seed, r.planted, r.planted_hit ? 1 : 0,
                    r.clean ? 1 : 0, (long long)r.peak_words);
      out << buf;
    }
    return;
  }
  if (cfg.task == "tri") {
    out << "seed,max_over,min_over,resets,contraction_ok,reset_bound_ok,envelope_ok,status\n";
    for (const auto& r : outcome.runs) {
      std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%lld,%d,%d,%d,%s\n",
                    (unsigned long long)r.seed, r.max_over, r.min_over,
                    (long long)r.resets_total, r.contraction_ok ? 1 : 0,
                    r.reset_bound_ok ? 1 : 0, r.envelope_ok ? 1 : 0,
                    r.failed ? "failed" : "ok");
      out << buf;
    }
    return;
  }
  size_t levels = 0;
  for (const auto& r : outcome.runs)
    levels = std::max(levels, r.updates_per_level.size());
  out << "seed,max_rel_err,break_time,iterate_updates,max_block_updates,peak_words,status";
  for (size_t l = 1; l <= levels; ++l) out << ",iter_l" << l;
  out << "\n";
  for (const auto& r : outcome.runs) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%lld,%lld,%lld,%lld,%s",
                  (unsigned long long)r.seed, r.max_rel_err,
                  (long long)r.break_time, (long long)r.iterate_updates,
                  (long long)r.max_block_updates, (long long)r.peak_words,
                  r.failed ? "failed" : "ok");
    out << buf;
    for (size_t l = 0; l < levels; ++l)
      out << ','
          << (l < r.updates_per_level.size() ? r.updates_per_level[l] : 0);
    out << "\n";
  }
}

double SpaceSweepResult::growth() const {
  if (rows.size() < 2 || rows.front().peak_words <= 0) return 0;
  return double(rows.back().peak_words) / double(rows.front().peak_words);
}

SpaceSweepResult run_space_sweep(const ExperimentConfig& cfg) {
  SpaceSweepResult res;
  for (uint32_t n : cfg.sweep_n) {
    ExperimentConfig local = cfg;
    local.n = n;
    local.m = cfg.sweep_m;
    Params params = size_parameters(n, cfg.sweep_m, cfg.eps, local.sizing);
    SeedPath master{mix64(cfg.master_seed, n), {}};
    TreeState tree(params, master);
    auto strat = make_oblivious_random(n, mix64(cfg.master_seed, n ^ 0x57ee), 64);
    GameTranscript fake;
    int64_t peak = tree.space_report().total_words();
    for (int64_t t = 1; t <= cfg.sweep_m; ++t) {
      auto mu = strat->next(fake);
      Update u = *mu;
      GameStep gs;
      gs.u = u;
      tree.process_update(u);
      fake.steps.push_back(gs);
      if (t % 512 == 0 || t == cfg.sweep_m)
        peak = std::max(peak, tree.space_report().total_words());
    }
    SpaceRow row;
    row.n = n;
    row.B = params.B;
    row.H = params.H;
    row.g = params.g;
    row.b = params.b;
    SpaceReport sr = tree.space_report();
    for (const auto& lr : sr.rows) row.slots += lr.slots;
    row.peak_words = peak;
    res.rows.push_back(row);
  }
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream f(cfg.out_dir + "/space.csv", std::ios::binary);
    f << "n,B,H,g,b,slots,peak_words\n";
    char buf[200];
    for (const auto& r : res.rows) {
      std::snprintf(buf, sizeof buf, "%u,%lld,%u,%lld,%lld,%lld,%lld\n", r.n,
                    (long long)r.B, r.H, (long long)r.g, (long long)r.b,
                    (long long)r.slots, (long long)r.peak_words);
      f << buf;
    }
  }
  return res;
}

}  // namespace tsketch
