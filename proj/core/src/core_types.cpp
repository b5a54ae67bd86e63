#include "tsketch/core_types.hpp"

#include <cmath>
#include <sstream>

namespace tsketch {

void FrequencyVector::apply(const Update& u) { apply_update(*this, u); }

long double FrequencyVector::f2() const {
  unsigned __int128 acc = 0;
  for (int64_t e : entries_) {
    __int128 s = __int128(e) * e;
    acc += (unsigned __int128)s;
  }
  // split to keep the long double conversion exact for desk-scale magnitudes
  const unsigned __int128 lo_mask = ~uint64_t(0);
  long double hi = (long double)(uint64_t)(acc >> 64);
  long double lo = (long double)(uint64_t)(acc & lo_mask);
  return hi * 18446744073709551616.0L + lo;
}

long double FrequencyVector::l1() const {
  long double acc = 0;
  for (int64_t e : entries_) acc += e < 0 ? -(long double)e : (long double)e;
  return acc;
}

bool FrequencyVector::is_zero() const {
  for (int64_t e : entries_)
    if (e != 0) return false;
  return true;
}

void apply_update(FrequencyVector& v, const Update& u) {
  if (u.a < 1 || u.a > v.n())
    fail(ErrorKind::Index, "update coordinate " + std::to_string(u.a) +
                               " out of range 1.." + std::to_string(v.n()));
  int64_t& e = v.raw()[u.a - 1];
  e += u.delta;
  if (e > kEntryMagnitudeCap || e < -kEntryMagnitudeCap)
    fail(ErrorKind::Overflow, "frequency entry magnitude exceeds 2^62");
}

const char* seed_role_name(SeedRole r) {
  switch (r) {
    case SeedRole::BlockMatrix: return "block";
    case SeedRole::Corrector: return "corrector";
    case SeedRole::L1Matrix: return "l1";
    case SeedRole::Adversary: return "adversary";
    case SeedRole::StreamGen: return "stream";
    case SeedRole::Baseline: return "baseline";
  }
  return "?";
}

uint64_t SeedPath::digest() const {
  uint64_t d = mix64(master_seed, 0x7473746b65746368ULL);
  for (const auto& s : path) {
    d = mix64(d, mix64(uint64_t(s.level) * 0x100000001b3ULL ^
                       uint64_t(s.ordinal) + 0x9e3779b9ULL * uint64_t(s.role)));
    d = mix64(d, uint64_t(s.ordinal));
  }
  return d;
}

std::string SeedPath::to_string() const {
  std::ostringstream os;
  os << "seed:" << master_seed;
  for (const auto& s : path)
    os << "/" << s.level << "." << s.ordinal << "." << seed_role_name(s.role);
  return os.str();
}

SeedPath derive_seed(const SeedPath& base, uint32_t level, int64_t ordinal,
                     SeedRole role) {
  if (level < 1) fail(ErrorKind::Config, "derive_seed: level must be >= 1");
  if (ordinal < 0) fail(ErrorKind::Config, "derive_seed: ordinal must be >= 0");
  SeedPath out = base;
  out.path.push_back({level, ordinal, role});
  return out;
}

double Params::delta_fail() const {
  if (log2_inv_delta <= 0) return 1.0;
  if (log2_inv_delta >= 1074) return 0x1.0p-1074;  // smallest denormal, still in (0,1)
  return std::exp2(-log2_inv_delta);
}

bool Params::use_exact() const {
  switch (realization) {
    case SketchRealization::Exact: return true;
    case SketchRealization::Random: return false;
    case SketchRealization::Auto: break;
  }
  // A sized sketch at least as large as the dense vector is realized densely:
  // same contract, strictly better accuracy, no more memory.
  return double(g) * double(b) >= double(n);
}

void Params::validate() const {
  if (n < 1) fail(ErrorKind::Config, "params: n must be >= 1");
  if (m < 1) fail(ErrorKind::Config, "params: m must be >= 1");
  if (!(eps > 0 && eps < 1)) fail(ErrorKind::Config, "params: eps must be in (0,1)");
  if (B < 2) fail(ErrorKind::Config, "params: B must be >= 2");
  if (H < 1) fail(ErrorKind::Config, "params: H must be >= 1");
  if (L_max < 1) fail(ErrorKind::Config, "params: L_max must be >= 1");
  if (g < 1 || b < 1) fail(ErrorKind::Config, "params: sketch shape unset");
  double cover = double(H) * std::log(double(B));
  if (cover < std::log(double(m)) - 1e-9)
    fail(ErrorKind::Config, "params: B^H < m, tree cannot cover the stream");
  double want_eta = eps / (100.0 * double(H));
  if (std::abs(eta - want_eta) > 1e-15 * want_eta)
    fail(ErrorKind::Config, "params: eta != eps/(100 H)");
}

}  // namespace tsketch
