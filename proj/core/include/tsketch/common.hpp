// Shared error type and 64-bit mixing primitives.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tsketch {

enum class ErrorKind {
  Config,
  Sizing,
  Index,
  Incompatible,
  StreamOverrun,
  Overflow,
  Probe,
  IterateCap,
  Io,
  Attack,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

// splitmix64 finalizer; full-period bijection on 64-bit words.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

// Counter-mode stream of pseudorandom 64-bit words from a fixed key.
class Rng64 {
 public:
  explicit Rng64(uint64_t key) : key_(key), ctr_(0) {}
  uint64_t next() { return mix64(key_ ^ mix64(++ctr_)); }
  // uniform in [0, 1), 53-bit resolution
  double next_unit() { return double(next() >> 11) * 0x1.0p-53; }
  // uniform in [0, bound)
  uint64_t next_below(uint64_t bound) {
    // modulo bias is < 2^-40 for desk-scale bounds
    return next() % bound;
  }

 private:
  uint64_t key_;
  uint64_t ctr_;
};

}  // namespace tsketch
