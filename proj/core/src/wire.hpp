// Little-endian binary blob helpers shared by the serializers.
#pragma once

#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "tsketch/common.hpp"

namespace tsketch::wire {

inline void put_u64(std::ostream& out, uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = char((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

inline uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) fail(ErrorKind::Io, "blob truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(buf[i]) << (8 * i);
  return v;
}

inline void put_i64(std::ostream& out, int64_t v) { put_u64(out, uint64_t(v)); }
inline int64_t get_i64(std::istream& in) { return int64_t(get_u64(in)); }

inline void put_f64(std::ostream& out, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

inline double get_f64(std::istream& in) {
  uint64_t v = get_u64(in);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

inline void put_f64_vec(std::ostream& out, const std::vector<double>& v) {
  put_u64(out, v.size());
  for (double d : v) put_f64(out, d);
}

inline std::vector<double> get_f64_vec(std::istream& in) {
  std::vector<double> v(get_u64(in));
  for (double& d : v) d = get_f64(in);
  return v;
}

inline void put_i64_vec(std::ostream& out, const std::vector<int64_t>& v) {
  put_u64(out, v.size());
  for (int64_t d : v) put_i64(out, d);
}

inline std::vector<int64_t> get_i64_vec(std::istream& in) {
  std::vector<int64_t> v(get_u64(in));
  for (int64_t& d : v) d = get_i64(in);
  return v;
}

}  // namespace tsketch::wire
