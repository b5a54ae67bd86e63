#include "tsketch/stream_io.hpp"

#include <fstream>
#include <sstream>

namespace tsketch {

std::vector<Update> read_stream(std::istream& in) {
  std::vector<Update> out;
  std::string line;
  int64_t lineno = 0, prev_t = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Update u;
    if (!(ls >> u.t >> u.a >> u.delta))
      fail(ErrorKind::Io, "stream parse error at line " + std::to_string(lineno));
    std::string rest;
    if (ls >> rest)
      fail(ErrorKind::Io, "trailing tokens at line " + std::to_string(lineno));
    if (u.t <= prev_t)
      fail(ErrorKind::Io, "time index not strictly increasing at line " +
                              std::to_string(lineno));
    prev_t = u.t;
    out.push_back(u);
  }
  return out;
}

std::vector<Update> read_stream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open stream file " + path);
  return read_stream(in);
}

void write_stream(std::ostream& out, const std::vector<Update>& updates) {
  for (const auto& u : updates)
    out << u.t << ' ' << u.a << ' ' << u.delta << '\n';
}

void write_stream_file(const std::string& path, const std::vector<Update>& updates) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open output stream file " + path);
  write_stream(out, updates);
}

}  // namespace tsketch
