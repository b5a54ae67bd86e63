// Stream file format: one update per line, ASCII, "t a delta".
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tsketch/core_types.hpp"

namespace tsketch {

std::vector<Update> read_stream(std::istream& in);
std::vector<Update> read_stream_file(const std::string& path);

void write_stream(std::ostream& out, const std::vector<Update>& updates);
void write_stream_file(const std::string& path, const std::vector<Update>& updates);

}  // namespace tsketch
