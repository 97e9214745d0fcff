#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace csn {

// One formatting routine for every CSV so that recomputed statistics can be
// compared against emitted files byte for byte.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string join_csv(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

}  // namespace csn
