#include "mfg/path.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>

#include "mfg/io.hpp"

namespace mfg {

int PathRecord::state_at(double t) const {
  int s = initial_state;
  for (const auto& j : jumps) {
    if (j.time <= t) s = j.state;
    else break;
  }
  return s;
}

int PathRecord::state_before(double t) const {
  int s = initial_state;
  for (const auto& j : jumps) {
    if (j.time < t) s = j.state;
    else break;
  }
  return s;
}

bool PathRecord::valid() const {
  double prev_t = 0.0;
  int prev_s = initial_state;
  for (const auto& j : jumps) {
    if (!(j.time > prev_t)) return false;
    if (j.time >= horizon) return false;  // continuous at the horizon
    if (j.state == prev_s) return false;
    prev_t = j.time;
    prev_s = j.state;
  }
  return true;
}

std::string PathRecord::to_csv() const {
  std::string out;
  out += fmt_double(0.0);
  out += ',';
  out += std::to_string(initial_state);
  out += '\n';
  for (const auto& j : jumps) {
    out += fmt_double(j.time);
    out += ',';
    out += std::to_string(j.state);
    out += '\n';
  }
  return out;
}

PathRecord PathRecord::from_csv(const std::string& text, double horizon) {
  PathRecord p;
  p.horizon = horizon;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("PathRecord::from_csv: malformed row '" + line + "'");
    double t = 0.0;
    const char* b = line.data();
    auto [tp, tec] = std::from_chars(b, b + comma, t);
    int s = 0;
    auto [sp, sec] = std::from_chars(b + comma + 1, b + line.size(), s);
    if (tec != std::errc{} || sec != std::errc{})
      throw std::invalid_argument("PathRecord::from_csv: malformed row '" + line + "'");
    if (first) {
      p.initial_state = s;
      first = false;
    } else {
      p.jumps.push_back({t, s});
    }
  }
  if (first) throw std::invalid_argument("PathRecord::from_csv: empty input");
  return p;
}

}  // namespace mfg
