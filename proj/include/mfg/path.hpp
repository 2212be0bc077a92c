#pragma once

#include <string>
#include <vector>

namespace mfg {

/// One trajectory of a finite-state chain: initial state plus the ordered
/// jump events. Paths are right-continuous and do not jump at the horizon.
struct PathRecord {
  struct Jump {
    double time = 0.0;
    int state = 0;  // state entered at `time`
  };

  int initial_state = 0;
  std::vector<Jump> jumps;
  double horizon = 0.0;

  // State at time t (right-continuous version).
  int state_at(double t) const;
  // Left limit: state held immediately before t.
  int state_before(double t) const;

  bool valid() const;

  // Text form: one `time,state` row per line, first row is the initial
  // condition at time 0. Round-trips exactly.
  std::string to_csv() const;
  static PathRecord from_csv(const std::string& text, double horizon);
};

}  // namespace mfg
