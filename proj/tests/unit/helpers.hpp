#pragma once

#include <nlohmann/json.hpp>

#include "mfg/problem.hpp"

namespace mfg::test {

// f0 = a^2/2, q(i,j,a) = a on both transitions, g = (0, 1). The control is
// the transition rate itself, boxed away from zero.
inline nlohmann::json quadratic2_json() {
  return nlohmann::json{
      {"m", 2},
      {"T", 1.0},
      {"control_dim", 1},
      {"control_box", {{0.1}, {2.0}}},
      {"rate_bounds", {0.05, 2.5}},
      {"family",
       {{"q", {{"type", "linear"}, {"q0", 0.0}, {"q1", 1.0}}},
        {"f0", {{"type", "quadratic"}, {"gamma", 1.0}}},
        {"f1", {{"type", "none"}}},
        {"f2", {{"type", "none"}}},
        {"g", {{"type", "vector"}, {"values", {0.0, 1.0}}}}}},
      {"p_init", {0.5, 0.5}},
      {"seed", 2024}};
}

// Congestion costs in both the running and terminal parts, asymmetric
// terminal offsets and initial condition.
inline nlohmann::json monotone2_json() {
  nlohmann::json j = quadratic2_json();
  j["family"]["f1"] = {{"type", "congestion"}, {"kappa", 1.0}};
  j["family"]["g"] = {{"type", "congestion"}, {"kappa", 1.0}, {"offsets", {0.0, 0.3}}};
  j["p_init"] = {0.7, 0.3};
  return j;
}

inline ProblemSpec quadratic2_spec() { return spec_from_json(quadratic2_json()); }
inline ProblemSpec monotone2_spec() { return spec_from_json(monotone2_json()); }

}  // namespace mfg::test
