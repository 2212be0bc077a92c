#include "mfg/problem.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

#include "mfg/rng.hpp"

namespace mfg {

using nlohmann::json;

Eigen::VectorXd ControlBox::clamp(Eigen::VectorXd a) const {
  for (int c = 0; c < dim(); ++c) a(c) = std::min(std::max(a(c), lo(c)), hi(c));
  return a;
}

bool ControlBox::contains(const Eigen::VectorXd& a, double tol) const {
  if (a.size() != lo.size()) return false;
  for (int c = 0; c < dim(); ++c)
    if (a(c) < lo(c) - tol || a(c) > hi(c) + tol) return false;
  return true;
}

Eigen::VectorXd ControlBox::corner(unsigned bits) const {
  Eigen::VectorXd a(dim());
  for (int c = 0; c < dim(); ++c) a(c) = (bits >> c) & 1u ? hi(c) : lo(c);
  return a;
}

double ProblemSpec::rate(double t, int i, int j, const Eigen::VectorXd& alpha,
                         const Eigen::VectorXd& p, const DiscreteMeasure* nu) const {
  if (i == j || !Qref.mask(i, j)) return 0.0;
  return q0(t, i, j, p, flags.mean_field_in_q ? nu : nullptr) + q1(t, i, j, p).dot(alpha);
}

Eigen::VectorXd ProblemSpec::rate_row(double t, int i, const Eigen::VectorXd& alpha,
                                      const Eigen::VectorXd& p, const DiscreteMeasure* nu) const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j)
    if (j != i && Qref.mask(i, j)) r(j) = rate(t, i, j, alpha, p, nu);
  return r;
}

double ProblemSpec::running_cost(double t, int i, const Eigen::VectorXd& alpha,
                                 const Eigen::VectorXd& p, const DiscreteMeasure* nu) const {
  double c = f0(t, i, alpha, p) + f1(t, i, p);
  if (nu != nullptr) c += f2(t, p, *nu);
  return c;
}

namespace {

Eigen::VectorXd random_simplex(int m, Rng& rng) {
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i) w(i) = -std::log(1.0 - rng.uniform());
  return w / w.sum();
}

Eigen::VectorXd random_in_box(const ControlBox& box, Rng& rng) {
  Eigen::VectorXd a(box.dim());
  for (int c = 0; c < box.dim(); ++c) a(c) = box.lo(c) + rng.uniform() * (box.hi(c) - box.lo(c));
  return a;
}

DiscreteMeasure random_measure(const ControlBox& box, int max_atoms, Rng& rng) {
  const int k = 1 + static_cast<int>(rng.uniform() * max_atoms);
  DiscreteMeasure nu;
  nu.atoms.resize(k, box.dim());
  nu.weights.resize(k);
  for (int i = 0; i < k; ++i) {
    nu.atoms.row(i) = random_in_box(box, rng);
    nu.weights(i) = -std::log(1.0 - rng.uniform());
  }
  nu.weights /= nu.weights.sum();
  return nu.canonical();
}

}  // namespace

SpecReport validate_spec(const ProblemSpec& spec, int n_samples, std::uint64_t seed) {
  SpecReport rep;
  Rng rng(derive_seed(seed, 0xABCD));
  for (int s = 0; s < n_samples; ++s) {
    const double t = rng.uniform() * spec.T;
    const Eigen::VectorXd p = random_simplex(spec.m, rng);
    const Eigen::VectorXd alpha = random_in_box(spec.box, rng);
    const DiscreteMeasure nu = random_measure(spec.box, spec.m, rng);
    const int i = static_cast<int>(rng.uniform() * spec.m);
    for (int j = 0; j < spec.m; ++j) {
      if (j == i || !spec.Qref.mask(i, j)) continue;
      const double q = spec.rate(t, i, j, alpha, p, &nu);
      if (!(q > spec.C1 && q < spec.C2)) {
        rep.violations.push_back(
            {"rate out of (C1, C2) at (i=" + std::to_string(i) + ", j=" + std::to_string(j) + ")",
             q});
      }
    }
    // Secant test for gamma-uniform convexity of f0.
    const Eigen::VectorXd a2 = random_in_box(spec.box, rng);
    const double lhs = spec.f0(t, i, a2, p) - spec.f0(t, i, alpha, p) -
                       spec.f0_grad(t, i, alpha, p).dot(a2 - alpha);
    const double rhs = spec.gamma * (a2 - alpha).squaredNorm();
    if (lhs < rhs - 1e-10)
      rep.violations.push_back({"f0 secant convexity deficit", lhs - rhs});
  }
  return rep;
}

namespace {

[[noreturn]] void missing(const std::string& field) {
  throw std::invalid_argument("config: missing or malformed field '" + field + "'");
}

const json& need(const json& j, const std::string& field) {
  auto it = j.find(field);
  if (it == j.end()) missing(field);
  return *it;
}

double need_number(const json& j, const std::string& field) {
  const json& v = need(j, field);
  if (!v.is_number()) missing(field);
  return v.get<double>();
}

Eigen::VectorXd as_vector(const json& v, int expected, const std::string& field) {
  if (v.is_number()) {
    if (expected != 1) missing(field);
    return Eigen::VectorXd::Constant(1, v.get<double>());
  }
  if (!v.is_array() || static_cast<int>(v.size()) != expected) missing(field);
  Eigen::VectorXd out(expected);
  for (int i = 0; i < expected; ++i) out(i) = v[i].get<double>();
  return out;
}

}  // namespace

ProblemSpec spec_from_json(const json& cfg) {
  ProblemSpec spec;
  const json& jm = need(cfg, "m");
  if (!jm.is_number_integer() || jm.get<int>() < 2) missing("m");
  spec.m = jm.get<int>();
  spec.T = need_number(cfg, "T");
  if (spec.T <= 0) missing("T");

  const int l = cfg.contains("control_dim") ? need(cfg, "control_dim").get<int>() : 1;
  if (l < 1) missing("control_dim");
  const json& jbox = need(cfg, "control_box");
  if (!jbox.is_array() || jbox.size() != 2) missing("control_box");
  spec.box.lo = as_vector(jbox[0], l, "control_box");
  spec.box.hi = as_vector(jbox[1], l, "control_box");
  if (((spec.box.hi - spec.box.lo).array() <= 0.0).any()) missing("control_box");

  const json& jb = need(cfg, "rate_bounds");
  if (!jb.is_array() || jb.size() != 2) missing("rate_bounds");
  spec.C1 = jb[0].get<double>();
  spec.C2 = jb[1].get<double>();
  if (!(spec.C1 > 0.0 && spec.C2 >= spec.C1)) missing("rate_bounds");

  std::optional<Mask> mask;
  if (cfg.contains("mask")) {
    const json& jmask = cfg["mask"];
    if (!jmask.is_array() || static_cast<int>(jmask.size()) != spec.m) missing("mask");
    Mask mk(spec.m, spec.m);
    for (int i = 0; i < spec.m; ++i) {
      if (static_cast<int>(jmask[i].size()) != spec.m) missing("mask");
      for (int j = 0; j < spec.m; ++j) mk(i, j) = jmask[i][j].get<int>() != 0;
    }
    mask = mk;
  }
  spec.Qref = build_reference_generator(spec.m, mask);

  spec.p_init = SimplexPoint(as_vector(need(cfg, "p_init"), spec.m, "p_init"));

  const json& jseed = need(cfg, "seed");
  if (!jseed.is_number_integer()) missing("seed");
  spec.seed = jseed.get<std::uint64_t>();

  if (cfg.contains("flags") && cfg["flags"].contains("mean_field_in_q"))
    spec.flags.mean_field_in_q = cfg["flags"]["mean_field_in_q"].get<bool>();

  const json& fam = need(cfg, "family");

  // --- transition rates ---
  {
    const json& jq = need(fam, "q");
    const std::string type = need(jq, "type").get<std::string>();
    if (type == "linear") {
      const double base = need_number(jq, "q0");
      const Eigen::VectorXd slope = as_vector(need(jq, "q1"), l, "family.q.q1");
      spec.q0 = [base](double, int, int, const Eigen::VectorXd&, const DiscreteMeasure*) {
        return base;
      };
      spec.q1 = [slope](double, int, int, const Eigen::VectorXd&) { return slope; };
    } else {
      missing("family.q.type");
    }
  }

  // --- running cost, control part ---
  {
    const json& jf = need(fam, "f0");
    const std::string type = need(jf, "type").get<std::string>();
    if (type == "quadratic") {
      QuadraticControlCost quad;
      quad.curvature = need_number(jf, "gamma");
      if (quad.curvature <= 0.0) missing("family.f0.gamma");
      quad.center = jf.contains("center") ? as_vector(jf["center"], l, "family.f0.center")
                                          : Eigen::VectorXd::Zero(l);
      quad.offset = jf.contains("offset") ? jf["offset"].get<double>() : 0.0;
      quad.b = Eigen::MatrixXd::Zero(spec.m, l);
      if (jf.contains("b")) {
        const json& jlin = jf["b"];
        if (jlin.is_number()) {
          quad.b.setConstant(jlin.get<double>());
        } else if (jlin.is_array() && static_cast<int>(jlin.size()) == spec.m) {
          for (int i = 0; i < spec.m; ++i) quad.b.row(i) = as_vector(jlin[i], l, "family.f0.b");
        } else {
          missing("family.f0.b");
        }
      }
      spec.quad = quad;
      spec.gamma = 0.5 * quad.curvature;  // secant modulus of the quadratic
      spec.f0 = [quad](double, int i, const Eigen::VectorXd& a, const Eigen::VectorXd&) {
        return 0.5 * quad.curvature * (a - quad.center).squaredNorm() + quad.b.row(i).dot(a) +
               quad.offset;
      };
      spec.f0_grad = [quad](double, int i, const Eigen::VectorXd& a, const Eigen::VectorXd&) {
        return (quad.curvature * (a - quad.center) + quad.b.row(i).transpose()).eval();
      };
    } else {
      missing("family.f0.type");
    }
  }

  // --- running cost, state-coupling part ---
  {
    const json& jf = need(fam, "f1");
    const std::string type = need(jf, "type").get<std::string>();
    if (type == "none") {
      spec.f1 = [](double, int, const Eigen::VectorXd&) { return 0.0; };
    } else if (type == "congestion") {
      const double kappa = need_number(jf, "kappa");
      spec.f1 = [kappa](double, int i, const Eigen::VectorXd& p) { return kappa * p(i); };
    } else {
      missing("family.f1.type");
    }
  }

  // --- running cost, control-mean-field part ---
  {
    const json& jf = need(fam, "f2");
    const std::string type = need(jf, "type").get<std::string>();
    if (type == "none") {
      spec.f2 = [](double, const Eigen::VectorXd&, const DiscreteMeasure&) { return 0.0; };
      spec.has_control_coupling = false;
    } else if (type == "control_mean") {
      const Eigen::VectorXd coeff = as_vector(need(jf, "coeff"), l, "family.f2.coeff");
      spec.f2 = [coeff](double, const Eigen::VectorXd&, const DiscreteMeasure& nu) {
        return coeff.dot(nu.mean());
      };
      spec.has_control_coupling = true;
    } else {
      missing("family.f2.type");
    }
  }

  // --- terminal cost ---
  {
    const json& jg = need(fam, "g");
    const std::string type = need(jg, "type").get<std::string>();
    if (type == "none") {
      spec.g = [](int, const Eigen::VectorXd&) { return 0.0; };
    } else if (type == "vector") {
      const Eigen::VectorXd vals = as_vector(need(jg, "values"), spec.m, "family.g.values");
      spec.g = [vals](int i, const Eigen::VectorXd&) { return vals(i); };
    } else if (type == "congestion") {
      const double kappa = need_number(jg, "kappa");
      Eigen::VectorXd offs = Eigen::VectorXd::Zero(spec.m);
      if (jg.contains("offsets")) offs = as_vector(jg["offsets"], spec.m, "family.g.offsets");
      spec.g = [kappa, offs](int i, const Eigen::VectorXd& p) { return kappa * p(i) + offs(i); };
    } else {
      missing("family.g.type");
    }
  }

  spec.f0_depends_p = false;
  spec.separable = !spec.flags.mean_field_in_q && !spec.f0_depends_p;
  return spec;
}

}  // namespace mfg
