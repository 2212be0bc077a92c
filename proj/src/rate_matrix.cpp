#include "mfg/rate_matrix.hpp"

#include <stdexcept>

namespace mfg {

Mask RateMatrix::full_mask(int m) {
  Mask mk = Mask::Constant(m, m, true);
  for (int i = 0; i < m; ++i) mk(i, i) = false;
  return mk;
}

RateMatrix build_reference_generator(int m, const std::optional<Mask>& mask,
                                     bool allow_absorbing) {
  if (m < 2) throw std::invalid_argument("build_reference_generator: need m >= 2");
  Mask mk = mask.value_or(RateMatrix::full_mask(m));
  if (mk.rows() != m || mk.cols() != m)
    throw std::invalid_argument("build_reference_generator: mask dimension mismatch");

  RateMatrix Q;
  Q.m = m;
  Q.mask = mk;
  for (int i = 0; i < m; ++i) Q.mask(i, i) = false;
  Q.entries = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    int exits = 0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      if (Q.mask(i, j)) {
        Q.entries(i, j) = 1.0;
        ++exits;
      }
    }
    Q.entries(i, i) = -static_cast<double>(exits);
    if (exits == 0 && !allow_absorbing)
      throw std::invalid_argument("build_reference_generator: state " + std::to_string(i) +
                                  " has no admissible exit (pass allow_absorbing to permit)");
  }
  return Q;
}

GeneratorReport validate_generator(const RateMatrix& Q, double C1, double C2) {
  GeneratorReport rep;
  const int m = Q.m;
  for (int i = 0; i < m; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < m; ++j) {
      const double v = Q.entries(i, j);
      row_sum += v;
      if (i == j) continue;
      if (!Q.mask(i, j)) {
        if (v != 0.0)
          rep.violations.push_back({i, j, v, "masked entry must be exactly 0"});
        continue;
      }
      if (v < 0.0) rep.violations.push_back({i, j, v, "negative off-diagonal rate"});
      if (v < C1 || v > C2)
        rep.violations.push_back({i, j, v, "admissible rate outside [C1, C2]"});
    }
    if (std::abs(row_sum) > 1e-12)
      rep.violations.push_back({i, i, row_sum, "row sum not zero"});
  }
  return rep;
}

Eigen::MatrixXd psi_matrix(int i, const RateMatrix& Q0) {
  const int m = Q0.m;
  if (i < 0 || i >= m) throw std::out_of_range("psi_matrix: state index out of range");
  Eigen::VectorXd ei = Eigen::VectorXd::Zero(m);
  ei(i) = 1.0;
  Eigen::MatrixXd D = (Q0.entries * ei).asDiagonal();
  return D - Q0.entries * ei.asDiagonal() - ei.asDiagonal() * Q0.entries;
}

double seminorm_sq(int i, const Eigen::VectorXd& z) {
  const int m = static_cast<int>(z.size());
  if (i < 0 || i >= m) throw std::out_of_range("seminorm_sq: state index out of range");
  double s = 0.0;
  for (int j = 0; j < m; ++j) {
    if (j == i) continue;
    const double d = z(j) - z(i);
    s += d * d;
  }
  return s;
}

Eigen::VectorXd psi_pinv_apply(int i, int j, int m) {
  if (i == j) throw std::invalid_argument("psi_pinv_apply: i == j is degenerate");
  if (i < 0 || j < 0 || i >= m || j >= m)
    throw std::out_of_range("psi_pinv_apply: state index out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Constant(m, -1.0 / m);
  v(j) = (m - 1.0) / m;
  return v;
}

}  // namespace mfg
