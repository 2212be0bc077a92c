#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace mfg {

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Generator (Q-matrix) of a continuous-time chain on m states together with
/// the admissibility mask for its off-diagonal entries. Masked-out entries
/// are exactly zero; rows sum to zero.
struct RateMatrix {
  int m = 0;
  Eigen::MatrixXd entries;  // m x m, units 1/time
  Mask mask;                // off-diagonal admissibility

  static Mask full_mask(int m);
};

struct GeneratorViolation {
  int row = 0;
  int col = 0;       // col == row flags a row-sum violation
  double value = 0;
  std::string what;
};

struct GeneratorReport {
  std::vector<GeneratorViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Reference generator: rate 1 on admissible off-diagonal transitions, 0 on
// masked ones, diagonal minus the count of admissible exits. A state with no
// admissible exit is rejected unless allow_absorbing is set.
RateMatrix build_reference_generator(int m, const std::optional<Mask>& mask = std::nullopt,
                                     bool allow_absorbing = false);

// Report-style check of sign, row-sum and [C1, C2] bounds on admissible
// off-diagonal entries. Never throws.
GeneratorReport validate_generator(const RateMatrix& Q, double C1, double C2);

// psi^i = diag(Q0 e_i) - Q0 diag(e_i) - diag(e_i) Q0.
Eigen::MatrixXd psi_matrix(int i, const RateMatrix& Q0);

// sum_{j != i} (z_j - z_i)^2.
double seminorm_sq(int i, const Eigen::VectorXd& z);

// psi^+ (e_j - e_i) for the unmasked reference chain:
// ((m-1)/m) e_j - (1/m) sum_{k != j} e_k.  Requires i != j.
Eigen::VectorXd psi_pinv_apply(int i, int j, int m);

}  // namespace mfg
