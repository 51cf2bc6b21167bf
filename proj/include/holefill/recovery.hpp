#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "holefill/lattice.hpp"
#include "holefill/spectral.hpp"

namespace holefill {

/// Squared-modulus data over J with the hole zeroed.
struct Measurement {
  Geometry geometry;
  std::vector<double> a2;
  IndexSet hole;

  /// Throws unless a2 matches the grid and vanishes on the hole.
  void validate() const;
};

struct RecoveryOptions {
  /// Singular values below sigma_floor * sigma_max make the system ill-posed.
  double sigma_floor = 1e-14;
  /// Drop sub-floor singular components instead of failing.
  bool truncate = false;
  /// Average alpha(k) with alpha(-k) after the solve.
  bool symmetrize = false;
};

/// The recovery map a2 on W^c -> alpha on W, alpha = -F*+_{R,W} F*_{R,W^c} a2.
class RecoveryOperator {
 public:
  RecoveryOperator(std::shared_ptr<const ThinSvd> svd, RecoveryOptions opts = {});

  /// Builds W from the geometry and R = J \ s_ac, then the thin SVD.
  static RecoveryOperator build(const Geometry& g, const IndexSet& s_ac, RecoveryOptions opts = {},
                                const SvdOptions& svd_opts = {});

  const Geometry& geometry() const { return svd_->geometry(); }
  const IndexSet& W() const { return svd_->W(); }
  const IndexSet& R() const { return svd_->R(); }
  const IndexSet& Wc() const { return wc_; }
  const ThinSvd& svd() const { return *svd_; }
  std::shared_ptr<const ThinSvd> svd_ptr() const { return svd_; }
  const RecoveryOptions& options() const { return opts_; }

  /// Number of singular components that fall below the floor.
  std::size_t below_floor() const;

  /// R y for y on W^c (complex result on W).
  Eigen::VectorXcd apply(const Eigen::VectorXcd& y) const;
  /// R* x for x on W (result on W^c).
  Eigen::VectorXcd apply_adjoint(const Eigen::VectorXcd& x) const;

  /// -F*_{R,W^c} y.
  Eigen::VectorXcd rhs(const Eigen::VectorXcd& y) const;

 private:
  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const;
  void check_floor() const;

  std::shared_ptr<const ThinSvd> svd_;
  RecoveryOptions opts_;
  IndexSet wc_;
  std::shared_ptr<FftEngine> fft_;
};

struct RecoveryResult {
  /// Real part of the least-squares solution, ordered like W.positions().
  Eigen::VectorXd alpha;
  /// Norm of the discarded imaginary part.
  double imag_norm = 0.0;
  /// || F*_{R,W} alpha + F*_{R,W^c} a2 || after realification.
  double residual_norm = 0.0;
  /// residual_norm / || F*_{R,W^c} a2 ||.
  double relative_residual = 0.0;
  /// Components dropped by truncation.
  std::size_t truncated = 0;
};

RecoveryResult recover_hole(const RecoveryOperator& op, const Measurement& meas);

/// c = V* alpha.
Eigen::VectorXcd expand_in_singular_basis(const RecoveryOperator& op, const Eigen::VectorXd& alpha);
Eigen::VectorXcd expand_in_singular_basis(const RecoveryOperator& op, const Eigen::VectorXcd& alpha);

struct MagnitudeComparison {
  Eigen::VectorXd u;
  /// |u^2 - ref^2| / ref^2 per entry.
  Eigen::VectorXd rel_err_sq;
  /// |u - ref| / ref per entry.
  Eigen::VectorXd rel_err_mag;
  std::size_t negative_count = 0;
};

/// u = sqrt(max(u2, 0)) compared against reference moduli |rho_hat|.
MagnitudeComparison magnitude_from_squared(const Eigen::VectorXd& u2, const Eigen::VectorXd& reference);

/// Full a2 over J with the hole filled by alpha.
std::vector<double> merge_fill(const Measurement& meas, const Eigen::VectorXd& alpha);

}  // namespace holefill
