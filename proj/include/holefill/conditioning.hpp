#pragma once

#include <string>
#include <vector>

#include "holefill/lattice.hpp"
#include "holefill/recovery.hpp"
#include "holefill/spectral.hpp"

namespace holefill {

enum class NormMethod { dense_svd, complement_1d_tensor, power_iteration };

std::string to_string(NormMethod m);

struct PowerOptions {
  double tol = 1e-6;
  int max_iters = 10000;
};

struct ConditioningReport {
  Geometry geometry;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  /// ||R_{R,W}||.
  double recovery_norm = 0.0;
  /// 1 / sigma_min.
  double bound = 0.0;
  /// sigma_min^2.
  double mu0 = 0.0;
  /// Largest singular value of F*_{S_AC,W}.
  double tau1 = 0.0;
  double asymptotic = 0.0;
  NormMethod method = NormMethod::power_iteration;
  SvdRoute svd_route = SvdRoute::dense;
  int iterations = 0;
};

/// ||R|| by power iteration on R R*, seeded from the last right singular vector.
ConditioningReport recovery_norm_exact(const RecoveryOperator& op, const PowerOptions& opts = {});
ConditioningReport recovery_norm_exact(const Geometry& g, const IndexSet& W, const IndexSet& R,
                                       const PowerOptions& opts = {}, const SvdOptions& svd_opts = {});

/// Singular values nu_j of R, descending: R R* = V (Sigma^-2 - I) V*, so
/// nu_j = sqrt(1/sigma_j^2 - 1).
Eigen::VectorXd recovery_singular_values(const ThinSvd& svd);

struct ComplementSigma {
  double sigma_min = 1.0;
  double tau1 = 0.0;
};

/// sigma_min of F*_{R,W} from the per-axis largest singular values of
/// F*_{S_AC,W}: tau_{1,d} = prod tau_{1,a}, sigma_min^2 = 1 - tau_{1,d}^2,
/// evaluated as -expm1(sum log1p(-(1 - tau_a^2))).
ComplementSigma sigma_min_via_complement(const Geometry& g, const IndexSet& W, const IndexSet& s_ac);
/// Convenience form using the hole of g and the box S_AC of the convention.
ComplementSigma sigma_min_via_complement(const Geometry& g, AcConvention c = AcConvention::closed);

/// e^{pi beta k0} / (sqrt(4 pi d) (beta k0)^{1/4}).
double asymptotic_norm(double beta, double k0, int d);
/// 4 d pi sqrt(beta k0) e^{-2 pi beta k0}.
double mu0_asymptotic(double beta, double k0, int d);

/// max_j |sigma_j^2 + tau_{p-j+1}^2 - 1| for F*_{L,K} and F*_{L^c,K}, p = |K|.
double verify_complement_identity(const IndexSet& K, const IndexSet& L);

struct AsymptoteRow {
  double beta = 0.0;
  int m = 0;
  double k0 = 0.0;
  int N = 0;
  int w = 0;
  double sigma_min = 0.0;
  /// [mu0(S_AC, W, 1)]^{-1/2} = 1 / sigma_min, direct 1d SVD.
  double exact = 0.0;
  /// Same quantity through the complement identity.
  double via_complement = 0.0;
  double asymptote = 0.0;
  bool saturated = false;
};

std::vector<AsymptoteRow> sweep_asymptote(const std::vector<double>& betas, const std::vector<double>& k0s,
                                  const std::vector<int>& ms, int N, AcConvention c = AcConvention::closed,
                                  double saturation = 1e15);

/// One row per (beta, N, m, k0) with the d-dimensional box S_AC of the convention.
std::vector<ConditioningReport> conditioning_table(const std::vector<double>& betas, const std::vector<int>& Ns,
                                                   const std::vector<int>& ms, const std::vector<double>& k0s, int d,
                                                   AcConvention c, const PowerOptions& opts = {});

}  // namespace holefill
