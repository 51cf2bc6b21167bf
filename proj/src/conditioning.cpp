#include "holefill/conditioning.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "holefill/error.hpp"

namespace holefill {

std::string to_string(NormMethod m) {
  switch (m) {
    case NormMethod::dense_svd: return "dense_svd";
    case NormMethod::complement_1d_tensor: return "complement_1d_tensor";
    case NormMethod::power_iteration: return "power_iteration";
  }
  return "unknown";
}

Eigen::VectorXd recovery_singular_values(const ThinSvd& svd) {
  const auto& s = svd.sigma();
  const auto n = s.size();
  Eigen::VectorXd nu(n);
  // sigma ascending from the end gives nu descending.
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = s(n - 1 - j);
    nu(j) = x > 0.0 ? std::sqrt((1.0 - x) * (1.0 + x)) / x : std::numeric_limits<double>::infinity();
  }
  return nu;
}

namespace {

double largest_singular_value(const Eigen::MatrixXcd& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  DenseSvd svd(A);
  return svd.singularValues()(0);
}

// tau_1 of F*_{S_AC,W}, independent of the F*_{R,W} factorization.
double complement_tau1(const Geometry& g, const IndexSet& W, const IndexSet& s_ac) {
  if (s_ac.is_empty()) return 0.0;
  if (W.bbox() && s_ac.bbox()) return sigma_min_via_complement(g, W, s_ac).tau1;
  if (s_ac.size() * W.size() <= 20'000'000) return largest_singular_value(dense_dft_matrix(s_ac, W, +1));
  return std::nan("");
}

}  // namespace

ConditioningReport recovery_norm_exact(const RecoveryOperator& op, const PowerOptions& opts) {
  const auto& svd = op.svd();
  ConditioningReport rep;
  rep.geometry = op.geometry();
  rep.sigma_min = svd.sigma_min();
  rep.sigma_max = svd.sigma_max();
  rep.bound = 1.0 / rep.sigma_min;
  rep.mu0 = rep.sigma_min * rep.sigma_min;
  rep.tau1 = complement_tau1(op.geometry(), op.W(), op.R().complement());
  rep.asymptotic = asymptotic_norm(rep.geometry.beta, rep.geometry.k0, rep.geometry.d);
  rep.method = NormMethod::power_iteration;
  rep.svd_route = svd.route();

  Eigen::VectorXcd x = svd.V().col(svd.V().cols() - 1);
  double lambda = 0.0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Eigen::VectorXcd y = op.apply(op.apply_adjoint(x));
    const double next = x.dot(y).real();
    const double norm = y.norm();
    rep.iterations = it;
    if (norm == 0.0) {
      rep.recovery_norm = 0.0;
      return rep;
    }
    x = y / norm;
    if (it > 1 && std::abs(next - lambda) <= opts.tol * std::abs(next)) {
      rep.recovery_norm = std::sqrt(std::max(next, 0.0));
      return rep;
    }
    lambda = next;
  }
  std::ostringstream msg;
  msg << "power iteration did not converge in " << opts.max_iters << " iterations";
  throw ConvergenceError(msg.str());
}

ConditioningReport recovery_norm_exact(const Geometry& g, const IndexSet& W, const IndexSet& R,
                                       const PowerOptions& opts, const SvdOptions& svd_opts) {
  const RecoveryOperator op(std::make_shared<const ThinSvd>(thin_svd_F_RW(g, R, W, svd_opts)));
  return recovery_norm_exact(op, opts);
}

ComplementSigma sigma_min_via_complement(const Geometry& g, const IndexSet& W, const IndexSet& s_ac) {
  if (s_ac.is_empty()) return {};
  if (!W.bbox() || !s_ac.bbox()) throw GeometryError("complement route needs box-shaped W and S_AC");
  const Box wb = *W.bbox();
  const Box sb = *s_ac.bbox();
  const long M = g.side();
  double tau = 1.0;
  double logsum = 0.0;
  for (int a = 0; a < g.d; ++a) {
    Eigen::MatrixXcd B(sb[a].length(), wb[a].length());
    for (int r = 0; r < sb[a].length(); ++r)
      for (int c = 0; c < wb[a].length(); ++c) B(r, c) = dft_entry(sb[a].lo + r, wb[a].lo + c, M, +1);
    const double t = std::min(largest_singular_value(B), 1.0);
    tau *= t;
    const double eps = (1.0 - t) * (1.0 + t);
    logsum += std::log1p(-eps);
  }
  ComplementSigma out;
  out.tau1 = tau;
  out.sigma_min = std::sqrt(std::max(0.0, -std::expm1(logsum)));
  return out;
}

ComplementSigma sigma_min_via_complement(const Geometry& g, AcConvention c) {
  return sigma_min_via_complement(g, beamstop_window(g), autocorrelation_box(g, c));
}

double asymptotic_norm(double beta, double k0, int d) {
  const double x = beta * k0;
  return std::exp(M_PI * x) / (std::sqrt(4.0 * M_PI * d) * std::pow(x, 0.25));
}

double mu0_asymptotic(double beta, double k0, int d) {
  const double x = beta * k0;
  return 4.0 * d * M_PI * std::sqrt(x) * std::exp(-2.0 * M_PI * x);
}

double verify_complement_identity(const IndexSet& K, const IndexSet& L) {
  const auto& g = K.geometry();
  const int cap = g.d == 1 ? 64 : 16;
  if (g.side() > cap) {
    std::ostringstream msg;
    msg << "grid side " << g.side() << " exceeds the dense cap " << cap << " for d=" << g.d;
    throw GeometryError(msg.str());
  }
  if (K.size() > L.size()) throw GeometryError("complement identity needs |K| <= |L|");
  const auto p = static_cast<Eigen::Index>(K.size());
  if (p == 0) return 0.0;
  const IndexSet Lc = L.complement();
  DenseSvd a(dense_dft_matrix(L, K, +1));
  Eigen::VectorXd sigma = a.singularValues();
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(p);
  if (!Lc.is_empty()) {
    DenseSvd b(dense_dft_matrix(Lc, K, +1));
    const auto& t = b.singularValues();
    tau.head(t.size()) = t;
  }
  double dev = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) dev = std::max(dev, std::abs(sigma(j) * sigma(j) + tau(p - 1 - j) * tau(p - 1 - j) - 1.0));
  return dev;
}

std::vector<AsymptoteRow> sweep_asymptote(const std::vector<double>& betas, const std::vector<double>& k0s,
                                  const std::vector<int>& ms, int N, AcConvention c, double saturation) {
  std::vector<AsymptoteRow> rows;
  for (double beta : betas)
    for (int m : ms)
      for (double k0 : k0s) {
        const Geometry g{1, N, m, beta, k0};
        g.validate();
        const IndexSet W = beamstop_window(g);
        const IndexSet S = autocorrelation_box(g, c);
        const ThinSvd svd = thin_svd_F_RW(g, S.complement(), W);
        AsymptoteRow row;
        row.beta = beta;
        row.m = m;
        row.k0 = k0;
        row.N = N;
        row.w = g.w();
        row.sigma_min = svd.sigma_min();
        row.exact = 1.0 / row.sigma_min;
        row.via_complement = 1.0 / sigma_min_via_complement(g, W, S).sigma_min;
        row.asymptote = asymptotic_norm(beta, k0, 1);
        row.saturated = !(row.exact < saturation);
        rows.push_back(row);
      }
  return rows;
}

std::vector<ConditioningReport> conditioning_table(const std::vector<double>& betas, const std::vector<int>& Ns,
                                                   const std::vector<int>& ms, const std::vector<double>& k0s, int d,
                                                   AcConvention c, const PowerOptions& opts) {
  std::vector<ConditioningReport> rows;
  for (double beta : betas)
    for (int N : Ns)
      for (double k0 : k0s)
        for (int m : ms) {
          const Geometry g{d, N, m, beta, k0};
          g.validate();
          const IndexSet S = autocorrelation_box(g, c);
          rows.push_back(recovery_norm_exact(g, beamstop_window(g), constraint_region(g, S), opts));
        }
  return rows;
}

}  // namespace holefill
