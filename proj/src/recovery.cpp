#include "holefill/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "holefill/error.hpp"

namespace holefill {

void Measurement::validate() const {
  if (a2.size() != geometry.points()) throw GeometryError("measurement array does not match the grid");
  if (hole.mask().size() != geometry.points()) throw GeometryError("hole mask does not match the grid");
  for (auto p : hole.positions())
    if (a2[p] != 0.0) throw GeometryError("measurement must vanish on the hole");
}

RecoveryOperator::RecoveryOperator(std::shared_ptr<const ThinSvd> svd, RecoveryOptions opts)
    : svd_(std::move(svd)), opts_(opts) {
  if (!svd_) throw GeometryError("recovery operator needs an SVD");
  wc_ = svd_->W().complement();
  fft_ = std::make_shared<FftEngine>(svd_->geometry());
}

RecoveryOperator RecoveryOperator::build(const Geometry& g, const IndexSet& s_ac, RecoveryOptions opts,
                                         const SvdOptions& svd_opts) {
  const IndexSet W = beamstop_window(g);
  const IndexSet R = constraint_region(g, s_ac);
  return RecoveryOperator(std::make_shared<const ThinSvd>(thin_svd_F_RW(g, R, W, svd_opts)), opts);
}

std::size_t RecoveryOperator::below_floor() const {
  const auto& s = svd_->sigma();
  const double floor = opts_.sigma_floor * svd_->sigma_max();
  std::size_t n = 0;
  for (Eigen::Index j = 0; j < s.size(); ++j)
    if (s(j) < floor || s(j) == 0.0) ++n;
  return n;
}

void RecoveryOperator::check_floor() const {
  if (opts_.truncate || below_floor() == 0) return;
  std::ostringstream msg;
  msg << "sigma_min = " << svd_->sigma_min() << " is below the floor " << opts_.sigma_floor << " * sigma_max";
  throw IllPosedError(msg.str(), svd_->sigma_min());
}

Eigen::VectorXcd RecoveryOperator::rhs(const Eigen::VectorXcd& y) const {
  auto grid = embed(wc_, y);
  fft_->inverse(grid);
  return -gather(R(), grid);
}

Eigen::VectorXcd RecoveryOperator::solve(const Eigen::VectorXcd& b) const {
  check_floor();
  Eigen::VectorXcd c = svd_->apply_u_adjoint(b);
  const auto& s = svd_->sigma();
  const double floor = opts_.sigma_floor * svd_->sigma_max();
  for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = (s(j) < floor || s(j) == 0.0) ? cplx{} : c(j) / s(j);
  return svd_->V() * c;
}

Eigen::VectorXcd RecoveryOperator::apply(const Eigen::VectorXcd& y) const {
  if (static_cast<std::size_t>(y.size()) != wc_.size()) throw GeometryError("input length does not match W^c");
  return solve(rhs(y));
}

Eigen::VectorXcd RecoveryOperator::apply_adjoint(const Eigen::VectorXcd& x) const {
  if (static_cast<std::size_t>(x.size()) != W().size()) throw GeometryError("input length does not match W");
  check_floor();
  Eigen::VectorXcd c = svd_->V().adjoint() * x;
  const auto& s = svd_->sigma();
  const double floor = opts_.sigma_floor * svd_->sigma_max();
  for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = (s(j) < floor || s(j) == 0.0) ? cplx{} : c(j) / s(j);
  auto grid = embed(R(), svd_->apply_u(c));
  fft_->forward(grid);
  return -gather(wc_, grid);
}

RecoveryResult recover_hole(const RecoveryOperator& op, const Measurement& meas) {
  meas.validate();
  if (!(meas.hole == op.W())) throw GeometryError("measurement hole differs from the operator's W");
  const auto& g = op.geometry();
  const auto wc = op.Wc().positions();
  Eigen::VectorXcd y(wc.size());
  for (std::size_t i = 0; i < wc.size(); ++i) y(static_cast<Eigen::Index>(i)) = meas.a2[wc[i]];

  const Eigen::VectorXcd b = op.rhs(y);
  const Eigen::VectorXcd sol = op.apply(y);
  RecoveryResult out;
  out.alpha = sol.real();
  out.imag_norm = sol.imag().norm();
  out.truncated = op.options().truncate ? op.below_floor() : 0;

  if (op.options().symmetrize) {
    const auto wpos = op.W().positions();
    std::vector<int> k(g.d);
    Eigen::VectorXd sym = out.alpha;
    for (std::size_t i = 0; i < wpos.size(); ++i) {
      to_logical(g, wpos[i], k);
      for (auto& v : k) v = -v;
      const auto q = to_position(g, k);
      const auto it = std::lower_bound(wpos.begin(), wpos.end(), q);
      if (it != wpos.end() && *it == q)
        sym(static_cast<Eigen::Index>(i)) = 0.5 * (out.alpha(static_cast<Eigen::Index>(i)) +
                                                   out.alpha(static_cast<Eigen::Index>(it - wpos.begin())));
    }
    out.alpha = sym;
  }

  const auto full = merge_fill(meas, out.alpha);
  std::vector<cplx> grid(full.begin(), full.end());
  FftEngine fft(g);
  fft.inverse(grid);
  out.residual_norm = gather(op.R(), grid).norm();
  const double scale = b.norm();
  out.relative_residual = scale > 0.0 ? out.residual_norm / scale : 0.0;
  return out;
}

Eigen::VectorXcd expand_in_singular_basis(const RecoveryOperator& op, const Eigen::VectorXcd& alpha) {
  if (static_cast<std::size_t>(alpha.size()) != op.W().size()) throw GeometryError("alpha length does not match W");
  return op.svd().V().adjoint() * alpha;
}

Eigen::VectorXcd expand_in_singular_basis(const RecoveryOperator& op, const Eigen::VectorXd& alpha) {
  return expand_in_singular_basis(op, Eigen::VectorXcd(alpha.cast<cplx>()));
}

MagnitudeComparison magnitude_from_squared(const Eigen::VectorXd& u2, const Eigen::VectorXd& reference) {
  if (u2.size() != reference.size()) throw GeometryError("u2 and reference differ in length");
  MagnitudeComparison out;
  const auto n = u2.size();
  out.u.resize(n);
  out.rel_err_sq.resize(n);
  out.rel_err_mag.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (u2(i) < 0.0) ++out.negative_count;
    out.u(i) = std::sqrt(std::max(u2(i), 0.0));
    const double r = reference(i);
    const double r2 = r * r;
    out.rel_err_sq(i) = r2 > 0.0 ? std::abs(u2(i) - r2) / r2 : std::nan("");
    out.rel_err_mag(i) = r > 0.0 ? std::abs(out.u(i) - r) / r : std::nan("");
  }
  return out;
}

std::vector<double> merge_fill(const Measurement& meas, const Eigen::VectorXd& alpha) {
  if (static_cast<std::size_t>(alpha.size()) != meas.hole.size()) throw GeometryError("alpha length does not match W");
  std::vector<double> full = meas.a2;
  const auto pos = meas.hole.positions();
  for (std::size_t i = 0; i < pos.size(); ++i) full[pos[i]] = alpha(static_cast<Eigen::Index>(i));
  return full;
}

}  // namespace holefill
