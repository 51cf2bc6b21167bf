#include "holefill/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fftw3.h>

#include "holefill/error.hpp"

namespace holefill {

namespace {

std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

// Mode-a product of a row-major tensor with a matrix: the extent of axis a
// changes from f.rows() (conj=true) or f.cols() (conj=false) to the other.
std::vector<cplx> mode_product(const std::vector<cplx>& x, std::vector<int>& dims, int a, const Eigen::MatrixXcd& f,
                               bool adjoint) {
  const int from = adjoint ? static_cast<int>(f.rows()) : static_cast<int>(f.cols());
  const int to = adjoint ? static_cast<int>(f.cols()) : static_cast<int>(f.rows());
  std::size_t outer = 1, inner = 1;
  for (int b = 0; b < a; ++b) outer *= dims[b];
  for (int b = a + 1; b < static_cast<int>(dims.size()); ++b) inner *= dims[b];
  std::vector<cplx> y(outer * to * inner, cplx{});
  for (std::size_t o = 0; o < outer; ++o)
    for (int i = 0; i < to; ++i)
      for (int j = 0; j < from; ++j) {
        const cplx c = adjoint ? std::conj(f(j, i)) : f(i, j);
        if (c == cplx{}) continue;
        const cplx* src = &x[(o * from + j) * inner];
        cplx* dst = &y[(o * to + i) * inner];
        for (std::size_t t = 0; t < inner; ++t) dst[t] += c * src[t];
      }
  dims[a] = to;
  return y;
}

}  // namespace

FftEngine::FftEngine(const Geometry& g) : g_(g) {
  g.validate_hole();
  const std::size_t n = g.points();
  const int M = g.side();
  perm_.resize(n);
  std::vector<int> idx(g.d);
  for (std::size_t p = 0; p < n; ++p) {
    to_logical(g, p, idx);
    std::size_t q = 0;
    for (int a = 0; a < g.d; ++a) q = q * M + static_cast<std::size_t>(((idx[a] % M) + M) % M);
    perm_[p] = q;
  }
  scale_ = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<int> dims(g.d, M);
  std::lock_guard<std::mutex> lock(planner_mutex());
  buf_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n));
  auto* b = reinterpret_cast<fftw_complex*>(buf_);
  plan_fwd_ = fftw_plan_dft(g.d, dims.data(), b, b, FFTW_FORWARD, FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft(g.d, dims.data(), b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FftEngine::~FftEngine() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(buf_);
}

void FftEngine::forward(std::span<cplx> x) { run(x, true); }

void FftEngine::inverse(std::span<cplx> x) { run(x, false); }

void FftEngine::run(std::span<cplx> x, bool fwd) {
  if (x.size() != perm_.size()) throw GeometryError("FFT input does not match the grid size");
  std::lock_guard<std::mutex> lock(mu_);
  for (std::size_t p = 0; p < x.size(); ++p) buf_[perm_[p]] = x[p];
  fftw_execute(static_cast<fftw_plan>(fwd ? plan_fwd_ : plan_inv_));
  for (std::size_t p = 0; p < x.size(); ++p) x[p] = buf_[perm_[p]] * scale_;
}

void FftEngine::forward_fft_order(std::span<cplx> x) { run_fft_order(x, true); }

void FftEngine::inverse_fft_order(std::span<cplx> x) { run_fft_order(x, false); }

void FftEngine::run_fft_order(std::span<cplx> x, bool fwd) {
  if (x.size() != perm_.size()) throw GeometryError("FFT input does not match the grid size");
  std::lock_guard<std::mutex> lock(mu_);
  std::copy(x.begin(), x.end(), buf_);
  fftw_execute(static_cast<fftw_plan>(fwd ? plan_fwd_ : plan_inv_));
  for (std::size_t p = 0; p < x.size(); ++p) x[p] = buf_[p] * scale_;
}

RealFftEngine::RealFftEngine(const Geometry& g) : g_(g) {
  g.validate_hole();
  const std::size_t M = static_cast<std::size_t>(g.side());
  const std::size_t n = g.points();
  const std::size_t last = M / 2 + 1;
  const std::size_t rows = n / M;
  half_to_full_.resize(rows * last);
  partner_.resize(rows * last);
  partner_stored_.resize(rows * last);
  std::vector<std::size_t> q(g.d);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < last; ++c) {
      const std::size_t h = r * last + c;
      std::size_t rest = r;
      for (int a = g.d - 2; a >= 0; --a) {
        q[a] = rest % M;
        rest /= M;
      }
      q[g.d - 1] = c;
      std::size_t full = 0, conj = 0;
      for (int a = 0; a < g.d; ++a) {
        full = full * M + q[a];
        conj = conj * M + (M - q[a]) % M;
      }
      half_to_full_[h] = full;
      partner_[h] = conj;
      partner_stored_[h] = (c == 0 || 2 * c == M) ? 1 : 0;
    }
  }
  scale_ = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<int> dims(g.d, static_cast<int>(M));
  std::lock_guard<std::mutex> lock(planner_mutex());
  real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  half_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * half_to_full_.size()));
  auto* h = reinterpret_cast<fftw_complex*>(half_);
  plan_fwd_ = fftw_plan_dft_r2c(g.d, dims.data(), real_, h, FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r(g.d, dims.data(), h, real_, FFTW_ESTIMATE);
}

RealFftEngine::~RealFftEngine() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_);
  fftw_free(half_);
}

void RealFftEngine::forward(std::span<const double> x, std::span<cplx> spectrum) {
  if (x.size() != g_.points() || spectrum.size() != half_size()) throw GeometryError("real FFT size mismatch");
  std::copy(x.begin(), x.end(), real_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] = half_[i] * scale_;
}

void RealFftEngine::inverse(std::span<const cplx> spectrum, std::span<double> x) {
  if (x.size() != g_.points() || spectrum.size() != half_size()) throw GeometryError("real FFT size mismatch");
  std::copy(spectrum.begin(), spectrum.end(), half_);
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = real_[i] * scale_;
}

cplx dft_entry(long j, long k, long M, int sign) {
  long r = (j * k) % M;
  if (r < 0) r += M;
  const double angle = sign * 2.0 * M_PI * static_cast<double>(r) / static_cast<double>(M);
  return std::polar(1.0 / std::sqrt(static_cast<double>(M)), angle);
}

std::vector<cplx> embed(const IndexSet& s, const Eigen::VectorXcd& x) {
  if (static_cast<std::size_t>(x.size()) != s.size()) throw GeometryError("vector length does not match index set");
  std::vector<cplx> grid(s.geometry().points(), cplx{});
  const auto pos = s.positions();
  for (std::size_t i = 0; i < pos.size(); ++i) grid[pos[i]] = x(static_cast<Eigen::Index>(i));
  return grid;
}

Eigen::VectorXcd gather(const IndexSet& s, std::span<const cplx> grid) {
  if (grid.size() != s.geometry().points()) throw GeometryError("grid array does not match index set");
  const auto pos = s.positions();
  Eigen::VectorXcd out(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) out(static_cast<Eigen::Index>(i)) = grid[pos[i]];
  return out;
}

RestrictedDft::RestrictedDft(IndexSet src, IndexSet dst, Direction dir)
    : src_(std::move(src)), dst_(std::move(dst)), dir_(dir) {
  if (src_.mask().size() != dst_.mask().size()) throw GeometryError("source and destination live on different grids");
  fft_ = std::make_shared<FftEngine>(src_.geometry());
}

Eigen::VectorXcd RestrictedDft::apply(const Eigen::VectorXcd& x) const {
  auto grid = embed(src_, x);
  if (dir_ == Direction::forward) fft_->forward(grid);
  else fft_->inverse(grid);
  return gather(dst_, grid);
}

RestrictedDft RestrictedDft::adjoint() const {
  RestrictedDft out = *this;
  std::swap(out.src_, out.dst_);
  out.dir_ = dir_ == Direction::forward ? Direction::inverse : Direction::forward;
  return out;
}

Eigen::VectorXcd apply_restricted(const RestrictedDft& op, const Eigen::VectorXcd& x) { return op.apply(x); }

Eigen::MatrixXcd dense_dft_matrix(const IndexSet& dst, const IndexSet& src, int sign) {
  const auto& g = dst.geometry();
  const long M = g.side();
  Eigen::MatrixXcd A(dst.size(), src.size());
  std::vector<int> j(g.d), k(g.d);
  for (std::size_t r = 0; r < dst.size(); ++r) {
    to_logical(g, dst.positions()[r], j);
    for (std::size_t c = 0; c < src.size(); ++c) {
      to_logical(g, src.positions()[c], k);
      cplx v = 1.0;
      for (int a = 0; a < g.d; ++a) v *= dft_entry(j[a], k[a], M, sign);
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return A;
}

void fix_column_phases(Eigen::MatrixXcd& V, Eigen::MatrixXcd* U) {
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    Eigen::Index best = 0;
    double mag = -1.0;
    for (Eigen::Index r = 0; r < V.rows(); ++r)
      if (std::abs(V(r, c)) > mag * (1.0 + 1e-12)) {
        mag = std::abs(V(r, c));
        best = r;
      }
    if (mag <= 0.0) continue;
    const cplx phase = std::conj(V(best, c)) / mag;
    V.col(c) *= phase;
    V(best, c) = mag;
    if (U && U->cols() > c) U->col(c) *= phase;
  }
}

Eigen::VectorXcd ThinSvd::apply_u_adjoint(const Eigen::VectorXcd& z) const {
  if (static_cast<std::size_t>(z.size()) != R_.size()) throw GeometryError("vector length does not match R");
  if (route_ == SvdRoute::dense) return U_.adjoint() * z;
  std::vector<int> dims(geometry().d, geometry().side());
  auto t = embed(R_, z);
  for (int a = 0; a < geometry().d; ++a) t = mode_product(t, dims, a, axes_[a].field, true);
  Eigen::VectorXcd c(sigma_.size());
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    const auto col = tensor_column_[flat];
    const double s = sigma_(static_cast<Eigen::Index>(col));
    c(static_cast<Eigen::Index>(col)) = s > 0.0 ? t[flat] / s : cplx{};
  }
  return c;
}

Eigen::VectorXcd ThinSvd::apply_u(const Eigen::VectorXcd& c) const {
  if (c.size() != sigma_.size()) throw GeometryError("coefficient length does not match |W|");
  if (route_ == SvdRoute::dense) return U_ * c;
  std::vector<int> dims;
  for (const auto& ax : axes_) dims.push_back(static_cast<int>(ax.field.cols()));
  std::vector<cplx> t(tensor_column_.size());
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    const auto col = static_cast<Eigen::Index>(tensor_column_[flat]);
    t[flat] = sigma_(col) > 0.0 ? c(col) / sigma_(col) : cplx{};
  }
  for (int a = 0; a < geometry().d; ++a) t = mode_product(t, dims, a, axes_[a].field, false);
  return gather(R_, t);
}

Eigen::VectorXcd ThinSvd::u_column(std::size_t j) const {
  if (j >= static_cast<std::size_t>(sigma_.size())) throw GeometryError("singular index out of range");
  if (route_ == SvdRoute::dense) return U_.col(static_cast<Eigen::Index>(j));
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(sigma_.size());
  e(static_cast<Eigen::Index>(j)) = 1.0;
  return apply_u(e);
}

Eigen::MatrixXcd ThinSvd::materialize_u() const {
  if (route_ == SvdRoute::dense) return U_;
  Eigen::MatrixXcd U(R_.size(), sigma_.size());
  for (Eigen::Index j = 0; j < sigma_.size(); ++j) U.col(j) = u_column(static_cast<std::size_t>(j));
  return U;
}

ThinSvd ThinSvd::from_factors(IndexSet R, IndexSet W, Eigen::VectorXd sigma, Eigen::MatrixXcd U, Eigen::MatrixXcd V) {
  if (static_cast<std::size_t>(U.rows()) != R.size() || static_cast<std::size_t>(V.rows()) != W.size() ||
      U.cols() != sigma.size() || V.cols() != sigma.size())
    throw GeometryError("SVD factor shapes do not match R and W");
  ThinSvd out;
  out.R_ = std::move(R);
  out.W_ = std::move(W);
  out.route_ = SvdRoute::dense;
  out.sigma_ = std::move(sigma);
  out.U_ = std::move(U);
  out.V_ = std::move(V);
  return out;
}

namespace {

bool tensor_applicable(const IndexSet& R, const IndexSet& W) {
  if (!W.bbox()) return false;
  const IndexSet S = R.complement();
  return S.is_empty() || S.bbox().has_value();
}

}  // namespace

ThinSvd thin_svd_F_RW(const Geometry& g, const IndexSet& R, const IndexSet& W, const SvdOptions& opts) {
  if (R.mask().size() != g.points() || W.mask().size() != g.points())
    throw GeometryError("index sets do not match the geometry");
  if (W.is_empty()) throw GeometryError("hole is empty");
  if (W.size() > opts.max_hole) {
    std::ostringstream msg;
    msg << "|W| = " << W.size() << " exceeds the configured cap " << opts.max_hole;
    throw GeometryError(msg.str());
  }
  if (R.size() < W.size()) throw GeometryError("|R| < |W|: recovery system is underdetermined");

  const SvdRoute route = opts.route.value_or(tensor_applicable(R, W) ? SvdRoute::tensor : SvdRoute::dense);
  if (route == SvdRoute::tensor && !tensor_applicable(R, W))
    throw GeometryError("tensor route needs a box hole and a box autocorrelation support");

  ThinSvd out;
  out.R_ = R;
  out.W_ = W;
  out.route_ = route;
  const auto n = static_cast<Eigen::Index>(W.size());

  if (route == SvdRoute::dense) {
    if (R.size() * W.size() > opts.max_dense_entries) {
      std::ostringstream msg;
      msg << "dense SVD would need " << R.size() << " x " << W.size() << " entries (cap " << opts.max_dense_entries
          << ")";
      throw GeometryError(msg.str());
    }
    FftEngine fft(g);
    Eigen::MatrixXcd A(R.size(), n);
    std::vector<cplx> grid(g.points());
    for (Eigen::Index c = 0; c < n; ++c) {
      std::fill(grid.begin(), grid.end(), cplx{});
      grid[W.positions()[static_cast<std::size_t>(c)]] = 1.0;
      fft.inverse(grid);
      A.col(c) = gather(R, grid);
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
    A.resize(0, 0);
    const Eigen::MatrixXcd Rf = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    DenseSvd svd(Rf, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(R.size()), n);
    out.U_ = Q * svd.matrixU();
    out.V_ = svd.matrixV();
    out.sigma_ = svd.singularValues();
    fix_column_phases(out.V_, &out.U_);
    return out;
  }

  // Tensor route. Per axis a: C = F*_{J_a \ S_a, W_a}, B = F*_{S_a, W_a}.
  const int M = g.side();
  const Box wb = *W.bbox();
  const IndexSet S = R.complement();
  Box sb;
  if (S.is_empty()) sb.assign(g.d, Range{1, 0});
  else sb = *S.bbox();
  std::vector<Eigen::MatrixXcd> Va(g.d);
  out.axes_.resize(g.d);
  for (int a = 0; a < g.d; ++a) {
    const int na = wb[a].length();
    std::vector<int> crow, srow;
    for (int j = 1 - g.half(); j <= g.half(); ++j) (sb[a].contains(j) ? srow : crow).push_back(j);
    Eigen::MatrixXcd C(static_cast<Eigen::Index>(crow.size()), na);
    Eigen::MatrixXcd B(static_cast<Eigen::Index>(srow.size()), na);
    for (int c = 0; c < na; ++c) {
      const int k = wb[a].lo + c;
      for (std::size_t r = 0; r < crow.size(); ++r) C(static_cast<Eigen::Index>(r), c) = dft_entry(crow[r], k, M, +1);
      for (std::size_t r = 0; r < srow.size(); ++r) B(static_cast<Eigen::Index>(r), c) = dft_entry(srow[r], k, M, +1);
    }
    Eigen::VectorXd s = Eigen::VectorXd::Zero(na);
    Eigen::MatrixXcd Ua = Eigen::MatrixXcd::Zero(C.rows(), na);
    Eigen::MatrixXcd V;
    if (C.rows() > 0) {
      DenseSvd svd(C, Eigen::ComputeThinU | Eigen::ComputeFullV);
      const auto rank = svd.singularValues().size();
      s.head(rank) = svd.singularValues().cwiseMin(1.0);
      Ua.leftCols(rank) = svd.matrixU();
      V = svd.matrixV();
    } else {
      V = Eigen::MatrixXcd::Identity(na, na);
    }
    fix_column_phases(V, &Ua);
    auto& ax = out.axes_[a];
    ax.s = s;
    ax.field = Eigen::MatrixXcd::Zero(M, na);
    const Eigen::MatrixXcd BV = B * V;
    for (int i = 0; i < na; ++i) {
      for (std::size_t r = 0; r < crow.size(); ++r)
        ax.field(crow[r] + g.offset(), i) = s(i) * Ua(static_cast<Eigen::Index>(r), i);
      for (std::size_t r = 0; r < srow.size(); ++r)
        ax.field(srow[r] + g.offset(), i) = BV(static_cast<Eigen::Index>(r), i);
    }
    Va[a] = std::move(V);
  }

  // Combine: sigma^2 = 1 - prod_a (1 - s_a^2), evaluated without cancellation.
  const auto total = static_cast<std::size_t>(n);
  std::vector<double> sig(total);
  std::vector<std::vector<int>> tuples(total, std::vector<int>(g.d));
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int a = g.d - 1; a >= 0; --a) {
      const auto na = static_cast<std::size_t>(wb[a].length());
      tuples[flat][a] = static_cast<int>(rem % na);
      rem /= na;
    }
    double logsum = 0.0;
    for (int a = 0; a < g.d; ++a) {
      const double s = out.axes_[a].s(tuples[flat][a]);
      logsum += std::log1p(-s * s);
    }
    sig[flat] = std::sqrt(std::max(0.0, -std::expm1(logsum)));
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sig[x] > sig[y]; });

  out.sigma_.resize(n);
  out.V_.resize(n, n);
  out.tensor_column_.assign(total, 0);
  for (std::size_t col = 0; col < total; ++col) {
    const std::size_t flat = order[col];
    out.sigma_(static_cast<Eigen::Index>(col)) = sig[flat];
    out.tensor_column_[flat] = col;
    for (std::size_t row = 0; row < total; ++row) {
      // W rows enumerate the box in row-major order, like the tuples.
      std::size_t rem = row;
      cplx v = 1.0;
      for (int a = g.d - 1; a >= 0; --a) {
        const auto na = static_cast<std::size_t>(wb[a].length());
        v *= Va[a](static_cast<Eigen::Index>(rem % na), tuples[flat][a]);
        rem /= na;
      }
      out.V_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = v;
    }
  }
  return out;
}

std::vector<cplx> singular_vector_field(const ThinSvd& svd, std::size_t j) {
  if (j < 1 || j > static_cast<std::size_t>(svd.sigma().size())) throw GeometryError("singular index out of range");
  auto grid = embed(svd.W(), svd.V().col(static_cast<Eigen::Index>(j - 1)));
  FftEngine fft(svd.geometry());
  fft.inverse(grid);
  return grid;
}

}  // namespace holefill
