#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "holefill/lattice.hpp"

namespace holefill {

using cplx = std::complex<double>;

/// Jacobi SVD without column pivoting; the pivoting preconditioner zeroes
/// singular values below its rank threshold.
using DenseSvd = Eigen::JacobiSVD<Eigen::MatrixXcd, Eigen::HouseholderQRPreconditioner>;

/// Unitary centered DFT on J. Arrays are in the centered layout of the
/// geometry; rolls to FFT order happen internally. Calls are serialized by an
/// internal mutex, so an engine may be shared between threads.
class FftEngine {
 public:
  explicit FftEngine(const Geometry& g);
  ~FftEngine();
  FftEngine(const FftEngine&) = delete;
  FftEngine& operator=(const FftEngine&) = delete;

  /// x <- F x, kernel exp(-2 pi i j.k / M) / M^{d/2}.
  void forward(std::span<cplx> x);
  /// x <- F* x.
  void inverse(std::span<cplx> x);

  /// Same transforms for arrays stored in FFT order (index k mod M per axis).
  /// Applied to a centered-layout array these act on a circular shift of it,
  /// which changes only the phases of the output.
  void forward_fft_order(std::span<cplx> x);
  void inverse_fft_order(std::span<cplx> x);
  /// FFT-order index of each centered-layout position.
  std::span<const std::size_t> fft_order() const { return perm_; }

  const Geometry& geometry() const { return g_; }

 private:
  void run(std::span<cplx> x, bool fwd);
  void run_fft_order(std::span<cplx> x, bool fwd);

  Geometry g_;
  std::vector<std::size_t> perm_;
  double scale_;
  cplx* buf_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
  std::mutex mu_;
};

/// Unitary real-to-complex DFT on arrays in FFT order. Only the half spectrum
/// with last-axis index in [0, M/2] is stored; the rest follows from
/// Hermitian symmetry. Not thread-safe; use one engine per thread.
class RealFftEngine {
 public:
  explicit RealFftEngine(const Geometry& g);
  ~RealFftEngine();
  RealFftEngine(const RealFftEngine&) = delete;
  RealFftEngine& operator=(const RealFftEngine&) = delete;

  std::size_t half_size() const { return half_to_full_.size(); }
  /// Full FFT-order index of each stored entry.
  std::span<const std::size_t> half_to_full() const { return half_to_full_; }
  /// Full FFT-order index of the conjugate partner of each stored entry.
  std::span<const std::size_t> partner() const { return partner_; }
  /// Whether the partner of an entry is itself stored.
  std::span<const std::uint8_t> partner_stored() const { return partner_stored_; }

  void forward(std::span<const double> x, std::span<cplx> spectrum);
  /// Inverse of a Hermitian half spectrum.
  void inverse(std::span<const cplx> spectrum, std::span<double> x);

  const Geometry& geometry() const { return g_; }

 private:
  Geometry g_;
  std::vector<std::size_t> half_to_full_;
  std::vector<std::size_t> partner_;
  std::vector<std::uint8_t> partner_stored_;
  double scale_;
  double* real_ = nullptr;
  cplx* half_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
};

/// One entry of the 1d unitary DFT matrix, exp(sign 2 pi i j k / M) / sqrt(M),
/// with the phase reduced modulo M in integers.
cplx dft_entry(long j, long k, long M, int sign);

enum class Direction {
  forward,  ///< F: space -> frequency
  inverse,  ///< F*: frequency -> space
};

/// The submatrix of F or F* mapping values on `src` to values on `dst`.
class RestrictedDft {
 public:
  RestrictedDft(IndexSet src, IndexSet dst, Direction dir);

  const IndexSet& src() const { return src_; }
  const IndexSet& dst() const { return dst_; }
  Direction direction() const { return dir_; }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  /// The reverse-direction operator with src and dst swapped.
  RestrictedDft adjoint() const;

 private:
  IndexSet src_;
  IndexSet dst_;
  Direction dir_;
  std::shared_ptr<FftEngine> fft_;
};

Eigen::VectorXcd apply_restricted(const RestrictedDft& op, const Eigen::VectorXcd& x);

/// Scatter values on a set's positions into a zero grid array, and back.
std::vector<cplx> embed(const IndexSet& s, const Eigen::VectorXcd& x);
Eigen::VectorXcd gather(const IndexSet& s, std::span<const cplx> grid);

enum class SvdRoute {
  dense,   ///< materialized |R| x |W| matrix, QR then SVD of the triangular factor
  tensor,  ///< box W and R = J \ box: per-axis SVDs of the 1d complement operators
};

struct SvdOptions {
  std::size_t max_hole = 4096;
  std::size_t max_dense_entries = 100'000'000;
  std::optional<SvdRoute> route;
};

/// Reduced SVD F*_{R,W} = U Sigma V*. On the tensor route U stays implicit
/// and its products are evaluated from per-axis factors, entrywise accurate.
class ThinSvd {
 public:
  const Geometry& geometry() const { return R_.geometry(); }
  const IndexSet& R() const { return R_; }
  const IndexSet& W() const { return W_; }
  SvdRoute route() const { return route_; }

  /// Descending, length |W|.
  const Eigen::VectorXd& sigma() const { return sigma_; }
  /// |W| x |W|, columns ordered like sigma, rows ordered like W.positions().
  const Eigen::MatrixXcd& V() const { return V_; }
  double sigma_min() const { return sigma_(sigma_.size() - 1); }
  double sigma_max() const { return sigma_(0); }

  /// U* z for z on R.
  Eigen::VectorXcd apply_u_adjoint(const Eigen::VectorXcd& z) const;
  /// U c, a vector on R.
  Eigen::VectorXcd apply_u(const Eigen::VectorXcd& c) const;
  /// Column j of U (0-based).
  Eigen::VectorXcd u_column(std::size_t j) const;
  /// Full |R| x |W| matrix U.
  Eigen::MatrixXcd materialize_u() const;

  /// Assemble from explicit factors (cache loading, oracles).
  static ThinSvd from_factors(IndexSet R, IndexSet W, Eigen::VectorXd sigma, Eigen::MatrixXcd U, Eigen::MatrixXcd V);

 private:
  friend ThinSvd thin_svd_F_RW(const Geometry&, const IndexSet&, const IndexSet&, const SvdOptions&);

  struct AxisFactor {
    Eigen::MatrixXcd field;  // M x n_a: full 1d fields F*_{J,W_a} v_{a,i}
    Eigen::VectorXd s;       // singular values of the 1d complement operator
  };

  IndexSet R_;
  IndexSet W_;
  SvdRoute route_ = SvdRoute::dense;
  Eigen::VectorXd sigma_;
  Eigen::MatrixXcd V_;
  Eigen::MatrixXcd U_;                        // dense route only
  std::vector<AxisFactor> axes_;              // tensor route only
  std::vector<std::size_t> tensor_column_;    // tensor route: row-major tuple index -> sorted column
};

/// Thin SVD of F*_{R,W}. Automatic route selection takes the tensor route
/// whenever W is a box and R is the complement of a box.
ThinSvd thin_svd_F_RW(const Geometry& g, const IndexSet& R, const IndexSet& W, const SvdOptions& opts = {});

/// F*(v_j) over J, the field of the j-th right singular vector (1-based) on W.
std::vector<cplx> singular_vector_field(const ThinSvd& svd, std::size_t j);

/// Dense matrix of F* (sign=+1) or F (sign=-1) restricted to dst x src.
Eigen::MatrixXcd dense_dft_matrix(const IndexSet& dst, const IndexSet& src, int sign);

/// Makes the largest-modulus entry of each column of V real positive and
/// rotates the matching columns of U (if nonempty) by the same phase.
void fix_column_phases(Eigen::MatrixXcd& V, Eigen::MatrixXcd* U);

}  // namespace holefill
