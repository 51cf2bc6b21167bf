#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "holefill/error.hpp"
#include "holefill/lattice.hpp"
#include "holefill/spectral.hpp"
#include "oracle.hpp"

using namespace holefill;

namespace {

Eigen::VectorXcd random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  Eigen::VectorXcd v(n);
  for (auto& x : v) x = cplx(N01(rng), N01(rng));
  return v;
}

IndexSet random_set(const Geometry& g, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(p);
  std::vector<std::uint8_t> m(g.points());
  for (auto& x : m) x = b(rng);
  m[0] = 1;
  return IndexSet(g, m);
}

}  // namespace

TEST(DftEntry, ReducesPhaseExactly) {
  const long M = 24;
  for (long j = -11; j <= 12; ++j)
    for (long k = -11; k <= 12; ++k) {
      const cplx ref = std::polar(1.0 / std::sqrt(24.0), 2.0 * std::numbers::pi * j * k / 24.0);
      EXPECT_NEAR(std::abs(dft_entry(j, k, M, +1) - ref), 0.0, 2e-15);
      EXPECT_NEAR(std::abs(dft_entry(j, k, M, -1) - std::conj(ref)), 0.0, 2e-15);
    }
  // large products stay exact after integer reduction
  EXPECT_NEAR(std::abs(dft_entry(1'000'003, 999'999, 1024, 1) - dft_entry((1'000'003 % 1024), 999'999 % 1024, 1024, 1)),
              0.0, 1e-15);
}

TEST(FftEngine, MatchesDenseDft) {
  for (const Geometry g : {Geometry{1, 4, 3, 1.5, 1.0}, Geometry{2, 3, 2, 1.5, 1.0}, Geometry{3, 2, 2, 1.5, 0.5}}) {
    const auto J = IndexSet::full(g);
    const Eigen::VectorXcd x = random_vec(g.points(), 3);
    std::vector<cplx> y(x.data(), x.data() + x.size());
    FftEngine fft(g);
    fft.forward(y);
    const Eigen::VectorXcd ref = oracle::dft(J, J, -1) * x;
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(std::abs(y[i] - ref(i)), 0.0, 1e-12);
    fft.inverse(y);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(std::abs(y[i] - x(i)), 0.0, 1e-12);
  }
}

TEST(FftEngine, Parseval) {
  const Geometry g{2, 16, 3, 1.5, 2.0};
  const Eigen::VectorXcd x = random_vec(g.points(), 11);
  std::vector<cplx> y(x.data(), x.data() + x.size());
  FftEngine fft(g);
  fft.forward(y);
  double e = 0.0;
  for (auto v : y) e += std::norm(v);
  EXPECT_NEAR(e / x.squaredNorm(), 1.0, 1e-12);
}

TEST(FftEngine, FftOrderIsShiftedTransform) {
  const Geometry g{2, 3, 2, 1.5, 1.0};
  const Eigen::VectorXcd x = random_vec(g.points(), 5);
  FftEngine fft(g);
  std::vector<cplx> a(x.data(), x.data() + x.size());
  fft.forward(a);
  // Same data placed in FFT order gives the same spectrum in FFT order.
  const auto perm = fft.fft_order();
  std::vector<cplx> b(g.points());
  for (std::size_t i = 0; i < b.size(); ++i) b[perm[i]] = x(i);
  fft.forward_fft_order(b);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(b[perm[i]] - a[i]), 0.0, 1e-12);
  fft.inverse_fft_order(b);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(b[perm[i]] - x(i)), 0.0, 1e-12);
}

TEST(RealFftEngine, AgreesWithComplexTransform) {
  for (const Geometry g : {Geometry{1, 4, 3, 1.5, 1.0}, Geometry{2, 4, 2, 1.5, 1.0}}) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> N01;
    std::vector<double> x(g.points());
    for (auto& v : x) v = N01(rng);
    FftEngine fft(g);
    std::vector<cplx> full(x.begin(), x.end());
    fft.forward_fft_order(full);
    RealFftEngine rfft(g);
    std::vector<cplx> half(rfft.half_size());
    rfft.forward(x, half);
    for (std::size_t i = 0; i < half.size(); ++i) {
      EXPECT_NEAR(std::abs(half[i] - full[rfft.half_to_full()[i]]), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(std::conj(half[i]) - full[rfft.partner()[i]]), 0.0, 1e-12);
    }
    std::vector<double> back(g.points());
    rfft.inverse(half, back);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-12);
  }
}

TEST(RestrictedDft, MatchesDenseSubmatrix) {
  const Geometry g{2, 4, 2, 1.5, 1.0};
  const auto A = random_set(g, 0.3, 1), B = random_set(g, 0.5, 2);
  for (auto dir : {Direction::forward, Direction::inverse}) {
    const RestrictedDft op(A, B, dir);
    const Eigen::VectorXcd x = random_vec(A.size(), 4);
    const Eigen::VectorXcd y = apply_restricted(op, x);
    const Eigen::VectorXcd ref = oracle::dft(B, A, dir == Direction::forward ? -1 : 1) * x;
    EXPECT_LE((y - ref).cwiseAbs().maxCoeff(), 1e-12);
    // adjoint identity <op x, z> = <x, op* z>
    const Eigen::VectorXcd z = random_vec(B.size(), 6);
    EXPECT_NEAR(std::abs(y.dot(z) - x.dot(op.adjoint().apply(z))), 0.0, 1e-10);
  }
  EXPECT_THROW(RestrictedDft(A, IndexSet::full(Geometry{2, 5, 2, 1.5, 1.0}), Direction::forward), GeometryError);
}

TEST(EmbedGather, RoundTrip) {
  const Geometry g{2, 3, 2, 1.5, 1.0};
  const auto S = random_set(g, 0.4, 8);
  const Eigen::VectorXcd x = random_vec(S.size(), 1);
  const auto grid = embed(S, x);
  EXPECT_EQ((gather(S, grid) - x).norm(), 0.0);
  double off = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p)
    if (!S.contains(p)) off += std::abs(grid[p]);
  EXPECT_EQ(off, 0.0);
}

// Frozen from tests/oracles/derive.py (numpy SVD of the kernel matrix).
struct FrozenSvd {
  int d, N, m, w;
  double sigma_max, sigma_min;
};

class ThinSvdFrozen : public ::testing::TestWithParam<FrozenSvd> {};

TEST_P(ThinSvdFrozen, BothRoutesMatchOracle) {
  const auto c = GetParam();
  const auto g = Geometry::with_hole(c.d, c.N, c.m, 1.5, c.w);
  const auto W = beamstop_window(g);
  const auto R = constraint_region(g, autocorrelation_box(g));
  for (auto route : {SvdRoute::dense, SvdRoute::tensor}) {
    SvdOptions o;
    o.route = route;
    const auto svd = thin_svd_F_RW(g, R, W, o);
    EXPECT_EQ(svd.route(), route);
    EXPECT_NEAR(svd.sigma_max(), c.sigma_max, 1e-13 * c.sigma_max);
    EXPECT_NEAR(svd.sigma_min(), c.sigma_min, 1e-9 * c.sigma_min);
  }
}

INSTANTIATE_TEST_SUITE_P(Oracle, ThinSvdFrozen,
                         ::testing::Values(FrozenSvd{1, 4, 3, 2, 0.9629306121901213, 0.17634616366819952},
                                           FrozenSvd{1, 8, 2, 3, 0.9115545762652941, 0.0007035573342131741},
                                           FrozenSvd{2, 4, 3, 2, 0.9973491403376215, 0.24744465073559596},
                                           FrozenSvd{2, 4, 2, 2, 0.880371974184442, 0.018558040010496282}),
                         [](const auto& info) {
                           const auto& c = info.param;
                           return "d" + std::to_string(c.d) + "N" + std::to_string(c.N) + "m" + std::to_string(c.m) +
                                  "w" + std::to_string(c.w);
                         });

TEST(ThinSvd, FactorsReconstructOperator) {
  const auto g = Geometry::with_hole(2, 4, 3, 1.5, 3);
  const auto W = beamstop_window(g);
  const auto R = constraint_region(g, autocorrelation_box(g));
  const Eigen::MatrixXcd A = oracle::dft(R, W, +1);
  for (auto route : {SvdRoute::dense, SvdRoute::tensor}) {
    SvdOptions o;
    o.route = route;
    const auto svd = thin_svd_F_RW(g, R, W, o);
    const Eigen::MatrixXcd U = svd.materialize_u();
    const Eigen::MatrixXcd rec = U * svd.sigma().asDiagonal() * svd.V().adjoint();
    EXPECT_LE((rec - A).cwiseAbs().maxCoeff(), 1e-12);
    const auto n = static_cast<Eigen::Index>(W.size());
    EXPECT_LE((U.adjoint() * U - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_LE((svd.V().adjoint() * svd.V() - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::VectorXcd z = random_vec(R.size(), 2);
    EXPECT_LE((svd.apply_u_adjoint(z) - U.adjoint() * z).cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::VectorXcd c = random_vec(W.size(), 3);
    EXPECT_LE((svd.apply_u(c) - U * c).cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index i = 1; i < svd.sigma().size(); ++i) EXPECT_GE(svd.sigma()(i - 1), svd.sigma()(i));
  }
}

TEST(ThinSvd, AutoRouteAndNonBoxShapes) {
  const auto g = Geometry::with_hole(2, 4, 3, 1.5, 2);
  const auto W = beamstop_window(g);
  const auto R = constraint_region(g, autocorrelation_box(g));
  EXPECT_EQ(thin_svd_F_RW(g, R, W).route(), SvdRoute::tensor);
  // Drop one point of R: only the dense route applies.
  std::vector<std::uint8_t> m(R.mask().begin(), R.mask().end());
  m[R.positions()[5]] = 0;
  const IndexSet R2(g, m);
  const auto svd = thin_svd_F_RW(g, R2, W);
  EXPECT_EQ(svd.route(), SvdRoute::dense);
  const Eigen::VectorXd ref = Eigen::JacobiSVD<Eigen::MatrixXcd>(oracle::dft(R2, W, +1)).singularValues();
  EXPECT_LE((svd.sigma() - ref).cwiseAbs().maxCoeff(), 1e-13);
  SvdOptions o;
  o.route = SvdRoute::tensor;
  EXPECT_THROW(thin_svd_F_RW(g, R2, W, o), GeometryError);
}

TEST(ThinSvd, SingularVectorFieldIsAdjointOfV) {
  const auto g = Geometry::with_hole(1, 8, 2, 1.5, 3);
  const auto W = beamstop_window(g);
  const auto R = constraint_region(g, autocorrelation_box(g));
  const auto svd = thin_svd_F_RW(g, R, W);
  const auto J = IndexSet::full(g);
  const Eigen::VectorXcd ref = oracle::dft(J, W, +1) * svd.V().col(4);
  const auto field = singular_vector_field(svd, 5);
  for (std::size_t i = 0; i < field.size(); ++i) EXPECT_NEAR(std::abs(field[i] - ref(i)), 0.0, 1e-12);
  EXPECT_THROW(singular_vector_field(svd, 0), GeometryError);
}
