#include <gtest/gtest.h>

#include <random>

#include "holefill/conditioning.hpp"
#include "holefill/error.hpp"
#include "oracle.hpp"

using namespace holefill;

TEST(Asymptotic, FrozenValues) {
  // tests/oracles/derive.py
  EXPECT_NEAR(asymptotic_norm(1.5, 2.0, 2), 1878.1437007981378, 1e-9);
  EXPECT_NEAR(asymptotic_norm(1.5, 3.0, 2), 188916.7797321385, 1e-7);
  EXPECT_NEAR(asymptotic_norm(1.4, 1.0, 1), 21.085793763713525, 1e-11);
  // mu0 and the norm asymptote are reciprocal squares up to the d factor
  const double a = asymptotic_norm(1.5, 2.0, 1);
  EXPECT_NEAR(mu0_asymptotic(1.5, 2.0, 1) * a * a, 1.0, 1e-12);
}

TEST(RecoveryNorm, PowerIterationMatchesClosedForm) {
  const auto g = Geometry::with_hole(2, 4, 2, 1.5, 2);
  const auto rep = recovery_norm_exact(g, beamstop_window(g), constraint_region(g, autocorrelation_box(g)));
  EXPECT_EQ(rep.method, NormMethod::power_iteration);
  EXPECT_NEAR(rep.recovery_norm, 53.87572093717563, 53.9 * 1e-5);
  EXPECT_NEAR(rep.sigma_min, 0.018558040010496282, 1e-12);
  EXPECT_NEAR(rep.bound, 1.0 / 0.018558040010496282, 1e-9);
  EXPECT_GT(rep.iterations, 0);
}

TEST(RecoveryNorm, DenseOperatorNormOracle) {
  // ||R|| from the dense matrix -pinv(F*_{R,W}) F*_{R,W^c}.
  const auto g = Geometry::with_hole(1, 8, 2, 1.5, 3);
  const auto W = beamstop_window(g);
  const auto R = constraint_region(g, autocorrelation_box(g));
  const Eigen::MatrixXcd A = oracle::dft(R, W, +1);
  const Eigen::MatrixXcd B = oracle::dft(R, W.complement(), +1);
  const Eigen::MatrixXcd Rop = -A.completeOrthogonalDecomposition().pseudoInverse() * B;
  const double ref = Eigen::JacobiSVD<Eigen::MatrixXcd>(Rop).singularValues()(0);
  EXPECT_NEAR(ref, 1421.3479184633352, 1421.3 * 1e-8);
  const auto rep = recovery_norm_exact(g, W, R, {1e-10, 100000});
  EXPECT_NEAR(rep.recovery_norm, ref, ref * 1e-6);
  const auto nu = recovery_singular_values(thin_svd_F_RW(g, R, W));
  EXPECT_NEAR(nu(0), ref, ref * 1e-9);
}

TEST(Complement, SigmaMinThroughTau) {
  for (int d : {1, 2}) {
    const auto g = Geometry::with_hole(d, 8, 2, 1.5, 3);
    const auto W = beamstop_window(g);
    const auto S = autocorrelation_box(g);
    const auto c = sigma_min_via_complement(g, W, S);
    const auto svd = thin_svd_F_RW(g, S.complement(), W, {.route = SvdRoute::dense});
    // the route goes through 1 - tau^2, so relative accuracy is ~eps / sigma^2
    const double s2 = svd.sigma_min() * svd.sigma_min();
    EXPECT_NEAR(c.sigma_min, svd.sigma_min(), 1e-14 / s2 * svd.sigma_min());
    const double tau = Eigen::JacobiSVD<Eigen::MatrixXcd>(oracle::dft(S, W, +1)).singularValues()(0);
    EXPECT_NEAR(c.tau1, tau, 1e-13);
  }
  const auto g = Geometry::with_hole(2, 8, 2, 1.5, 3);
  std::vector<std::uint8_t> m(g.points(), 0);
  m[0] = m[5] = 1;
  EXPECT_THROW(sigma_min_via_complement(g, beamstop_window(g), IndexSet(g, m)), GeometryError);
}

TEST(Complement, IdentityHoldsForRandomSets) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Geometry g{trial % 2 ? 2 : 1, 4, 2, 1.5, 1.0};
    std::bernoulli_distribution b(0.5);
    std::vector<std::uint8_t> km(g.points(), 0), lm(g.points(), 0);
    for (std::size_t i = 0; i < g.points(); ++i) {
      km[i] = rng() % 5 == 0;
      lm[i] = b(rng);
    }
    km[1] = 1;
    const IndexSet K(g, km), L(g, lm);
    if (K.size() > L.size()) continue;
    EXPECT_LE(verify_complement_identity(K, L), 1e-12);
  }
}

TEST(Complement, DenseCapAndSizeChecks) {
  const Geometry big{2, 8, 2, 1.5, 1.0};
  EXPECT_THROW(verify_complement_identity(IndexSet::full(big), IndexSet::full(big)), GeometryError);
  const Geometry g{1, 4, 2, 1.5, 1.0};
  EXPECT_THROW(verify_complement_identity(IndexSet::full(g), IndexSet::box(g, {{0, 0}})), GeometryError);
}

TEST(Sweep, RowsCarryBothRoutes) {
  const auto rows = sweep_asymptote({1.5}, {1.0, 2.0}, {2, 3}, 32);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.exact, r.via_complement, 1e-14 * r.exact * r.exact * r.exact);
    EXPECT_DOUBLE_EQ(r.asymptote, asymptotic_norm(1.5, r.k0, 1));
    EXPECT_FALSE(r.saturated);
  }
}

TEST(Table, SmallGridAgreesWithDirectComputation) {
  const auto rows = conditioning_table({1.5}, {8}, {2, 3}, {1.0}, 2, AcConvention::closed);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    const auto g = r.geometry;
    const auto svd = thin_svd_F_RW(g, constraint_region(g, autocorrelation_box(g)), beamstop_window(g),
                                   {.route = SvdRoute::dense});
    EXPECT_NEAR(r.sigma_min, svd.sigma_min(), 1e-10 * svd.sigma_min());
    EXPECT_NEAR(r.recovery_norm, std::sqrt(1.0 / (svd.sigma_min() * svd.sigma_min()) - 1.0), 1e-5 * r.recovery_norm);
  }
  // more oversampling, better conditioning
  EXPECT_GT(rows[0].recovery_norm, rows[1].recovery_norm);
}

// Published entries are labelled by image width 2N; open box convention.
TEST(Table, PublishedEntriesWithinFivePercent) {
  const auto rows = conditioning_table({1.5}, {32, 128}, {3}, {2.0, 1.0}, 2, AcConvention::open);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NEAR(rows[0].recovery_norm / 1.12e4, 1.0, 0.05);   // width 64, k0=2
  EXPECT_NEAR(rows[1].recovery_norm / 70.87, 1.0, 0.05);    // width 64, k0=1
  EXPECT_NEAR(rows[2].recovery_norm / 1.21e4, 1.0, 0.05);   // width 256, k0=2
  EXPECT_NEAR(rows[3].recovery_norm / 74.63, 1.0, 0.05);    // width 256, k0=1
}
