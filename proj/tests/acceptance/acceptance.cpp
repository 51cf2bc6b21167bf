// One line per acceptance criterion. Pass criterion numbers as arguments to
// run a subset. Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "holefill/conditioning.hpp"
#include "holefill/error.hpp"
#include "holefill/noise.hpp"
#include "holefill/phantom.hpp"
#include "holefill/recovery.hpp"
#include "holefill/retrieval.hpp"
#include "holefill/spectral.hpp"
#include "oracle.hpp"

using namespace holefill;

namespace {

// Tolerances and run sizes.
constexpr double kTableRel = 0.05;
constexpr double kBenchRel = 0.02;
constexpr double kBenchSigma = 9.15e-6;
constexpr double kBenchRatio = 1.0929e5;
constexpr double kFillRel = 1e-10;
constexpr double kIdentityTol = 1e-12;
constexpr int kIdentityPairs = 50;
constexpr std::size_t kNoiseTrials = 5000;
constexpr double kNoiseSnr = 1000.0;
constexpr int kHioIters = 3000;
constexpr int kHioRestarts = 20;
constexpr double kWinFraction = 0.9;
constexpr double kHioAloneMin = 0.1;
constexpr double kFillHioMax = 0.01;
constexpr int kPartialTrials = 200;
constexpr int kPartialIters = 500;
constexpr double kPinvTol = 1e-10;
constexpr double kApplyTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

void info(const std::string& s) { std::printf("  info: %s\n", s.c_str()); std::fflush(stdout); }

// The 64x64-image scene: N=32, m=3, 54x53 support, S_AC from the support.
struct Scene64 {
  Geometry g;
  Phantom p;
  IndexSet S;
  IndexSet s_ac;
  Simulation sim;
  explicit Scene64(int w) : g(Geometry::with_hole(2, 32, 3, 1.5, w)) {
    p = make_phantom(g, phantom_preset("signed64", g, 1));
    S = estimate_support(p, 1);
    s_ac = autocorrelation_support(S);
    sim = simulate_measurement(p, g);
  }
};

Outcome table_reproduction() {
  const std::map<std::pair<int, int>, double> published = {
      {{2, 1}, 337.8}, {{2, 2}, 1.73e5}, {{2, 3}, 1.08e8},  {{3, 1}, 70.87}, {{3, 2}, 1.12e4},
      {{3, 3}, 1.99e6}, {{4, 1}, 45.4},  {{4, 2}, 5.42e3}, {{4, 3}, 7.25e5}};
  // The table's N=64 is the 64-pixel image, [1-N:N]^2 with N=32.
  const auto rows = conditioning_table({1.5}, {32}, {2, 3, 4}, {1.0, 2.0, 3.0}, 2, AcConvention::open);
  int ok = 0;
  std::string bad;
  for (const auto& r : rows) {
    const double ref = published.at({r.geometry.m, static_cast<int>(r.geometry.k0)});
    const double rel = r.recovery_norm / ref - 1.0;
    info("m=" + std::to_string(r.geometry.m) + " k0=" + sci(r.geometry.k0) + " norm=" + sci(r.recovery_norm) +
         " published=" + sci(ref) + " rel=" + sci(rel, 3));
    if (std::abs(rel) <= kTableRel)
      ++ok;
    else
      bad += " (m=" + std::to_string(r.geometry.m) + ",k0=" + sci(r.geometry.k0) + ")";
  }
  return {ok == static_cast<int>(published.size()),
          std::to_string(ok) + "/" + std::to_string(published.size()) + " within 5%" +
              (bad.empty() ? "" : "; outside:" + bad)};
}

Outcome benchmark_configuration() {
  const Geometry g{2, 32, 3, 1.5, 2.0};
  const auto W = beamstop_window(g);
  const auto R = constraint_region(g, IndexSet::box(g, {{-55, 55}, {-54, 54}}));
  const auto svd = thin_svd_F_RW(g, R, W);
  const double smin = svd.sigma_min(), ratio = svd.sigma_max() / svd.sigma_min();
  {
    const Geometry lit{2, 64, 3, 1.5, 2.0};
    const auto s = thin_svd_F_RW(lit, constraint_region(lit, IndexSet::box(lit, {{-96, 96}, {-96, 96}})),
                                 beamstop_window(lit));
    info("N=64 grid with S_AC=[-96:96]^2: sigma_min=" + sci(s.sigma_min()) +
         " ratio=" + sci(s.sigma_max() / s.sigma_min()));
  }
  const bool pass = std::abs(smin / kBenchSigma - 1.0) <= kBenchRel && std::abs(ratio / kBenchRatio - 1.0) <= kBenchRel;
  return {pass, "192^2 grid, W 13x13, |R|=" + std::to_string(R.size()) + ": sigma_min=" + sci(smin, 6) +
                    " ratio=" + sci(ratio, 6)};
}

Outcome exact_fill() {
  const Scene64 s(8);
  const auto op = RecoveryOperator::build(s.g, s.s_ac);
  const auto res = recover_hole(op, s.sim.measurement);
  const Eigen::VectorXd err = (res.alpha - s.sim.withheld).cwiseAbs();
  const double max_norm = err.maxCoeff() / s.sim.withheld.cwiseAbs().maxCoeff();
  const double entry = err.cwiseQuotient(s.sim.withheld.cwiseAbs()).maxCoeff();
  info("per-entry max relative error " + sci(entry, 3) + ", sigma_min " + sci(op.svd().sigma_min(), 3));
  return {max_norm <= kFillRel, "15x15 hole, max|err|/max|truth| = " + sci(max_norm, 3)};
}

double oracle_identity(const IndexSet& K, const IndexSet& L) {
  const auto p = static_cast<Eigen::Index>(K.size());
  Eigen::VectorXd s = Eigen::VectorXd::Zero(p), t = Eigen::VectorXd::Zero(p);
  if (!L.is_empty()) {
    const auto v = Eigen::JacobiSVD<Eigen::MatrixXcd>(oracle::dft(L, K, +1)).singularValues();
    s.head(v.size()) = v;
  }
  const auto Lc = L.complement();
  if (!Lc.is_empty()) {
    const auto v = Eigen::JacobiSVD<Eigen::MatrixXcd>(oracle::dft(Lc, K, +1)).singularValues();
    t.head(v.size()) = v;
  }
  double dev = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) dev = std::max(dev, std::abs(s(j) * s(j) + t(p - 1 - j) * t(p - 1 - j) - 1.0));
  return dev;
}

Outcome complement_identity() {
  std::mt19937_64 rng(2024);
  const std::vector<Geometry> grids = {{1, 16, 2, 1.5, 1.0}, {1, 8, 2, 1.5, 1.0}, {1, 5, 3, 1.5, 1.0},
                                       {1, 4, 4, 1.5, 1.0},  {2, 2, 2, 1.5, 1.0}, {2, 1, 3, 1.5, 1.0},
                                       {2, 1, 4, 1.5, 1.0}};
  double worst_oracle = 0.0, worst_lib = 0.0;
  int pairs = 0;
  while (pairs < kIdentityPairs) {
    const Geometry& g = grids[static_cast<std::size_t>(pairs) % grids.size()];
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double pk = 0.1 + 0.4 * U(rng), pl = 0.2 + 0.7 * U(rng);
    std::vector<std::uint8_t> km(g.points()), lm(g.points());
    for (std::size_t i = 0; i < g.points(); ++i) {
      km[i] = U(rng) < pk;
      lm[i] = U(rng) < pl;
    }
    const IndexSet K(g, km), L(g, lm);
    if (K.is_empty() || K.size() > L.size()) continue;
    worst_oracle = std::max(worst_oracle, oracle_identity(K, L));
    worst_lib = std::max(worst_lib, verify_complement_identity(K, L));
    ++pairs;
  }
  return {worst_oracle <= kIdentityTol && worst_lib <= kIdentityTol,
          std::to_string(pairs) + " pairs, max deviation oracle " + sci(worst_oracle, 3) + ", library " +
              sci(worst_lib, 3)};
}

Outcome asymptotic_agreement() {
  const std::vector<double> betas = {1.4, 1.6, 1.8}, k0s = {1, 2, 3, 4, 5, 6};
  const auto rows = sweep_asymptote(betas, k0s, {2, 3, 4, 5}, 128);
  int below = 0, nonmono = 0, checked = 0, saturated = 0;
  std::map<std::pair<double, double>, std::vector<const AsymptoteRow*>> by_point;
  for (const auto& r : rows) {
    if (r.saturated) ++saturated;
    by_point[{r.beta, r.k0}].push_back(&r);
    if (r.m == 3 && !r.saturated) {
      ++checked;
      if (!(r.exact > r.asymptote)) {
        ++below;
        info("m=3 beta=" + sci(r.beta) + " k0=" + sci(r.k0) + " exact " + sci(r.exact) + " <= asymptote " +
             sci(r.asymptote));
      }
    }
  }
  for (auto& [key, rs] : by_point) {
    std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) { return a->m < b->m; });
    std::string line = "beta=" + sci(key.first) + " k0=" + sci(key.second) + " ratio by m:";
    for (std::size_t i = 0; i < rs.size(); ++i) {
      line += " " + (rs[i]->saturated ? std::string("sat") : sci(rs[i]->exact / rs[i]->asymptote, 4));
      if (i > 0 && !rs[i]->saturated && !rs[i - 1]->saturated &&
          !(rs[i]->exact / rs[i]->asymptote < rs[i - 1]->exact / rs[i - 1]->asymptote))
        ++nonmono;
    }
    info(line);
  }
  return {below == 0 && nonmono == 0 && checked > 0,
          std::to_string(checked - below) + "/" + std::to_string(checked) + " m=3 rows above the asymptote, " +
              std::to_string(nonmono) + " monotonicity violations, " + std::to_string(saturated) + " saturated rows"};
}

Outcome noise_bound() {
  const Scene64 s(7);
  const auto op = RecoveryOperator::build(s.g, s.s_ac);
  const auto pos = op.Wc().positions();
  Eigen::VectorXd truth(static_cast<Eigen::Index>(pos.size()));
  for (std::size_t i = 0; i < pos.size(); ++i) truth(static_cast<Eigen::Index>(i)) = s.sim.full_a2[pos[i]];
  // Gaussian sigma chosen so E||n|| ~ ||a2|| / snr, matching the Poisson SNR.
  const double sigma = truth.norm() / (kNoiseSnr * std::sqrt(static_cast<double>(truth.size())));
  const auto gauss = run_noise_trials(op, {NoiseKind::gaussian, sigma, 1}, truth, kNoiseTrials);
  const auto pois = run_noise_trials(op, {NoiseKind::poisson, kNoiseSnr, 1}, truth, kNoiseTrials);
  const double se = gauss.stddev / std::sqrt(static_cast<double>(kNoiseTrials));
  info("gaussian mean " + sci(gauss.mean) + " se " + sci(se, 3) + " max " + sci(gauss.max) + "; poisson mean " +
       sci(pois.mean) + " max " + sci(pois.max));
  const bool pass = gauss.mean <= gauss.bound + 3.0 * se && pois.mean > gauss.mean;
  return {pass, "mean " + sci(gauss.mean) + " vs bound " + sci(gauss.bound) + " (+3se " + sci(3 * se, 3) +
                    "), poisson mean " + sci(pois.mean) + (pois.mean > gauss.mean ? " > " : " <= ") + "gaussian"};
}

Outcome fill_hio_dominance() {
  bool pass = true;
  std::string summary;
  for (int w : {7, 9, 11, 13, 15}) {
    const Scene64 s(w);
    const auto op = RecoveryOperator::build(s.g, s.s_ac);
    const auto rec = recover_hole(op, s.sim.measurement);
    HioConfig cfg;
    cfg.max_iters = kHioIters;
    cfg.restarts = kHioRestarts;
    cfg.seed = 1000;
    cfg.support = s.S;
    cfg.mode = HioMode::classic;
    const auto alone = run_hio(s.sim.measurement, std::nullopt, cfg, &s.p.image);
    cfg.fill = FillPolicy::full();
    const auto filled = run_hio(s.sim.measurement, rec.alpha, cfg, &s.p.image);
    int wins = 0;
    for (int r = 0; r < kHioRestarts; ++r)
      wins += filled.restart_image_errors[static_cast<std::size_t>(r)] <
              alone.restart_image_errors[static_cast<std::size_t>(r)];
    const bool ok = wins >= kWinFraction * kHioRestarts && alone.rel_image_error > kHioAloneMin &&
                    filled.rel_image_error < kFillHioMax;
    pass = pass && ok;
    info("w=" + std::to_string(w) + " wins " + std::to_string(wins) + "/" + std::to_string(kHioRestarts) +
         " HIO alone " + sci(alone.rel_image_error, 3) + " Fill+HIO " + sci(filled.rel_image_error, 3) +
         (ok ? "" : "  <- fails"));
    summary += " w" + std::to_string(w) + ":" + sci(alone.rel_image_error, 2) + "/" + sci(filled.rel_image_error, 2);
  }
  return {pass, "HIO-alone/Fill+HIO errors" + summary};
}

Outcome partial_fill_noise() {
  const Scene64 s(5);
  const auto op = RecoveryOperator::build(s.g, s.s_ac);
  std::vector<double> alone, partial;
  std::map<int, int> depths;
  for (int t = 0; t < kPartialTrials; ++t) {
    const auto meas = add_noise(s.sim.measurement, {NoiseKind::poisson, kNoiseSnr, static_cast<std::uint64_t>(t)});
    const auto rec = recover_hole(op, meas);
    HioConfig cfg;
    cfg.max_iters = kPartialIters;
    cfg.seed = 5000 + static_cast<std::uint64_t>(t);
    cfg.support = s.S;
    cfg.mode = HioMode::classic;
    const auto p = partial_fill_search(meas, rec.alpha, cfg, &s.p.image);
    alone.push_back(p.depth_image_errors[0]);
    partial.push_back(p.selected.rel_image_error);
    ++depths[p.selected_depth];
  }
  std::sort(alone.begin(), alone.end());
  std::sort(partial.begin(), partial.end());
  const double ma = quantile_sorted(alone, 0.5), mp = quantile_sorted(partial, 0.5);
  std::string hist;
  for (auto [d, c] : depths) hist += " " + std::to_string(d) + ":" + std::to_string(c);
  info("selected depth counts" + hist + "; quartiles HIO " + sci(quantile_sorted(alone, 0.25), 3) + "/" +
       sci(quantile_sorted(alone, 0.75), 3) + ", partial " + sci(quantile_sorted(partial, 0.25), 3) + "/" +
       sci(quantile_sorted(partial, 0.75), 3));
  return {mp < ma, std::to_string(kPartialTrials) + " trials, median Partial-Fill+HIO " + sci(mp, 4) +
                       " vs HIO alone " + sci(ma, 4)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N01;
  double worst_fill = 0.0, worst_apply = 0.0;
  int grids = 0, solves = 0, skipped = 0;
  for (int m = 2; 2 * m <= 32; ++m)
    for (int N = 1; 2 * m * N <= 32; ++N) {
      ++grids;
      for (int w = 1; w <= m * N; ++w)
        for (auto conv : {AcConvention::closed, AcConvention::open}) {
          const auto g = Geometry::with_hole(1, N, m, 1.5, w);
          try {
            g.validate_hole();
            const auto op = RecoveryOperator::build(g, autocorrelation_box(g, conv));
            Measurement meas{g, std::vector<double>(g.points()), op.W()};
            for (std::size_t i = 0; i < g.points(); ++i) meas.a2[i] = op.W().contains(i) ? 0.0 : U(rng);
            const auto res = recover_hole(op, meas);
            const Eigen::VectorXcd ref = oracle::pinv_fill(op.R(), op.W(), meas.a2);
            const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
            worst_fill = std::max(worst_fill, (res.alpha - ref.real()).cwiseAbs().maxCoeff() / scale);
            ++solves;
          } catch (const GeometryError&) {
            ++skipped;
          } catch (const IllPosedError&) {
            ++skipped;
          }
        }
      const auto g = Geometry::with_hole(1, N, m, 1.5, 1);
      for (int rep = 0; rep < 4; ++rep) {
        std::vector<std::uint8_t> sm(g.points()), dm(g.points());
        for (std::size_t i = 0; i < g.points(); ++i) {
          sm[i] = U(rng) < 0.5;
          dm[i] = U(rng) < 0.5;
        }
        sm[0] = dm[0] = 1;
        const IndexSet src(g, sm), dst(g, dm);
        Eigen::VectorXcd x(static_cast<Eigen::Index>(src.size()));
        for (auto& v : x) v = cplx(N01(rng), N01(rng));
        for (auto dir : {Direction::forward, Direction::inverse}) {
          const Eigen::VectorXcd y = apply_restricted(RestrictedDft(src, dst, dir), x);
          const Eigen::VectorXcd ref = oracle::dft(dst, src, dir == Direction::inverse ? +1 : -1) * x;
          worst_apply = std::max(worst_apply, (y - ref).cwiseAbs().maxCoeff());
        }
      }
    }
  info(std::to_string(skipped) + " hole/convention combinations skipped (|R| <= |W| or below the sigma floor)");
  return {worst_fill <= kPinvTol && worst_apply <= kApplyTol && solves > 0,
          std::to_string(grids) + " grids, " + std::to_string(solves) + " solves: fill max dev " + sci(worst_fill, 3) +
              ", apply_restricted max dev " + sci(worst_apply, 3)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"conditioning table, 64-pixel image", table_reproduction},
      {"benchmark sigma_min and condition number", benchmark_configuration},
      {"exact-data fill of a 15x15 hole", exact_fill},
      {"complement singular value identity", complement_identity},
      {"1d exact norm vs asymptote", asymptotic_agreement},
      {"noise amplification bound", noise_bound},
      {"Fill+HIO vs HIO alone, noise-free", fill_hio_dominance},
      {"Partial-Fill+HIO under Poisson noise", partial_fill_noise},
      {"dense oracle equivalence, 1d", oracle_equivalence},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d %s: %s (%.1fs)  %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
