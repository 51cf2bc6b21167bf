#include "holefill/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "holefill/conditioning.hpp"
#include "holefill/error.hpp"

namespace holefill {

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::uniform: return "uniform";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::poisson: return "poisson";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "uniform") return NoiseKind::uniform;
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "poisson") return NoiseKind::poisson;
  throw ConfigError("unknown noise kind '" + s + "'");
}

double poisson_photon_scale(const Eigen::VectorXd& truth_a2, double snr) {
  const double total = truth_a2.sum();
  const double norm2 = truth_a2.squaredNorm();
  if (!(total > 0.0) || !(snr > 0.0)) throw ConfigError("poisson noise needs positive total intensity and SNR");
  return snr * snr * total / norm2;
}

Eigen::VectorXd sample_noise(const NoiseModel& model, const Eigen::VectorXd& truth_a2) {
  std::mt19937_64 rng(model.seed);
  const auto n = truth_a2.size();
  Eigen::VectorXd out(n);
  switch (model.kind) {
    case NoiseKind::uniform: {
      std::uniform_real_distribution<double> dist(-model.scale, model.scale);
      for (Eigen::Index i = 0; i < n; ++i) out(i) = dist(rng);
      break;
    }
    case NoiseKind::gaussian: {
      std::normal_distribution<double> dist(0.0, model.scale);
      for (Eigen::Index i = 0; i < n; ++i) out(i) = dist(rng);
      break;
    }
    case NoiseKind::poisson: {
      if ((truth_a2.array() < 0.0).any()) throw ConfigError("poisson noise needs nonnegative intensities");
      const double s = poisson_photon_scale(truth_a2, model.scale);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = s * truth_a2(i);
        double counts = 0.0;
        if (mean > 0.0) {
          std::poisson_distribution<long long> dist(mean);
          counts = static_cast<double>(dist(rng));
        }
        out(i) = counts / s - truth_a2(i);
      }
      break;
    }
  }
  return out;
}

Measurement add_noise(const Measurement& meas, const NoiseModel& model) {
  meas.validate();
  const IndexSet Wc = meas.hole.complement();
  const auto pos = Wc.positions();
  Eigen::VectorXd truth(static_cast<Eigen::Index>(pos.size()));
  for (std::size_t i = 0; i < pos.size(); ++i) truth(static_cast<Eigen::Index>(i)) = meas.a2[pos[i]];
  const Eigen::VectorXd n = sample_noise(model, truth);
  Measurement out = meas;
  for (std::size_t i = 0; i < pos.size(); ++i) out.a2[pos[i]] += n(static_cast<Eigen::Index>(i));
  return out;
}

double amplification_ratio(const RecoveryOperator& op, const Eigen::VectorXd& n) {
  const double nn = n.norm();
  if (nn == 0.0) throw ConfigError("amplification ratio of a zero noise vector");
  return op.apply(n.cast<cplx>()).norm() / nn;
}

double expected_amplification_bound(const RecoveryOperator& op) {
  const Eigen::VectorXd nu = recovery_singular_values(op.svd());
  return nu.norm() / std::sqrt(static_cast<double>(op.Wc().size()));
}

Histogram make_histogram(const std::vector<double>& values, std::size_t bins) {
  Histogram h;
  if (values.empty() || bins == 0) return h;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) hi = lo + 1.0;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, sorted.size() - 1);
  return sorted[i] + (pos - static_cast<double>(i)) * (sorted[j] - sorted[i]);
}

TrialSummary run_noise_trials(const RecoveryOperator& op, const NoiseModel& model, const Eigen::VectorXd& truth_a2,
                              std::size_t trials, std::size_t bins) {
  if (trials == 0) throw ConfigError("at least one noise trial is required");
  if (static_cast<std::size_t>(truth_a2.size()) != op.Wc().size())
    throw GeometryError("truth length does not match W^c");
  TrialSummary out;
  out.model = model;
  out.ratios.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    NoiseModel m = model;
    m.seed = model.seed + t;
    out.ratios.push_back(amplification_ratio(op, sample_noise(m, truth_a2)));
  }
  std::vector<double> sorted = out.ratios;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(trials);
  out.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : sorted) ss += (r - out.mean) * (r - out.mean);
  out.stddev = trials > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  out.median = quantile_sorted(sorted, 0.5);
  out.p95 = quantile_sorted(sorted, 0.95);
  out.p99 = quantile_sorted(sorted, 0.99);
  out.max = sorted.back();
  out.bound = expected_amplification_bound(op);
  out.histogram = make_histogram(out.ratios, bins);
  return out;
}

}  // namespace holefill
