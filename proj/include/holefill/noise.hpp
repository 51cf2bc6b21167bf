#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "holefill/recovery.hpp"

namespace holefill {

enum class NoiseKind { uniform, gaussian, poisson };

std::string to_string(NoiseKind k);
NoiseKind parse_noise_kind(const std::string& s);

/// uniform: samples in [-scale, scale]; gaussian: standard deviation scale;
/// poisson: target global SNR ||a2|| / E||n||.
struct NoiseModel {
  NoiseKind kind = NoiseKind::gaussian;
  double scale = 1.0;
  std::uint64_t seed = 0;
};

/// Photon scale s with E||n||^2 = sum(a2) / s = (||a2|| / snr)^2.
double poisson_photon_scale(const Eigen::VectorXd& truth_a2, double snr);

/// Additive noise realization on W^c (same ordering as truth_a2).
Eigen::VectorXd sample_noise(const NoiseModel& model, const Eigen::VectorXd& truth_a2);

/// Measurement with noise drawn against its own a2 on W^c added there.
Measurement add_noise(const Measurement& meas, const NoiseModel& model);

/// ||R n|| / ||n||.
double amplification_ratio(const RecoveryOperator& op, const Eigen::VectorXd& n);

/// (1/sqrt|W^c|) (sum_j nu_j^2)^{1/2}.
double expected_amplification_bound(const RecoveryOperator& op);

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

Histogram make_histogram(const std::vector<double>& values, std::size_t bins);

struct TrialSummary {
  NoiseModel model;
  std::vector<double> ratios;
  Histogram histogram;
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
  double bound = 0.0;
};

/// Trial i draws from seed model.seed + i.
TrialSummary run_noise_trials(const RecoveryOperator& op, const NoiseModel& model, const Eigen::VectorXd& truth_a2,
                              std::size_t trials, std::size_t bins = 50);

/// Linear-interpolated quantile of sorted data, q in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace holefill
