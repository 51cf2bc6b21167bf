#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "holefill/lattice.hpp"
#include "holefill/recovery.hpp"
#include "holefill/spectral.hpp"

namespace holefill {

enum class HioMode {
  reflection,  ///< x + P_A(2 P_B x - x) - P_B x
  classic,     ///< y = P_A x; x <- y on S, x - feedback * y off S
};

std::string to_string(HioMode m);
HioMode parse_hio_mode(const std::string& s);

/// Which part of the hole is constrained by recovered values. annular(t)
/// fills the t outermost Chebyshev rings of W: depth_from_boundary < t.
struct FillPolicy {
  enum class Kind { none, full, annular };
  Kind kind = Kind::none;
  int depth = 0;

  static FillPolicy none() { return {}; }
  static FillPolicy full() { return {Kind::full, 0}; }
  static FillPolicy annular(int t) { return {Kind::annular, t}; }

  std::string describe() const;
  bool operator==(const FillPolicy&) const = default;
};

/// Hole points constrained under a policy.
IndexSet fill_region(const IndexSet& W, const FillPolicy& policy);

struct HioConfig {
  int max_iters = 2000;
  double feedback = 0.9;
  int restarts = 1;
  std::uint64_t seed = 0;
  IndexSet support;
  FillPolicy fill;
  HioMode mode = HioMode::reflection;
  int log_every = 50;
  /// Restarts run concurrently on this many threads; results do not depend on it.
  int threads = 1;

  void validate(int w) const;
};

/// Moduli targets on the constrained frequencies.
struct MagnitudeConstraints {
  /// sqrt(target a2) over J; ignored where unconstrained.
  std::vector<double> modulus;
  std::vector<std::uint8_t> constrained;
};

/// Throws on negative targets inside the mask.
MagnitudeConstraints make_constraints(const std::vector<double>& target_a2, const IndexSet& constrained);

std::vector<double> project_support(std::span<const double> rho, const IndexSet& S);

/// Replaces Fourier moduli on the constrained set by the targets, keeps the
/// phase (phase 0 where the modulus vanishes), returns the real part. The
/// discarded imaginary norm is written to imag_norm when given.
std::vector<double> project_magnitude(FftEngine& fft, std::span<const double> rho, const MagnitudeConstraints& c,
                                      double* imag_norm = nullptr);
std::vector<double> project_magnitude(std::span<const double> rho, const MagnitudeConstraints& c, const Geometry& g);

std::vector<double> hio_step(FftEngine& fft, std::span<const double> rho, const HioConfig& config,
                             const MagnitudeConstraints& c);
std::vector<double> hio_step(std::span<const double> rho, const HioConfig& config, const MagnitudeConstraints& c,
                             const Geometry& g);

/// ||(|F rho|^2 - ref) on mask|| / ||ref on mask||.
double data_error(FftEngine& fft, std::span<const double> rho, const std::vector<double>& reference_a2,
                  const IndexSet& mask);
double data_error(std::span<const double> rho, const Measurement& meas);

struct Registration {
  double error = 0.0;
  std::vector<int> shift;
  bool flipped = false;
  int sign = 1;
};

/// Aligns rho to rho0 over circular integer shifts, the flip rho(-x) and the
/// global sign, then returns ||rho - rho0|| / ||rho0|| for the best alignment.
Registration register_images(std::span<const double> rho, std::span<const double> rho0, const Geometry& g);
double register_and_error(std::span<const double> rho, std::span<const double> rho0, const Geometry& g);

struct DiagnosticRow {
  int restart = 0;
  int iteration = 0;
  double data_error = 0.0;
};

struct ReconReport {
  std::vector<double> image;
  /// NaN when no ground truth was supplied.
  double rel_image_error = 0.0;
  double data_error = 0.0;
  int iterations_run = 0;
  FillPolicy fill_policy_used;
  HioMode mode = HioMode::reflection;
  int best_restart = 0;
  std::vector<double> restart_data_errors;
  std::vector<double> restart_image_errors;
  std::vector<DiagnosticRow> diagnostics;
  /// Largest imaginary norm discarded by the final magnitude projection.
  double imag_norm = 0.0;
  /// Recovered fill values clamped at zero before use as targets.
  std::size_t clamped_fill = 0;
};

/// HIO from i.i.d. uniform starts on S. `recovered` holds values on all of W
/// (ordered like W.positions()); config.fill selects which of them constrain.
ReconReport run_hio(const Measurement& meas, const std::optional<Eigen::VectorXd>& recovered, const HioConfig& config,
                    const std::vector<double>* truth = nullptr);

struct PartialFillReport {
  ReconReport selected;
  int selected_depth = 0;
  std::vector<int> depths;
  std::vector<double> depth_data_errors;
  std::vector<double> depth_image_errors;
};

/// Runs annular(t) for t = 0..w and keeps the depth with the smallest data
/// error (ties: lowest depth).
PartialFillReport partial_fill_search(const Measurement& meas, const Eigen::VectorXd& recovered,
                                      const HioConfig& config, const std::vector<double>* truth = nullptr);

}  // namespace holefill
