#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "holefill/lattice.hpp"
#include "holefill/recovery.hpp"

namespace holefill {

/// Quartic B-spline on [-5/2, 5/2], C^2 with compact support.
double quartic_bspline(double t);
/// Quintic smoothstep 6t^5 - 15t^4 + 10t^3 clamped to [0, 1]; C^2.
double smooth_step(double t);

enum class BumpProfile {
  quartic_spline,  ///< prod_a B4(2.5 (x_a - c_a) / h_a) / B4(0); zero for |x_a - c_a| >= h_a
  plateau,         ///< prod_a S((x_a - c_a + h_a) / t_lo) S((c_a + h_a - x_a) / t_hi)
};

struct Bump {
  BumpProfile profile = BumpProfile::quartic_spline;
  std::vector<double> center;
  std::vector<double> half_width;
  double amplitude = 1.0;
  double taper = 3.0;
  /// Plateau only. The edge tapers t_lo, t_hi of axis a swing by this
  /// fraction around `taper` along the other axes, which keeps the plateau
  /// from being a product of 1d profiles.
  double taper_variation = 0.0;

  double operator()(std::span<const int> x) const;
};

struct PhantomSpec {
  std::string preset;
  /// Box holding the image support.
  Box support;
  int n_bumps = 20;
  bool signed_bumps = true;
  std::uint64_t seed = 0;
  /// Bump amplitudes are drawn from [-amplitude, amplitude] (signed) or [0, amplitude].
  double amplitude = 1.0;
  double min_half_width = 3.0;
  double max_half_width = 10.0;
  /// Height of a C^2 plateau filling the support box; 0 disables it.
  double plateau_level = 0.0;
  double taper = 3.0;
  double taper_variation = 0.0;
};

struct Phantom {
  Geometry geometry;
  std::vector<double> image;
  IndexSet support;
  bool is_signed = false;
  PhantomSpec spec;
  std::vector<Bump> bumps;
};

/// Random bumps (and optional plateau) rendered exactly zero outside spec.support.
Phantom make_phantom(const Geometry& g, const PhantomSpec& spec);
/// n_bumps quartic-spline bumps inside [1-N:N]^d.
Phantom make_phantom(const Geometry& g, int n_bumps, bool signed_bumps, std::uint64_t seed);
/// Renders an explicit bump list on the support box.
Phantom render_phantom(const Geometry& g, const Box& support, std::vector<Bump> bumps);

/// "signed64", "nonneg64", "largemean64". The support box is 54x53 for N=32
/// and scales with N.
PhantomSpec phantom_preset(const std::string& name, const Geometry& g, std::uint64_t seed);
std::vector<std::string> phantom_preset_names();

struct Simulation {
  Measurement measurement;
  /// |rho_hat|^2 on W, ordered like W.positions().
  Eigen::VectorXd withheld;
  /// |rho_hat|^2 over J.
  std::vector<double> full_a2;
};

Simulation simulate_measurement(const Phantom& p, const Geometry& g);
Simulation simulate_measurement(const std::vector<double>& image, const Geometry& g);

/// Bounding box of the nonzero pixels grown by `margin` on every side.
IndexSet estimate_support(const std::vector<double>& image, const Geometry& g, int margin = 1);
IndexSet estimate_support(const Phantom& p, int margin = 1);

}  // namespace holefill
