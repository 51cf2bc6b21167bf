#include "holefill/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "holefill/error.hpp"
#include "holefill/spectral.hpp"

namespace holefill {

double quartic_bspline(double t) {
  t = std::abs(t);
  if (t < 0.5) return (115.0 - 120.0 * t * t + 48.0 * t * t * t * t) / 192.0;
  if (t < 1.5) return (55.0 + 20.0 * t - 120.0 * t * t + 80.0 * t * t * t - 16.0 * t * t * t * t) / 96.0;
  if (t < 2.5) return std::pow(5.0 - 2.0 * t, 4) / 384.0;
  return 0.0;
}

double smooth_step(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

double Bump::operator()(std::span<const int> x) const {
  double v = amplitude;
  for (std::size_t a = 0; a < center.size() && v != 0.0; ++a) {
    const double dx = x[a] - center[a];
    if (profile == BumpProfile::quartic_spline) {
      v *= quartic_bspline(2.5 * dx / half_width[a]) / quartic_bspline(0.0);
    } else {
      double phase = 0.0;
      for (std::size_t b = 0; b < center.size(); ++b)
        if (b != a) phase += (x[b] - center[b]) / half_width[b];
      phase *= M_PI;
      const double lo = taper * (1.0 + taper_variation * std::sin(phase));
      const double hi = taper * (1.0 + taper_variation * std::cos(phase));
      v *= smooth_step((dx + half_width[a]) / lo) * smooth_step((half_width[a] - dx) / hi);
    }
  }
  return v;
}

Phantom render_phantom(const Geometry& g, const Box& support, std::vector<Bump> bumps) {
  Phantom p;
  p.geometry = g;
  p.support = IndexSet::box(g, support);
  p.image.assign(g.points(), 0.0);
  std::vector<int> x(g.d);
  for (auto pos : p.support.positions()) {
    to_logical(g, pos, x);
    double v = 0.0;
    for (const auto& b : bumps) v += b(x);
    p.image[pos] = v;
  }
  p.is_signed = std::any_of(p.image.begin(), p.image.end(), [](double v) { return v < 0.0; });
  p.bumps = std::move(bumps);
  p.spec.support = support;
  return p;
}

Phantom make_phantom(const Geometry& g, const PhantomSpec& spec) {
  g.validate_hole();
  if (spec.n_bumps < 0) throw ConfigError("n_bumps must be >= 0");
  if (!(std::abs(spec.taper_variation) < 1.0)) throw ConfigError("taper_variation must lie in (-1, 1)");
  if (static_cast<int>(spec.support.size()) != g.d) throw ConfigError("support box rank does not match geometry");
  for (const auto& r : spec.support)
    if (r.lo < 1 - g.N || r.hi > g.N || r.lo > r.hi) throw ConfigError("support box must lie inside [1-N:N]^d");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Bump> bumps;
  if (spec.plateau_level != 0.0) {
    Bump b;
    b.profile = BumpProfile::plateau;
    b.amplitude = spec.plateau_level;
    b.taper = spec.taper;
    b.taper_variation = spec.taper_variation;
    for (const auto& r : spec.support) {
      b.center.push_back(0.5 * (r.lo + r.hi));
      b.half_width.push_back(0.5 * (r.hi - r.lo) + 1.0);
    }
    bumps.push_back(std::move(b));
  }
  for (int i = 0; i < spec.n_bumps; ++i) {
    Bump b;
    for (const auto& r : spec.support) {
      const double room = 0.5 * (r.hi - r.lo) + 1.0;
      const double lo = std::min(spec.min_half_width, room);
      const double hi = std::min(spec.max_half_width, room);
      b.half_width.push_back(lo + (hi - lo) * unit(rng));
    }
    for (std::size_t a = 0; a < spec.support.size(); ++a) {
      const auto& r = spec.support[a];
      const double lo = r.lo - 1 + b.half_width[a];
      const double hi = r.hi + 1 - b.half_width[a];
      b.center.push_back(lo + (hi - lo) * unit(rng));
    }
    const double u = unit(rng);
    b.amplitude = spec.signed_bumps ? spec.amplitude * (2.0 * u - 1.0) : spec.amplitude * u;
    bumps.push_back(std::move(b));
  }
  Phantom p = render_phantom(g, spec.support, std::move(bumps));
  p.spec = spec;
  return p;
}

Phantom make_phantom(const Geometry& g, int n_bumps, bool signed_bumps, std::uint64_t seed) {
  if (n_bumps < 1) throw ConfigError("n_bumps must be >= 1");
  PhantomSpec spec;
  spec.support.assign(g.d, Range{1 - g.N, g.N});
  spec.n_bumps = n_bumps;
  spec.signed_bumps = signed_bumps;
  spec.seed = seed;
  spec.min_half_width = std::max(1.5, g.N / 8.0);
  spec.max_half_width = std::max(2.0, 3.0 * g.N / 8.0);
  return make_phantom(g, spec);
}

std::vector<std::string> phantom_preset_names() { return {"signed64", "nonneg64", "largemean64"}; }

PhantomSpec phantom_preset(const std::string& name, const Geometry& g, std::uint64_t seed) {
  PhantomSpec spec;
  spec.preset = name;
  spec.seed = seed;
  const double s = g.N / 32.0;
  const int a = static_cast<int>(std::lround(27 * s));
  const int b = static_cast<int>(std::lround(26 * s));
  for (int ax = 0; ax < g.d; ++ax) spec.support.push_back(ax == 0 ? Range{-a, b} : Range{-b, b});
  spec.n_bumps = 20;
  spec.amplitude = 1.5;
  spec.min_half_width = std::max(1.5, 3.0 * s);
  spec.max_half_width = std::max(2.0, 10.0 * s);
  spec.taper = std::max(1.0, 3.0 * s);
  spec.taper_variation = 0.5;
  if (name == "signed64") {
    spec.plateau_level = 1.0;
    spec.signed_bumps = true;
  } else if (name == "nonneg64") {
    spec.plateau_level = 1.0;
    spec.signed_bumps = false;
  } else if (name == "largemean64") {
    spec.plateau_level = 4.0;
    spec.signed_bumps = true;
  } else {
    throw ConfigError("unknown phantom preset '" + name + "'");
  }
  return spec;
}

Simulation simulate_measurement(const std::vector<double>& image, const Geometry& g) {
  if (image.size() != g.points()) throw GeometryError("image does not match the grid");
  std::vector<cplx> f(image.begin(), image.end());
  FftEngine fft(g);
  fft.forward(f);
  Simulation out;
  out.full_a2.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out.full_a2[i] = std::norm(f[i]);
  const IndexSet W = beamstop_window(g);
  out.withheld.resize(static_cast<Eigen::Index>(W.size()));
  out.measurement.geometry = g;
  out.measurement.hole = W;
  out.measurement.a2 = out.full_a2;
  const auto pos = W.positions();
  for (std::size_t i = 0; i < pos.size(); ++i) {
    out.withheld(static_cast<Eigen::Index>(i)) = out.full_a2[pos[i]];
    out.measurement.a2[pos[i]] = 0.0;
  }
  return out;
}

Simulation simulate_measurement(const Phantom& p, const Geometry& g) { return simulate_measurement(p.image, g); }

IndexSet estimate_support(const std::vector<double>& image, const Geometry& g, int margin) {
  if (image.size() != g.points()) throw GeometryError("image does not match the grid");
  std::vector<std::uint8_t> nz(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) nz[i] = image[i] != 0.0;
  const IndexSet nonzero(g, std::move(nz));
  if (nonzero.is_empty()) throw GeometryError("cannot estimate the support of an all-zero image");
  Box b = nonzero.bounds();
  for (auto& r : b) {
    r.lo = std::max(r.lo - margin, 1 - g.half());
    r.hi = std::min(r.hi + margin, g.half());
  }
  return IndexSet::box(g, b);
}

IndexSet estimate_support(const Phantom& p, int margin) { return estimate_support(p.image, p.geometry, margin); }

}  // namespace holefill
