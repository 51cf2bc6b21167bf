#include "holefill/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "holefill/error.hpp"

namespace holefill {

std::string to_string(HioMode m) { return m == HioMode::reflection ? "reflection" : "classic"; }

HioMode parse_hio_mode(const std::string& s) {
  if (s == "reflection") return HioMode::reflection;
  if (s == "classic") return HioMode::classic;
  throw ConfigError("unknown HIO mode '" + s + "'");
}

std::string FillPolicy::describe() const {
  switch (kind) {
    case Kind::none: return "none";
    case Kind::full: return "full";
    case Kind::annular: return "annular(" + std::to_string(depth) + ")";
  }
  return "unknown";
}

IndexSet fill_region(const IndexSet& W, const FillPolicy& policy) {
  const auto& g = W.geometry();
  switch (policy.kind) {
    case FillPolicy::Kind::none: return IndexSet::empty(g);
    case FillPolicy::Kind::full: return W;
    case FillPolicy::Kind::annular: {
      std::vector<std::uint8_t> mask(g.points(), 0);
      for (auto p : W.positions()) mask[p] = depth_from_boundary(g, p) < policy.depth;
      return IndexSet(g, std::move(mask));
    }
  }
  return IndexSet::empty(g);
}

void HioConfig::validate(int w) const {
  std::ostringstream msg;
  if (max_iters < 0) msg << "max_iters must be >= 0";
  else if (!(feedback > 0.0 && feedback <= 1.0)) msg << "feedback must lie in (0, 1]";
  else if (restarts < 1) msg << "restarts must be >= 1";
  else if (support.is_empty()) msg << "support must be nonempty";
  else if (fill.kind == FillPolicy::Kind::annular && (fill.depth < 0 || fill.depth > w))
    msg << "annular depth must lie in [0, " << w << "]";
  else if (log_every < 1) msg << "log_every must be >= 1";
  else if (threads < 1) msg << "threads must be >= 1";
  const auto s = msg.str();
  if (!s.empty()) throw ConfigError(s);
}

MagnitudeConstraints make_constraints(const std::vector<double>& target_a2, const IndexSet& constrained) {
  if (target_a2.size() != constrained.mask().size()) throw GeometryError("targets do not match the grid");
  MagnitudeConstraints c;
  c.modulus.assign(target_a2.size(), 0.0);
  c.constrained.assign(constrained.mask().begin(), constrained.mask().end());
  for (auto p : constrained.positions()) {
    if (target_a2[p] < 0.0) throw ConfigError("negative squared-modulus target");
    c.modulus[p] = std::sqrt(target_a2[p]);
  }
  return c;
}

std::vector<double> project_support(std::span<const double> rho, const IndexSet& S) {
  if (rho.size() != S.mask().size()) throw GeometryError("image does not match the support grid");
  std::vector<double> out(rho.size(), 0.0);
  for (auto p : S.positions()) out[p] = rho[p];
  return out;
}

namespace {

// Allocation-free magnitude projection. The projection commutes with circular
// shifts, so the centered-layout image is transformed as if it were in FFT
// order and only the targets are permuted. Taking the real part of the
// inverse equals projecting onto the average of the targets at k and -k, which
// keeps the spectrum Hermitian and lets a half-spectrum real FFT do the work.
class Projector {
 public:
  Projector(const Geometry& g, const MagnitudeConstraints& c) : fft_(g), spec_(fft_.half_size()) {
    if (c.modulus.size() != g.points() || c.constrained.size() != c.modulus.size())
      throw GeometryError("constraints do not match the grid");
    const long M = g.side();
    std::vector<double> modulus(c.modulus.size());
    std::vector<std::uint8_t> constrained(c.modulus.size());
    // FFT-order index of each centered position, as in FftEngine.
    std::vector<int> idx(g.d);
    for (std::size_t p = 0; p < c.modulus.size(); ++p) {
      to_logical(g, p, idx);
      std::size_t q = 0;
      for (int a = 0; a < g.d; ++a) q = q * M + static_cast<std::size_t>(((idx[a] % M) + M) % M);
      modulus[q] = c.modulus[p];
      constrained[q] = c.constrained[p];
    }
    const auto full = fft_.half_to_full();
    const auto partner = fft_.partner();
    const auto stored = fft_.partner_stored();
    entries_.resize(full.size());
    for (std::size_t i = 0; i < full.size(); ++i) {
      auto& e = entries_[i];
      e.own = constrained[full[i]] != 0;
      e.mirror = constrained[partner[i]] != 0;
      e.target_own = modulus[full[i]];
      e.target_mirror = modulus[partner[i]];
      e.weight = stored[i] ? 1.0 : 2.0;
      // Phase 0 in the centered layout is exp(-2 pi i off sum(q) / M) here.
      long sum = 0;
      std::size_t rest = full[i];
      for (int a = 0; a < g.d; ++a) {
        sum += static_cast<long>(rest % M);
        rest /= M;
      }
      e.zero_phase = std::conj(dft_entry(g.offset(), sum, M, +1)) * std::sqrt(static_cast<double>(M));
    }
  }

  double magnitude(const double* in, double* out) {
    const std::size_t n = fft_.geometry().points();
    fft_.forward({in, n}, spec_);
    double imag = 0.0;
    for (std::size_t i = 0; i < spec_.size(); ++i) {
      const auto& e = entries_[i];
      if (!e.own && !e.mirror) continue;
      const double mag = std::sqrt(std::norm(spec_[i]));
      const double a = e.own ? e.target_own : mag;
      const double b = e.mirror ? e.target_mirror : mag;
      const double t = 0.5 * (a + b);
      imag += e.weight * 0.25 * (a - b) * (a - b);
      spec_[i] = mag > 0.0 ? spec_[i] * (t / mag) : t * e.zero_phase;
    }
    fft_.inverse(spec_, {out, n});
    return std::sqrt(imag);
  }

 private:
  struct Entry {
    bool own = false;
    bool mirror = false;
    double target_own = 0.0;
    double target_mirror = 0.0;
    double weight = 1.0;
    cplx zero_phase;
  };
  RealFftEngine fft_;
  std::vector<cplx> spec_;
  std::vector<Entry> entries_;
};

// One update in place; returns the imaginary norm of the magnitude projection.
double step_inplace(Projector& proj, std::vector<double>& x, const std::vector<std::uint8_t>& S, const HioConfig& cfg,
                    std::vector<double>& t1, std::vector<double>& t2) {
  const std::size_t n = x.size();
  double imag = 0.0;
  if (cfg.mode == HioMode::reflection) {
    for (std::size_t i = 0; i < n; ++i) t1[i] = S[i] ? x[i] : -x[i];  // 2 P_B x - x
    imag = proj.magnitude(t1.data(), t2.data());
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] + t2[i] - (S[i] ? x[i] : 0.0);
  } else {
    imag = proj.magnitude(x.data(), t2.data());
    for (std::size_t i = 0; i < n; ++i) x[i] = S[i] ? t2[i] : x[i] - cfg.feedback * t2[i];
  }
  return imag;
}

}  // namespace

std::vector<double> project_magnitude(FftEngine& fft, std::span<const double> rho, const MagnitudeConstraints& c,
                                      double* imag_norm) {
  if (rho.size() != c.modulus.size()) throw GeometryError("image does not match the constraints");
  Projector proj(fft.geometry(), c);
  std::vector<double> out(rho.size());
  const double imag = proj.magnitude(rho.data(), out.data());
  if (imag_norm) *imag_norm = imag;
  return out;
}

std::vector<double> project_magnitude(std::span<const double> rho, const MagnitudeConstraints& c, const Geometry& g) {
  FftEngine fft(g);
  return project_magnitude(fft, rho, c);
}

std::vector<double> hio_step(FftEngine& fft, std::span<const double> rho, const HioConfig& config,
                             const MagnitudeConstraints& c) {
  if (rho.size() != config.support.mask().size()) throw GeometryError("image does not match the support grid");
  Projector proj(fft.geometry(), c);
  std::vector<double> x(rho.begin(), rho.end()), t1(x.size()), t2(x.size());
  const std::vector<std::uint8_t> S(config.support.mask().begin(), config.support.mask().end());
  step_inplace(proj, x, S, config, t1, t2);
  return x;
}

std::vector<double> hio_step(std::span<const double> rho, const HioConfig& config, const MagnitudeConstraints& c,
                             const Geometry& g) {
  FftEngine fft(g);
  return hio_step(fft, rho, config, c);
}

double data_error(FftEngine& fft, std::span<const double> rho, const std::vector<double>& reference_a2,
                  const IndexSet& mask) {
  if (rho.size() != reference_a2.size() || rho.size() != mask.mask().size())
    throw GeometryError("data error inputs do not match the grid");
  std::vector<cplx> f(rho.begin(), rho.end());
  fft.forward(f);
  double num = 0.0, den = 0.0;
  for (auto p : mask.positions()) {
    const double diff = std::norm(f[p]) - reference_a2[p];
    num += diff * diff;
    den += reference_a2[p] * reference_a2[p];
  }
  if (den == 0.0) throw ConfigError("data error reference has zero norm");
  return std::sqrt(num / den);
}

double data_error(std::span<const double> rho, const Measurement& meas) {
  FftEngine fft(meas.geometry);
  return data_error(fft, rho, meas.a2, meas.hole.complement());
}

namespace {

std::vector<double> flip_image(std::span<const double> rho, const Geometry& g) {
  std::vector<double> out(rho.size());
  std::vector<int> x(g.d);
  const int M = g.side();
  for (std::size_t p = 0; p < rho.size(); ++p) {
    to_logical(g, p, x);
    for (auto& v : x) v = ((-v - (1 - g.half())) % M + M) % M + (1 - g.half());
    out[p] = rho[to_position(g, x)];
  }
  return out;
}

// out(x) = sign * c(x - s), circular.
std::vector<double> shift_image(const std::vector<double>& c, const Geometry& g, const std::vector<int>& s, int sign) {
  std::vector<double> out(c.size());
  std::vector<int> x(g.d);
  const int M = g.side();
  for (std::size_t p = 0; p < c.size(); ++p) {
    to_logical(g, p, x);
    for (int a = 0; a < g.d; ++a) x[a] = ((x[a] - s[a] - (1 - g.half())) % M + M) % M + (1 - g.half());
    out[p] = sign * c[to_position(g, x)];
  }
  return out;
}

}  // namespace

Registration register_images(std::span<const double> rho, std::span<const double> rho0, const Geometry& g) {
  if (rho.size() != g.points() || rho0.size() != g.points()) throw GeometryError("images do not match the grid");
  double ref = 0.0;
  for (double v : rho0) ref += v * v;
  ref = std::sqrt(ref);
  if (ref == 0.0) throw ConfigError("reference image is zero");
  FftEngine fft(g);
  std::vector<cplx> f0(rho0.begin(), rho0.end());
  fft.forward(f0);

  Registration best;
  best.error = std::numeric_limits<double>::infinity();
  for (int flipped = 0; flipped < 2; ++flipped) {
    const std::vector<double> cand = flipped ? flip_image(rho, g) : std::vector<double>(rho.begin(), rho.end());
    std::vector<cplx> corr(cand.begin(), cand.end());
    fft.forward(corr);
    for (std::size_t i = 0; i < corr.size(); ++i) corr[i] = f0[i] * std::conj(corr[i]);
    fft.inverse(corr);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < corr.size(); ++i)
      if (std::abs(corr[i].real()) > std::abs(corr[arg].real())) arg = i;
    std::vector<int> s(g.d);
    to_logical(g, arg, s);
    const int sign = corr[arg].real() < 0.0 ? -1 : 1;
    const auto aligned = shift_image(cand, g, s, sign);
    double err = 0.0;
    for (std::size_t p = 0; p < aligned.size(); ++p) err += (aligned[p] - rho0[p]) * (aligned[p] - rho0[p]);
    err = std::sqrt(err) / ref;
    if (err < best.error) best = Registration{err, s, flipped == 1, sign};
  }
  return best;
}

double register_and_error(std::span<const double> rho, std::span<const double> rho0, const Geometry& g) {
  return register_images(rho, rho0, g).error;
}

ReconReport run_hio(const Measurement& meas, const std::optional<Eigen::VectorXd>& recovered, const HioConfig& config,
                    const std::vector<double>* truth) {
  meas.validate();
  const auto& g = meas.geometry;
  config.validate(g.w());
  if (config.support.mask().size() != g.points()) throw GeometryError("support does not match the grid");
  if (config.fill.kind != FillPolicy::Kind::none && !recovered)
    throw ConfigError("fill policy " + config.fill.describe() + " needs recovered hole values");
  if (recovered && static_cast<std::size_t>(recovered->size()) != meas.hole.size())
    throw GeometryError("recovered values do not cover the hole");
  if (truth && truth->size() != g.points()) throw GeometryError("truth image does not match the grid");

  ReconReport rep;
  rep.fill_policy_used = config.fill;
  rep.mode = config.mode;

  const IndexSet Wc = meas.hole.complement();
  const IndexSet filled = fill_region(meas.hole, config.fill);
  std::vector<double> targets = meas.a2;
  std::vector<std::uint8_t> cmask(Wc.mask().begin(), Wc.mask().end());
  const auto wpos = meas.hole.positions();
  for (std::size_t i = 0; i < wpos.size(); ++i) {
    if (!filled.contains(wpos[i])) continue;
    double v = (*recovered)(static_cast<Eigen::Index>(i));
    if (v < 0.0) {
      v = 0.0;
      ++rep.clamped_fill;
    }
    targets[wpos[i]] = v;
    cmask[wpos[i]] = 1;
  }
  const MagnitudeConstraints cons = make_constraints(targets, IndexSet(g, std::move(cmask)));

  struct RestartOutcome {
    std::vector<double> image;
    double data_error = 0.0;
    double image_error = 0.0;
    double imag = 0.0;
    std::vector<DiagnosticRow> diagnostics;
  };
  const std::vector<std::uint8_t> S(config.support.mask().begin(), config.support.mask().end());
  auto run_restart = [&](int r) {
    FftEngine fft(g);
    Projector proj(g, cons);
    const std::size_t n = g.points();
    std::vector<double> x(n, 0.0), t1(n), t2(n);
    std::mt19937_64 rng(config.seed + static_cast<std::uint64_t>(r));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto p : config.support.positions()) x[p] = unit(rng);
    RestartOutcome out;
    for (int it = 1; it <= config.max_iters; ++it) {
      out.imag = step_inplace(proj, x, S, config, t1, t2);
      if (it % config.log_every == 0)
        out.diagnostics.push_back({r, it, data_error(fft, project_support(x, config.support), meas.a2, Wc)});
    }
    out.image = project_support(x, config.support);
    out.data_error = data_error(fft, out.image, meas.a2, Wc);
    out.image_error = truth ? register_and_error(out.image, *truth, g) : std::nan("");
    return out;
  };

  std::vector<RestartOutcome> outcomes(config.restarts);
  const int workers = std::min(config.threads, config.restarts);
  if (workers <= 1) {
    for (int r = 0; r < config.restarts; ++r) outcomes[r] = run_restart(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&, t] {
        try {
          for (int r = next++; r < config.restarts; r = next++) outcomes[r] = run_restart(r);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Argmin by data error; strict comparison keeps the lowest restart on ties.
  double best_err = std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.restarts; ++r) {
    auto& o = outcomes[r];
    rep.restart_data_errors.push_back(o.data_error);
    rep.restart_image_errors.push_back(o.image_error);
    rep.diagnostics.insert(rep.diagnostics.end(), o.diagnostics.begin(), o.diagnostics.end());
    if (o.data_error < best_err) {
      best_err = o.data_error;
      rep.best_restart = r;
      rep.data_error = o.data_error;
      rep.rel_image_error = o.image_error;
      rep.imag_norm = o.imag;
      rep.image = o.image;
    }
  }
  rep.iterations_run = config.max_iters;
  return rep;
}

PartialFillReport partial_fill_search(const Measurement& meas, const Eigen::VectorXd& recovered,
                                      const HioConfig& config, const std::vector<double>* truth) {
  const int w = meas.geometry.w();
  PartialFillReport out;
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t <= w; ++t) {
    HioConfig cfg = config;
    cfg.fill = FillPolicy::annular(t);
    ReconReport rep = run_hio(meas, recovered, cfg, truth);
    out.depths.push_back(t);
    out.depth_data_errors.push_back(rep.data_error);
    out.depth_image_errors.push_back(rep.rel_image_error);
    if (rep.data_error < best) {
      best = rep.data_error;
      out.selected_depth = t;
      out.selected = std::move(rep);
    }
  }
  return out;
}

}  // namespace holefill
