#include "holefill/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "holefill/conditioning.hpp"
#include "holefill/error.hpp"
#include "holefill/noise.hpp"
#include "holefill/recovery.hpp"
#include "holefill/retrieval.hpp"

namespace holefill {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

namespace {

using holefill::fmt;
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

nlohmann::json nan_safe(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(fmt(v)); }

}  // namespace

ArtifactWriter::ArtifactWriter(std::filesystem::path dir, nlohmann::json config)
    : dir_(std::move(dir)), config_(std::move(config)), hash_(content_hash(config_.dump())) {
  std::filesystem::create_directories(dir_);
}

std::uint64_t ArtifactWriter::seed() const { return config_.value("seed", std::uint64_t{0}); }

std::filesystem::path ArtifactWriter::checked(const std::string& name) const {
  const std::filesystem::path p(name);
  if (name.empty() || p.has_parent_path() || p.is_absolute() || name == "." || name == "..")
    throw ConfigError("artifact name '" + name + "' must be a plain file name");
  return dir_ / p;
}

nlohmann::json ArtifactWriter::provenance() const {
  return {{"config", config_}, {"seed", seed()}, {"input_hash", hash_}};
}

void ArtifactWriter::json(const std::string& name, nlohmann::json body) {
  const nlohmann::json prov = provenance();
  for (const auto& [k, v] : prov.items()) body[k] = v;
  write_text(checked(name), body.dump(2) + "\n");
  written_.push_back(name);
}

void ArtifactWriter::csv(const std::string& name, const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::string out = "# " + provenance().dump() + "\n";
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw Error("csv row width does not match the header in " + name);
    line(r);
  }
  write_text(checked(name), out);
  written_.push_back(name);
}

void ArtifactWriter::array(const std::string& name, const ArrayFile& a, nlohmann::json meta) {
  write_array(checked(name), a);
  written_.push_back(name);
  meta["dims"] = a.dims;
  meta["dtype"] = a.dtype == DType::f64 ? "f64" : "c128";
  json(name + ".json", std::move(meta));
}

Scene make_scene(const ExperimentConfig& cfg) {
  Scene s;
  s.geometry = cfg.geometry();
  s.geometry.validate();
  s.phantom = make_phantom(s.geometry, phantom_preset(cfg.get_text("phantom"), s.geometry, cfg.seed()));
  s.sim = simulate_measurement(s.phantom, s.geometry);
  s.support = estimate_support(s.phantom, static_cast<int>(cfg.get_int("margin")));
  s.s_ac = cfg.get_text("convention") == "support" ? autocorrelation_support(s.support)
                                                   : autocorrelation_box(s.geometry, cfg.convention());
  return s;
}

namespace {

AcConvention box_convention(const ExperimentConfig& cfg) {
  return cfg.get_text("convention") == "support" ? AcConvention::closed : cfg.convention();
}

nlohmann::json box_json(const Box& b) {
  auto j = nlohmann::json::array();
  for (const auto& r : b) j.push_back({r.lo, r.hi});
  return j;
}

nlohmann::json scene_json(const Scene& s) {
  nlohmann::json j;
  j["geometry"] = to_json(s.geometry);
  j["phantom"] = {{"preset", s.phantom.spec.preset},
                  {"seed", s.phantom.spec.seed},
                  {"signed", s.phantom.is_signed},
                  {"support_box", box_json(s.phantom.spec.support)},
                  {"bumps", s.phantom.bumps.size()}};
  j["support"] = to_json(s.support);
  j["s_ac"] = to_json(s.s_ac);
  return j;
}

nlohmann::json phantom_sidecar(const Phantom& p) {
  auto bumps = nlohmann::json::array();
  for (const auto& b : p.bumps)
    bumps.push_back({{"profile", b.profile == BumpProfile::plateau ? "plateau" : "quartic_spline"},
                     {"center", b.center},
                     {"half_width", b.half_width},
                     {"amplitude", b.amplitude},
                     {"taper", b.taper}});
  return {{"preset", p.spec.preset}, {"seed", p.spec.seed}, {"support_box", box_json(p.spec.support)},
          {"signed", p.is_signed}, {"bumps", bumps}};
}

ArrayFile hole_array(const Geometry& g, const Eigen::VectorXd& v) {
  std::vector<std::uint64_t> dims(g.d, static_cast<std::uint64_t>(2 * g.w() - 1));
  return ArrayFile::from_real(dims, std::vector<double>(v.data(), v.data() + v.size()));
}

ArrayFile mask_array(const IndexSet& s) {
  std::vector<double> v(s.mask().begin(), s.mask().end());
  return grid_array(s.geometry(), v);
}

HioConfig hio_config(const ExperimentConfig& cfg, const Scene& s) {
  HioConfig h = cfg.hio();
  h.support = s.support;
  h.validate(s.geometry.w());
  return h;
}

Measurement measurement_for(const ExperimentConfig& cfg, const Scene& s, std::uint64_t noise_seed) {
  if (!cfg.get_bool("add_noise")) return s.sim.measurement;
  NoiseModel n = cfg.noise();
  n.seed = noise_seed;
  return add_noise(s.sim.measurement, n);
}

nlohmann::json recon_json(const ReconReport& r) {
  return {{"rel_image_error", nan_safe(r.rel_image_error)},
          {"data_error", r.data_error},
          {"iterations_run", r.iterations_run},
          {"fill_policy", r.fill_policy_used.describe()},
          {"mode", to_string(r.mode)},
          {"best_restart", r.best_restart},
          {"restart_data_errors", r.restart_data_errors},
          {"restart_image_errors", [&] {
             auto a = nlohmann::json::array();
             for (double v : r.restart_image_errors) a.push_back(nan_safe(v));
             return a;
           }()},
          {"imag_norm", r.imag_norm},
          {"clamped_fill", r.clamped_fill}};
}

void write_diagnostics(ArtifactWriter& out, const std::string& name, const ReconReport& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& d : r.diagnostics) rows.push_back({fmt(d.restart), fmt(d.iteration), fmt(d.data_error)});
  out.csv(name, {"restart", "iteration", "data_error"}, rows);
}

}  // namespace

CommandResult cmd_recover(const ExperimentConfig& cfg) {
  const Scene s = make_scene(cfg);
  const auto& g = s.geometry;
  ArtifactWriter out(cfg.output_dir(), cfg.resolved());
  const RecoveryOperator op = RecoveryOperator::build(g, s.s_ac, cfg.recovery_options(), cfg.svd_options());
  const Measurement meas = measurement_for(cfg, s, cfg.seed());
  const RecoveryResult res = recover_hole(op, meas);

  const Eigen::VectorXd& truth = s.sim.withheld;
  const double max_rel = (res.alpha - truth).cwiseAbs().maxCoeff() / truth.cwiseAbs().maxCoeff();
  const double l2_rel = (res.alpha - truth).norm() / truth.norm();
  const MagnitudeComparison mag = magnitude_from_squared(res.alpha, truth.cwiseMax(0.0).cwiseSqrt());

  const auto& sigma = op.svd().sigma();
  std::vector<std::vector<std::string>> sv_rows;
  for (Eigen::Index j = 0; j < sigma.size(); ++j) {
    const double x = sigma(j);
    sv_rows.push_back({fmt(static_cast<int>(j + 1)), fmt(x), fmt(std::sqrt((1.0 - x) * (1.0 + x)) / x)});
  }
  out.csv("singular_values.csv", {"j", "sigma", "nu"}, sv_rows);
  out.array("r_mask.hfar", mask_array(op.R()), {{"description", "1 on R = J minus S_AC"}});
  out.array("recovered_hole.hfar", hole_array(g, res.alpha), {{"description", "recovered a2 on W"}});
  out.array("hole_truth.hfar", hole_array(g, truth), {{"description", "withheld a2 on W"}});

  // Autocorrelation of the filled data against that of the full data.
  FftEngine fft(g);
  const auto merged = merge_fill(meas, res.alpha);
  std::vector<cplx> ac(merged.begin(), merged.end()), ac0(s.sim.full_a2.begin(), s.sim.full_a2.end());
  fft.inverse(ac);
  fft.inverse(ac0);
  std::vector<double> ac_err(ac.size());
  for (std::size_t i = 0; i < ac.size(); ++i) ac_err[i] = std::abs(ac[i] - ac0[i]);
  out.array("autocorrelation_error.hfar", grid_array(g, ac_err), {{"description", "|F*(filled a2) - F*(a2)|"}});
  out.array("phantom.hfar", grid_array(g, s.phantom.image), phantom_sidecar(s.phantom));

  nlohmann::json summary = scene_json(s);
  summary["svd_route"] = op.svd().route() == SvdRoute::tensor ? "tensor" : "dense";
  summary["sigma_min"] = op.svd().sigma_min();
  summary["sigma_max"] = op.svd().sigma_max();
  summary["condition"] = op.svd().sigma_max() / op.svd().sigma_min();
  summary["recovery_norm"] = std::sqrt(1.0 / (op.svd().sigma_min() * op.svd().sigma_min()) - 1.0);
  summary["max_rel_error"] = max_rel;
  summary["l2_rel_error"] = l2_rel;
  summary["max_rel_error_magnitude"] = mag.rel_err_mag.size() ? mag.rel_err_mag.maxCoeff() : 0.0;
  summary["negative_fill"] = mag.negative_count;
  summary["imag_norm"] = res.imag_norm;
  summary["relative_residual"] = res.relative_residual;
  summary["truncated"] = res.truncated;
  summary["noisy"] = cfg.get_bool("add_noise");
  out.json("recover.json", summary);
  return {summary, out.written()};
}

CommandResult cmd_cond_table(const ExperimentConfig& cfg) {
  ArtifactWriter out(cfg.output_dir(), cfg.resolved());
  PowerOptions popts;
  popts.tol = cfg.get_real("power_tol");
  const int d = static_cast<int>(cfg.get_int("d"));
  const auto rows = conditioning_table(cfg.get_real_list("betas"), cfg.get_int_list("Ns"), cfg.get_int_list("ms"),
                                       cfg.get_real_list("k0s"), d, box_convention(cfg), popts);
  std::vector<std::vector<std::string>> csv;
  auto table = nlohmann::json::array();
  for (const auto& r : rows) {
    const auto& g = r.geometry;
    csv.push_back({fmt(g.beta), fmt(g.N), fmt(g.m), fmt(g.k0), fmt(g.d), fmt(r.sigma_min), fmt(r.recovery_norm),
                   fmt(r.bound), fmt(r.asymptotic), to_string(r.method)});
    table.push_back({{"beta", g.beta}, {"N", g.N}, {"m", g.m}, {"k0", g.k0}, {"w", g.w()}, {"sigma_min", r.sigma_min},
                     {"recovery_norm", r.recovery_norm}, {"bound", r.bound}, {"asymptotic", r.asymptotic},
                     {"tau1", nan_safe(r.tau1)}, {"iterations", r.iterations}});
  }
  out.csv("cond_table.csv",
          {"beta", "N", "m", "k0", "d", "sigma_min", "recovery_norm", "bound", "asymptotic", "method"}, csv);
  nlohmann::json summary = {{"rows", table}, {"convention", box_convention(cfg) == AcConvention::open ? "open" : "closed"}};
  out.json("cond_table.json", summary);
  return {summary, out.written()};
}

CommandResult cmd_noise_hist(const ExperimentConfig& cfg) {
  const Scene s = make_scene(cfg);
  ArtifactWriter out(cfg.output_dir(), cfg.resolved());
  const RecoveryOperator op = RecoveryOperator::build(s.geometry, s.s_ac, cfg.recovery_options(), cfg.svd_options());
  const auto pos = op.Wc().positions();
  Eigen::VectorXd truth(static_cast<Eigen::Index>(pos.size()));
  for (std::size_t i = 0; i < pos.size(); ++i) truth(static_cast<Eigen::Index>(i)) = s.sim.full_a2[pos[i]];
  const TrialSummary t = run_noise_trials(op, cfg.noise(), truth, static_cast<std::size_t>(cfg.get_int("trials")),
                                          static_cast<std::size_t>(cfg.get_int("bins")));
  std::vector<std::vector<std::string>> hist;
  for (std::size_t b = 0; b < t.histogram.counts.size(); ++b)
    hist.push_back({fmt(t.histogram.edges[b]), fmt(t.histogram.edges[b + 1]), fmt(t.histogram.counts[b])});
  out.csv("noise_hist.csv", {"bin_left", "bin_right", "count"}, hist);
  std::vector<std::vector<std::string>> ratios;
  for (std::size_t i = 0; i < t.ratios.size(); ++i) ratios.push_back({fmt(i), fmt(t.ratios[i])});
  out.csv("noise_ratios.csv", {"trial", "ratio"}, ratios);
  nlohmann::json summary = scene_json(s);
  summary["noise"] = to_string(t.model.kind);
  summary["noise_scale"] = t.model.scale;
  summary["trials"] = t.ratios.size();
  summary["mean"] = t.mean;
  summary["stddev"] = t.stddev;
  summary["standard_error"] = t.stddev / std::sqrt(static_cast<double>(t.ratios.size()));
  summary["median"] = t.median;
  summary["p95"] = t.p95;
  summary["p99"] = t.p99;
  summary["max"] = t.max;
  summary["bound"] = t.bound;
  summary["operator_norm"] = std::sqrt(1.0 / (op.svd().sigma_min() * op.svd().sigma_min()) - 1.0);
  out.json("noise_hist.json", summary);
  return {summary, out.written()};
}

CommandResult cmd_hio(const ExperimentConfig& cfg) {
  const Scene s = make_scene(cfg);
  ArtifactWriter out(cfg.output_dir(), cfg.resolved());
  const HioConfig h = hio_config(cfg, s);
  const Measurement meas = measurement_for(cfg, s, cfg.seed());
  std::optional<Eigen::VectorXd> recovered;
  if (h.fill.kind != FillPolicy::Kind::none) {
    const RecoveryOperator op = RecoveryOperator::build(s.geometry, s.s_ac, cfg.recovery_options(), cfg.svd_options());
    recovered = recover_hole(op, meas).alpha;
  }
  const ReconReport r = run_hio(meas, recovered, h, &s.phantom.image);
  out.array("image.hfar", grid_array(s.geometry, r.image), {{"description", "reconstruction, P_S of the final iterate"}});
  write_diagnostics(out, "hio_diagnostics.csv", r);
  nlohmann::json summary = scene_json(s);
  summary["report"] = recon_json(r);
  out.json("hio.json", summary);
  return {summary, out.written()};
}

CommandResult cmd_fill_hio(const ExperimentConfig& cfg) {
  ArtifactWriter out(cfg.output_dir(), cfg.resolved());
  std::vector<std::vector<std::string>> rows;
  auto sweep = nlohmann::json::array();
  for (int w : cfg.get_int_list("ws")) {
    ExperimentConfig c = cfg;
    c.set("w", std::to_string(w));
    const Scene s = make_scene(c);
    HioConfig h = hio_config(c, s);
    const Measurement meas = measurement_for(c, s, c.seed());
    const RecoveryOperator op = RecoveryOperator::build(s.geometry, s.s_ac, c.recovery_options(), c.svd_options());
    const RecoveryResult rec = recover_hole(op, meas);
    h.fill = FillPolicy::none();
    const ReconReport alone = run_hio(meas, std::nullopt, h, &s.phantom.image);
    h.fill = FillPolicy::full();
    const ReconReport filled = run_hio(meas, rec.alpha, h, &s.phantom.image);
    int wins = 0;
    for (std::size_t r = 0; r < alone.restart_image_errors.size(); ++r)
      wins += filled.restart_image_errors[r] < alone.restart_image_errors[r];
    rows.push_back({fmt(w), fmt(s.geometry.k0), fmt(alone.rel_image_error), fmt(filled.rel_image_error),
                    fmt(alone.data_error), fmt(filled.data_error), fmt(wins), fmt(h.restarts)});
    sweep.push_back({{"w", w}, {"hio", recon_json(alone)}, {"fill_hio", recon_json(filled)}, {"paired_wins", wins}});
  }
  out.csv("fill_hio.csv",
          {"w", "k0", "hio_error", "fill_hio_error", "hio_data_error", "fill_hio_data_error", "paired_wins", "restarts"},
          rows);
  nlohmann::json summary = {{"sweep", sweep}};
  out.json("fill_hio.json", summary);
  return {summary, out.written()};
}

CommandResult cmd_partial_fill(const ExperimentConfig& cfg) {
  const Scene s = make_scene(cfg);
  ArtifactWriter out(cfg.output_dir(), cfg.resolved());
  const RecoveryOperator op = RecoveryOperator::build(s.geometry, s.s_ac, cfg.recovery_options(), cfg.svd_options());
  const auto trials = cfg.get_int("trials");
  std::vector<std::vector<std::string>> rows;
  std::vector<double> alone, partial;
  std::map<int, int> depth_counts;
  for (long long t = 0; t < trials; ++t) {
    const std::uint64_t stream = cfg.seed() + static_cast<std::uint64_t>(t);
    const Measurement meas = measurement_for(cfg, s, stream);
    const RecoveryResult rec = recover_hole(op, meas);
    HioConfig h = hio_config(cfg, s);
    h.seed = stream * static_cast<std::uint64_t>(h.restarts);
    const PartialFillReport p = partial_fill_search(meas, rec.alpha, h, &s.phantom.image);
    // Depth 0 is HIO alone on the same seeds.
    const double e0 = p.depth_image_errors.front();
    alone.push_back(e0);
    partial.push_back(p.selected.rel_image_error);
    ++depth_counts[p.selected_depth];
    rows.push_back({fmt(static_cast<int>(t)), fmt(e0), fmt(p.selected.rel_image_error), fmt(p.selected_depth),
                    fmt(p.depth_data_errors.front()), fmt(p.selected.data_error)});
  }
  out.csv("partial_fill.csv",
          {"trial", "hio_error", "partial_fill_error", "selected_depth", "hio_data_error", "partial_fill_data_error"},
          rows);
  nlohmann::json depths = nlohmann::json::object();
  for (const auto& [d, n] : depth_counts) depths[std::to_string(d)] = n;
  std::size_t improved = 0;
  for (std::size_t i = 0; i < alone.size(); ++i) improved += partial[i] < alone[i];
  nlohmann::json summary = scene_json(s);
  summary["trials"] = trials;
  summary["median_hio_error"] = median(alone);
  summary["median_partial_fill_error"] = median(partial);
  summary["improved_fraction"] = static_cast<double>(improved) / static_cast<double>(alone.size());
  summary["selected_depths"] = depths;
  out.json("partial_fill.json", summary);
  return {summary, out.written()};
}

CommandResult cmd_sweep_asymptote(const ExperimentConfig& cfg) {
  ArtifactWriter out(cfg.output_dir(), cfg.resolved());
  const auto rows = sweep_asymptote(cfg.get_real_list("betas"), cfg.get_real_list("k0s"), cfg.get_int_list("ms"),
                                static_cast<int>(cfg.get_int("N")), box_convention(cfg), cfg.get_real("saturation"));
  std::vector<std::vector<std::string>> csv;
  for (const auto& r : rows)
    csv.push_back({fmt(r.beta), fmt(r.m), fmt(r.k0), fmt(r.N), fmt(r.w), fmt(r.sigma_min), fmt(r.exact),
                   fmt(r.via_complement), fmt(r.asymptote), fmt(r.exact / r.asymptote), r.saturated ? "1" : "0"});
  out.csv("sweep_asymptote.csv",
          {"beta", "m", "k0", "N", "w", "sigma_min", "exact", "via_complement", "asymptote", "ratio", "saturated"}, csv);
  nlohmann::json summary = {{"rows", rows.size()}};
  out.json("sweep_asymptote.json", summary);
  return {summary, out.written()};
}

const std::vector<std::pair<std::string, Command>>& commands() {
  static const std::vector<std::pair<std::string, Command>> table = {
      {"recover", cmd_recover},       {"cond-table", cmd_cond_table},     {"noise-hist", cmd_noise_hist},
      {"hio", cmd_hio},               {"fill-hio", cmd_fill_hio},         {"partial-fill", cmd_partial_fill},
      {"sweep-asymptote", cmd_sweep_asymptote},
  };
  return table;
}

}  // namespace holefill
