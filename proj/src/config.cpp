#include "holefill/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "holefill/error.hpp"

namespace holefill {

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = {
      {"d", ValueKind::integer, "2", "lattice dimension"},
      {"N", ValueKind::integer, "32", "image half-width; samples live in [1-N:N]^d"},
      {"m", ValueKind::integer, "3", "oversampling factor"},
      {"beta", ValueKind::real, "1.5", "autocorrelation extent factor"},
      {"k0", ValueKind::real, "2", "hole radius in Nyquist units"},
      {"w", ValueKind::integer, "0", "hole half-extent; overrides k0 when > 0"},
      {"convention", ValueKind::text, "support", "S_AC source: support (from the phantom), closed or open box"},
      {"phantom", ValueKind::text, "signed64", "phantom preset"},
      {"margin", ValueKind::integer, "1", "support estimate margin in pixels"},
      {"seed", ValueKind::integer, "0", "top-level seed"},
      {"noise", ValueKind::text, "gaussian", "uniform, gaussian or poisson"},
      {"noise_scale", ValueKind::real, "1", "half-width, standard deviation, or SNR for poisson"},
      {"add_noise", ValueKind::boolean, "false", "corrupt the measurement before retrieval"},
      {"trials", ValueKind::integer, "100", "noise or retrieval trials"},
      {"bins", ValueKind::integer, "50", "histogram bins"},
      {"iters", ValueKind::integer, "2000", "HIO iterations per restart"},
      {"restarts", ValueKind::integer, "1", "HIO random starts"},
      {"feedback", ValueKind::real, "0.9", "classic HIO feedback"},
      {"hio_mode", ValueKind::text, "reflection", "reflection or classic"},
      {"fill", ValueKind::text, "none", "none, full or annular"},
      {"fill_depth", ValueKind::integer, "0", "outer rings filled by the annular policy"},
      {"threads", ValueKind::integer, "1", "worker threads for restarts"},
      {"log_every", ValueKind::integer, "50", "diagnostic interval in iterations"},
      {"sigma_floor", ValueKind::real, "1e-14", "relative singular value floor"},
      {"truncate", ValueKind::boolean, "false", "drop sub-floor components instead of failing"},
      {"symmetrize", ValueKind::boolean, "false", "average recovered alpha(k) with alpha(-k)"},
      {"svd_route", ValueKind::text, "auto", "auto, dense or tensor"},
      {"power_tol", ValueKind::real, "1e-6", "power iteration relative tolerance"},
      {"betas", ValueKind::real_list, "1.5", "sweep values of beta"},
      {"Ns", ValueKind::int_list, "32", "sweep values of N (32 is the 64-pixel image)"},
      {"ms", ValueKind::int_list, "2,3,4", "sweep values of m"},
      {"k0s", ValueKind::real_list, "1,2,3", "sweep values of k0"},
      {"ws", ValueKind::int_list, "3,5,7,9,11,13,15", "sweep values of w"},
      {"saturation", ValueKind::real, "1e15", "norm above which 1d values are flagged saturated"},
      {"out", ValueKind::text, "out", "output directory"},
  };
  return keys;
}

namespace {

const ConfigKey& lookup(const std::string& key) {
  for (const auto& k : config_schema())
    if (k.name == key) return k;
  throw ConfigError("unknown configuration key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true/false, got '" + v + "'");
}

}  // namespace

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ExperimentConfig::ExperimentConfig() {
  for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse(buf.str(), path.string());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto& k = lookup(key);
  switch (k.kind) {
    case ValueKind::integer: parse_int(key, value); break;
    case ValueKind::real: parse_real(key, value); break;
    case ValueKind::boolean: parse_bool(key, value); break;
    case ValueKind::int_list:
      for (const auto& v : split_list(value)) parse_int(key, v);
      break;
    case ValueKind::real_list:
      for (const auto& v : split_list(value)) parse_real(key, v);
      break;
    case ValueKind::text: break;
  }
  values_[key] = value;
  explicit_[key] = true;
}

void ExperimentConfig::apply_overrides(const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + a + "' is not key=value");
    set(trim(a.substr(0, eq)), trim(a.substr(eq + 1)));
  }
}

const std::string& ExperimentConfig::raw(const std::string& key) const {
  lookup(key);
  return values_.at(key);
}

long long ExperimentConfig::get_int(const std::string& key) const { return parse_int(key, raw(key)); }
double ExperimentConfig::get_real(const std::string& key) const { return parse_real(key, raw(key)); }
bool ExperimentConfig::get_bool(const std::string& key) const { return parse_bool(key, raw(key)); }

std::vector<int> ExperimentConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& v : split_list(raw(key))) out.push_back(static_cast<int>(parse_int(key, v)));
  return out;
}

std::vector<double> ExperimentConfig::get_real_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& v : split_list(raw(key))) out.push_back(parse_real(key, v));
  return out;
}

std::uint64_t ExperimentConfig::seed() const {
  const auto s = get_int("seed");
  if (s < 0) throw ConfigError("seed must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

Geometry ExperimentConfig::geometry() const {
  const int d = static_cast<int>(get_int("d"));
  const int N = static_cast<int>(get_int("N"));
  const int m = static_cast<int>(get_int("m"));
  const double beta = get_real("beta");
  const auto w = get_int("w");
  Geometry g = w > 0 ? Geometry::with_hole(d, N, m, beta, static_cast<int>(w)) : Geometry{d, N, m, beta, get_real("k0")};
  g.validate_hole();
  return g;
}

AcConvention ExperimentConfig::convention() const {
  const auto& c = raw("convention");
  if (c == "closed") return AcConvention::closed;
  if (c == "open") return AcConvention::open;
  throw ConfigError("convention '" + c + "' is not a box convention");
}

NoiseModel ExperimentConfig::noise() const {
  NoiseModel n;
  n.kind = parse_noise_kind(raw("noise"));
  n.scale = get_real("noise_scale");
  n.seed = seed();
  return n;
}

RecoveryOptions ExperimentConfig::recovery_options() const {
  RecoveryOptions o;
  o.sigma_floor = get_real("sigma_floor");
  o.truncate = get_bool("truncate");
  o.symmetrize = get_bool("symmetrize");
  return o;
}

SvdOptions ExperimentConfig::svd_options() const {
  SvdOptions o;
  const auto& r = raw("svd_route");
  if (r == "dense") o.route = SvdRoute::dense;
  else if (r == "tensor") o.route = SvdRoute::tensor;
  else if (r != "auto") throw ConfigError("svd_route must be auto, dense or tensor");
  return o;
}

HioConfig ExperimentConfig::hio() const {
  HioConfig h;
  h.max_iters = static_cast<int>(get_int("iters"));
  h.restarts = static_cast<int>(get_int("restarts"));
  h.feedback = get_real("feedback");
  h.mode = parse_hio_mode(raw("hio_mode"));
  h.seed = seed();
  h.threads = static_cast<int>(get_int("threads"));
  h.log_every = static_cast<int>(get_int("log_every"));
  const auto& f = raw("fill");
  if (f == "none") h.fill = FillPolicy::none();
  else if (f == "full") h.fill = FillPolicy::full();
  else if (f == "annular") h.fill = FillPolicy::annular(static_cast<int>(get_int("fill_depth")));
  else throw ConfigError("fill must be none, full or annular");
  return h;
}

nlohmann::json ExperimentConfig::resolved() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : config_schema()) {
    switch (k.kind) {
      case ValueKind::integer: j[k.name] = get_int(k.name); break;
      case ValueKind::real: j[k.name] = get_real(k.name); break;
      case ValueKind::boolean: j[k.name] = get_bool(k.name); break;
      case ValueKind::int_list: j[k.name] = get_int_list(k.name); break;
      case ValueKind::real_list: j[k.name] = get_real_list(k.name); break;
      case ValueKind::text: j[k.name] = raw(k.name); break;
    }
  }
  return j;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  for (const auto& k : config_schema()) out << k.name << " = " << raw(k.name) << "\n";
  return out.str();
}

void ExperimentConfig::validate() const {
  for (const auto& k : config_schema()) {
    switch (k.kind) {
      case ValueKind::integer: get_int(k.name); break;
      case ValueKind::real: get_real(k.name); break;
      case ValueKind::boolean: get_bool(k.name); break;
      case ValueKind::int_list: get_int_list(k.name); break;
      case ValueKind::real_list: get_real_list(k.name); break;
      case ValueKind::text: break;
    }
  }
  seed();
  const Geometry g = geometry();
  const auto& conv = raw("convention");
  if (conv != "support") convention();
  if (get_int("margin") < 0) throw ConfigError("margin must be >= 0");
  if (get_int("trials") < 1) throw ConfigError("trials must be >= 1");
  if (get_int("bins") < 1) throw ConfigError("bins must be >= 1");
  if (!(get_real("power_tol") > 0.0)) throw ConfigError("power_tol must be positive");
  noise();
  recovery_options();
  svd_options();
  HioConfig h = hio();
  h.support = IndexSet::full(g);
  h.validate(g.w());
}

}  // namespace holefill
