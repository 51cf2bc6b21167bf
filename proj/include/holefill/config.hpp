#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "holefill/lattice.hpp"
#include "holefill/noise.hpp"
#include "holefill/recovery.hpp"
#include "holefill/retrieval.hpp"

namespace holefill {

enum class ValueKind { integer, real, text, boolean, int_list, real_list };

struct ConfigKey {
  std::string name;
  ValueKind kind;
  std::string default_value;
  std::string help;
};

/// Every recognised key with its default.
const std::vector<ConfigKey>& config_schema();

/// Flat key=value experiment configuration. Lines are `key = value`, `#`
/// starts a comment, later assignments win. Unknown keys are rejected.
class ExperimentConfig {
 public:
  ExperimentConfig();

  static ExperimentConfig parse(const std::string& text, const std::string& origin = "<string>");
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Applies `key=value` overrides on top of the current values.
  void set(const std::string& key, const std::string& value);
  void apply_overrides(const std::vector<std::string>& assignments);

  bool is_set(const std::string& key) const { return explicit_.count(key) != 0; }
  const std::string& raw(const std::string& key) const;

  long long get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_text(const std::string& key) const { return raw(key); }
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<double> get_real_list(const std::string& key) const;

  std::uint64_t seed() const;
  std::filesystem::path output_dir() const { return raw("out"); }

  /// Geometry from d, N, m, beta and either w (when set) or k0.
  Geometry geometry() const;
  AcConvention convention() const;
  NoiseModel noise() const;
  RecoveryOptions recovery_options() const;
  SvdOptions svd_options() const;
  /// HIO settings without the support (which depends on the phantom).
  HioConfig hio() const;

  /// Every key with its typed value; stable key order, no timestamps.
  nlohmann::json resolved() const;
  /// key = value text that parses back to the same configuration.
  std::string to_text() const;

  /// Type-checks every value and the cross-key invariants.
  void validate() const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

std::vector<std::string> split_list(const std::string& s);

}  // namespace holefill
