#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "holefill/config.hpp"
#include "holefill/formats.hpp"
#include "holefill/phantom.hpp"

namespace holefill {

/// Writes named artifacts into one directory. Names must be plain file names;
/// anything that could escape the directory is rejected.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, nlohmann::json config);

  const std::filesystem::path& dir() const { return dir_; }
  /// Content hash of the resolved configuration.
  const std::string& input_hash() const { return hash_; }
  std::uint64_t seed() const;

  /// JSON document with "config", "seed" and "input_hash" added.
  void json(const std::string& name, nlohmann::json body);
  /// CSV with a leading "# " line holding the provenance JSON.
  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows);
  /// HFAR array plus a "<name>.json" sidecar with provenance and `meta`.
  void array(const std::string& name, const ArrayFile& a, nlohmann::json meta = nlohmann::json::object());

  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path checked(const std::string& name) const;
  nlohmann::json provenance() const;

  std::filesystem::path dir_;
  nlohmann::json config_;
  std::string hash_;
  std::vector<std::string> written_;
};

/// Shortest round-trip decimal text of a double.
std::string fmt(double v);

/// Phantom, its measurement and the support sets an experiment works with.
struct Scene {
  Geometry geometry;
  Phantom phantom;
  Simulation sim;
  IndexSet support;
  IndexSet s_ac;
};

/// Builds the configured phantom on the configured grid. S_AC comes from the
/// estimated support unless the convention names a box.
Scene make_scene(const ExperimentConfig& cfg);

struct CommandResult {
  nlohmann::json summary;
  std::vector<std::string> artifacts;
};

CommandResult cmd_recover(const ExperimentConfig& cfg);
CommandResult cmd_cond_table(const ExperimentConfig& cfg);
CommandResult cmd_noise_hist(const ExperimentConfig& cfg);
CommandResult cmd_hio(const ExperimentConfig& cfg);
CommandResult cmd_fill_hio(const ExperimentConfig& cfg);
CommandResult cmd_partial_fill(const ExperimentConfig& cfg);
CommandResult cmd_sweep_asymptote(const ExperimentConfig& cfg);

using Command = std::function<CommandResult(const ExperimentConfig&)>;
/// Subcommand name -> driver, in a fixed order.
const std::vector<std::pair<std::string, Command>>& commands();

}  // namespace holefill
