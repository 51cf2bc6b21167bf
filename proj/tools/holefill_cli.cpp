#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "holefill/config.hpp"
#include "holefill/error.hpp"
#include "holefill/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIllPosed = 3;

struct Options {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::string> out;
  std::optional<long long> seed;
  std::optional<int> iters;
  std::optional<int> restarts;
  std::optional<int> trials;
  std::optional<std::string> fill;
  bool dry_run = false;
};

holefill::ExperimentConfig resolve(const Options& o) {
  auto cfg = o.config_file.empty() ? holefill::ExperimentConfig{} : holefill::ExperimentConfig::load(o.config_file);
  cfg.apply_overrides(o.sets);
  if (o.out) cfg.set("out", *o.out);
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  if (o.iters) cfg.set("iters", std::to_string(*o.iters));
  if (o.restarts) cfg.set("restarts", std::to_string(*o.restarts));
  if (o.trials) cfg.set("trials", std::to_string(*o.trials));
  if (o.fill) cfg.set("fill", *o.fill);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Missing low-frequency recovery and phase-retrieval experiments"};
  app.require_subcommand(1);

  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "Print every configuration key with its default and exit");

  Options opts;
  std::string chosen;
  const std::map<std::string, std::string> about = {
      {"recover", "Fill the hole from exact data; spectrum, R mask, filled values, errors"},
      {"cond-table", "||R|| over betas x Ns x ms x k0s with the asymptote"},
      {"noise-hist", "Noise amplification ratios over trials, histogram and bound"},
      {"hio", "HIO alone, optionally on noisy data"},
      {"fill-hio", "HIO alone vs Fill+HIO over ws with paired restarts"},
      {"partial-fill", "Partial-Fill+HIO depth search vs HIO alone over noisy trials"},
      {"sweep-asymptote", "1d exact norm against the asymptote over betas x ms x k0s"},
  };
  for (const auto& [name, cmd] : holefill::commands()) {
    const auto it = about.find(name);
    auto* sub = app.add_subcommand(name, it == about.end() ? "" : it->second);
    sub->add_option("-c,--config", opts.config_file, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", opts.sets, "key=value override (repeatable; wins over the file)");
    sub->add_option("-o,--out", opts.out, "Output directory");
    sub->add_option("--seed", opts.seed, "Top-level seed");
    sub->add_option("--iters", opts.iters, "HIO iterations per restart");
    sub->add_option("--restarts", opts.restarts, "HIO restarts");
    sub->add_option("--trials", opts.trials, "Trials");
    sub->add_option("--fill", opts.fill, "Fill policy: none, full, annular");
    sub->add_flag("--dry-run", opts.dry_run, "Validate and print the resolved configuration only");
    sub->callback([&chosen, n = name] { chosen = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (list_keys) {
      for (const auto& k : holefill::config_schema())
        std::cout << k.name << " = " << k.default_value << "    # " << k.help << "\n";
      return 0;
    }
    app.exit(e);
    return kExitConfig;
  }

  try {
    const auto cfg = resolve(opts);
    if (opts.dry_run) {
      std::cout << nlohmann::json{{"command", chosen}, {"config", cfg.resolved()}}.dump(2) << "\n";
      return 0;
    }
    for (const auto& [name, cmd] : holefill::commands()) {
      if (name != chosen) continue;
      const auto result = cmd(cfg);
      nlohmann::json report = {{"command", name}, {"summary", result.summary}, {"artifacts", result.artifacts}};
      std::cout << report.dump(2) << "\n";
      return 0;
    }
    std::cerr << "unknown command " << chosen << "\n";
    return kExitConfig;
  } catch (const holefill::IllPosedError& e) {
    std::cerr << "ill-posed: " << e.what() << " (sigma " << e.sigma() << ")\n";
    return kExitIllPosed;
  } catch (const holefill::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const holefill::GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
