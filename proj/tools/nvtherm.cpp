// nvtherm: reproducible NV thermometry simulation scenarios.
//
// One subcommand per scenario; the scenario named on the command line must
// match the config's `scenario` key when that key is present. Exit codes:
// 0 success, 2 config error, 3 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nvtherm/scenario.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int workers = 1;
  bool force = false;
};

int run(const std::string& scenario, const CliArgs& args) {
  using namespace nvtherm;
  ScenarioConfig cfg;
  try {
    KeyValueConfig kv = KeyValueConfig::parse_file(args.config_path);
    if (!kv.has("scenario")) kv.set("scenario", scenario);
    if (kv.require_string("scenario") != scenario)
      throw ConfigError("scenario: config says '" + kv.require_string("scenario") +
                        "' but the '" + scenario + "' subcommand was invoked");
    if (args.seed >= 0) kv.set("master_seed", std::to_string(args.seed));
    if (!args.out_dir.empty()) kv.set("output_dir", args.out_dir);
    cfg = ScenarioConfig::from_config(kv);
    if (const char* root = std::getenv("NVTHERM_OUTPUT_ROOT"); root && *root)
      cfg.output_dir = (std::filesystem::path(root) / cfg.output_dir).string();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const RunResult res = run_scenario(cfg, args.workers, args.force);
    std::cout << "run complete: " << res.output_dir << "\n";
    for (const auto& line : res.summary_lines) std::cout << "  " << line << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NV spin thermometry simulation scenarios"};
  app.require_subcommand(1);

  CliArgs args;
  std::string chosen;
  for (const auto& [name, sc] : nvtherm::scenario_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config_path, "scenario config file")->required();
    sub->add_option("--seed", args.seed, "override master_seed");
    sub->add_option("--out", args.out_dir, "override output directory");
    sub->add_option("--workers", args.workers, "worker threads (speed only)");
    sub->add_flag("--force", args.force, "overwrite a completed run directory");
    sub->callback([&chosen, name = name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return run(chosen, args);
}
