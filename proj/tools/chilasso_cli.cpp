// Command-line front end: reads a JSON config, applies flag overrides and
// runs one experiment mode through the C interface.

#include "chilasso/chilasso.h"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"chilasso: collaborative hierarchical sparse coding experiments"};
  app.set_version_flag("--version", std::string(chl_version()));

  std::string config_path;
  std::string mode;
  std::optional<std::uint64_t> seed;
  bool baselines = false;
  bool force = false;
  int jobs = 0;
  std::string out_dir;

  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--mode", mode, "learn-dict | audio-identify | texture-separate | synth-bench | encode");
  app.add_option("--seed", seed, "Random seed (overrides the config)");
  app.add_flag("--baselines", baselines, "Also run the Lasso and C-GLasso baselines");
  app.add_flag("--force", force, "Replace an existing output directory");
  app.add_option("--jobs", jobs, "Worker threads (overrides the config)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_dir, "Output directory")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  std::string config = "{}";
  std::string config_dir;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot read " << config_path << "\n";
      return 1;
    }
    std::ostringstream text;
    text << in.rdbuf();
    config = text.str();
    config_dir = std::filesystem::absolute(config_path).parent_path().string();
  }

  int exit_code = 1;
  char* report = nullptr;
  const std::uint64_t seed_value = seed.value_or(0);
  const chl_status st = chl_run(mode.empty() ? nullptr : mode.c_str(), config.c_str(),
                                config_dir.empty() ? nullptr : config_dir.c_str(), out_dir.c_str(),
                                force ? 1 : 0, jobs, seed ? &seed_value : nullptr, baselines ? 1 : 0,
                                &exit_code, &report);
  if (st != CHL_OK) {
    std::cerr << "error: " << chl_status_string(st) << ": " << chl_last_error() << "\n";
    return 1;
  }
  std::cout << report << "\n";
  chl_buffer_free(report);
  return exit_code;
}
