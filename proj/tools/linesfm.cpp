#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "linesfm/pipeline.hpp"

namespace {

void ConfigureLogging() {
  const char* env = std::getenv("LINESFM_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace linesfm;
  ConfigureLogging();

  CLI::App app{"Camera/LIDAR line-based structure from motion"};
  app.set_version_flag("--version", std::string(pipeline::kVersion));
  std::string stage;
  std::string config_path;
  int threads = -1;
  long long seed = -1;
  app.add_option("stage", stage, "synth | detect | match | associate | ba | depth | eval")->required();
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--threads", threads, "worker thread cap (default: logical cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "overrides the config 'seed'")->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const pipeline::Stage s = pipeline::ParseStage(stage);
    pipeline::Config cfg = pipeline::Config::Load(config_path);
    if (seed >= 0) cfg.Set("seed", seed);
    if (threads >= 0) cfg.Set("threads", threads);
    SetMaxThreads(cfg.Int("threads"));
    pipeline::RunStage(s, cfg);
    spdlog::info("stage '{}' done", stage);
    return 0;
  } catch (const Error& e) {
    std::cerr << "linesfm " << stage << ": " << e.what() << "\n";
    return pipeline::ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "linesfm " << stage << ": " << e.what() << "\n";
    return 4;
  }
}
