// containerforge: synthetic container inspection dataset generator.
//
// Exit codes: 0 success, 1 validation failure, 2 usage or configuration
// error, 3 generation or I/O failure.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "containerforge/config.hpp"
#include "containerforge/pipeline.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

int default_jobs() {
  if (const char* env = std::getenv("CONTAINERFORGE_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
    throw cforge::ConfigError("CONTAINERFORGE_JOBS must be an integer in [1, 1024]");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic container inspection dataset generator", "containerforge"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int scenes = 0, jobs = 0;
  bool quiet = false;
  auto* gen = app.add_subcommand("generate", "Generate a dataset");
  gen->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  auto* seed_opt = gen->add_option("--seed", seed, "Master seed (overrides the config)");
  auto* scenes_opt = gen->add_option("--scenes", scenes, "Scene count for train + val")->check(CLI::NonNegativeNumber);
  auto* out_opt = gen->add_option("--out", out_dir, "Output directory");
  auto* jobs_opt = gen->add_option("--jobs", jobs, "Worker threads (default: CONTAINERFORGE_JOBS or all cores)")
                       ->check(CLI::Range(1, 1024));
  gen->add_flag("--quiet", quiet, "No progress output");

  std::string stats_dir;
  bool stats_json = false;
  auto* stats = app.add_subcommand("stats", "Print class statistics of a generated dataset");
  stats->add_option("dataset", stats_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  stats->add_flag("--json", stats_json, "Print JSON instead of tables");

  std::string validate_dir;
  auto* validate = app.add_subcommand("validate", "Check a generated dataset for consistency");
  validate->add_option("dataset", validate_dir, "Dataset directory")->required();
  validate->add_flag("--quiet", quiet, "Only set the exit code");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
    } else {
      app.exit(e);
    }
    return kExitUsage;
  }

  try {
    if (*gen) {
      cforge::GenerationConfig cfg = config_path.empty() ? cforge::GenerationConfig{} : cforge::parse_config(config_path);
      cforge::RunOptions opt;
      if (*seed_opt) {
        cfg.master_seed = seed;
        opt.overrides["seed"] = seed;
      }
      if (*scenes_opt) {
        cfg.scene_count = scenes;
        opt.overrides["scene_count"] = scenes;
      }
      if (*out_opt) {
        cfg.output = out_dir;
        opt.overrides["output"] = out_dir;
      }
      cfg.validate();
      opt.jobs = *jobs_opt ? jobs : default_jobs();
      opt.quiet = quiet;
      const cforge::DatasetManifest m = cforge::run_dataset(cfg, opt);
      if (!quiet)
        std::fprintf(stderr, "wrote %zu images from %zu scenes to %s\n", m.images.size(), m.scenes.size(),
                     cfg.output.string().c_str());
      return 0;
    }
    if (*stats) {
      const auto report = cforge::compute_stats(cforge::read_manifest(std::filesystem::path(stats_dir) / "manifest.json"));
      std::cout << (stats_json ? report.to_json().dump(2) + "\n" : report.to_text());
      return 0;
    }
    if (*validate) {
      if (!std::filesystem::is_directory(validate_dir)) {
        std::fprintf(stderr, "error: %s is not a directory\n", validate_dir.c_str());
        return kExitUsage;
      }
      const cforge::ValidationReport report = cforge::validate_dataset(validate_dir);
      if (!quiet) std::cout << report.to_text();
      if (!report.ok()) {
        std::string failing;
        for (const auto& c : report.checks)
          if (!c.passed) failing += (failing.empty() ? "" : ", ") + c.name;
        std::fprintf(stderr, "validation failed: %s\n", failing.c_str());
        return kExitValidation;
      }
      return 0;
    }
  } catch (const cforge::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
