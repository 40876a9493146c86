#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "trapcal/config.hpp"
#include "trapcal/errors.hpp"
#include "trapcal/scenario.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitDomainError = 3;

std::string resolve_output_dir(const std::string& from_cli, const std::string& from_config) {
  if (!from_cli.empty()) return from_cli;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("TRAPCAL_OUT")) {
    if (*env != '\0') return env;
  }
  return ".";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trapcal: trapped-ion micromotion compensation simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  long long seed_override = -1;
  int threads = 0;

  CLI::App* run = app.add_subcommand("run", "execute a scenario config and write its artifacts");
  run->add_option("config", config_path, "path to a scenario config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory (default: config, then $TRAPCAL_OUT)");
  run->add_option("--seed", seed_override, "override the config's master seed");
  run->add_option("--threads", threads, "worker threads for Monte Carlo batches");

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "check a config and report every violation");
  validate->add_option("config", validate_path, "path to a scenario config (JSON)")->required();

  CLI::App* list = app.add_subcommand("list-scenarios", "print the known scenario names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& [name, description] : trapcal::scenario_catalog()) {
        std::cout << name << "  -  " << description << "\n";
      }
      return 0;
    }
    if (validate->parsed()) {
      trapcal::load_config_file(validate_path);
      std::cout << "config ok\n";
      return 0;
    }
    trapcal::ScenarioConfig config = trapcal::load_config_file(config_path);
    if (seed_override >= 0) {
      config.seed = static_cast<std::uint64_t>(seed_override);
    }
    if (threads > 0) {
      config.threads = threads;
    }
    config.output_dir = resolve_output_dir(out_dir, config.output_dir);
    const trapcal::RunReport report = trapcal::run_scenario(config);
    std::cout << "scenario: " << report.scenario << "\n"
              << "seed: " << report.seed << "\n"
              << "wall_time_s: " << report.wall_time_s << "\n";
    for (const auto& [name, digest] : report.file_digests) {
      std::cout << "artifact: " << name << "  fnv1a64=" << digest << "\n";
    }
    for (const auto& [name, value] : report.metrics) {
      std::cout << "metric: " << name << " = " << value << "\n";
    }
    return 0;
  } catch (const trapcal::ConfigInvalid& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  } catch (const trapcal::ScenarioUnknown& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const trapcal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
}
