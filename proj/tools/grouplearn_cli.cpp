// Command-line driver: run a scenario file, diagnose it without simulating,
// or run a whole directory of scenarios.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grouplearn/harness.hpp"

namespace fs = std::filesystem;
using namespace grouplearn;

namespace {

bool verbose_logging() {
  const char* v = std::getenv("GROUPLEARN_LOG");
  return v != nullptr && std::string(v) != "" && std::string(v) != "0";
}

EmitFormat parse_format(const std::string& f) {
  if (f == "csv") return EmitFormat::Csv;
  if (f == "json") return EmitFormat::Json;
  throw ValidationError("format must be 'csv' or 'json'");
}

void run_one(const fs::path& scenario_path, const fs::path& out_dir, EmitFormat format,
             std::optional<std::uint64_t> seed_override) {
  Scenario sc = load_scenario(scenario_path);
  if (seed_override) sc.seed = *seed_override;
  if (verbose_logging())
    std::cerr << "running " << scenario_path << " (seed " << sc.seed << ")\n";
  RunReport report = run(sc);
  fs::create_directories(out_dir);
  emit(report, format, out_dir / scenario_path.stem());
  std::cout << scenario_path.stem().string() << ": ok\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group decision dynamics simulator"};
  app.require_subcommand(1);

  std::string scenario_file, out_dir = ".", format_name = "json", batch_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* run_cmd = app.add_subcommand("run", "simulate one scenario and emit its report");
  run_cmd->add_option("scenario", scenario_file, "scenario JSON file")->required();
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--format", format_name, "csv or json");
  run_cmd->add_option("--seed", seed, "override the scenario seed")
      ->each([&](const std::string&) { seed_set = true; });

  auto* batch_cmd = app.add_subcommand("batch", "run every *.json scenario in a directory");
  batch_cmd->add_option("dir", batch_dir, "scenario directory")->required();
  batch_cmd->add_option("--out", out_dir, "output directory");
  batch_cmd->add_option("--format", format_name, "csv or json");

  auto* diag_cmd = app.add_subcommand("diagnose", "print verdicts without trajectories");
  diag_cmd->add_option("scenario", scenario_file, "scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      run_one(scenario_file, out_dir, parse_format(format_name),
              seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt);
    } else if (batch_cmd->parsed()) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(batch_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
          files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      if (files.empty()) throw ValidationError("no *.json scenarios in " + batch_dir);
      for (const auto& f : files)
        run_one(f, out_dir, parse_format(format_name), std::nullopt);
    } else {
      Scenario sc = load_scenario(scenario_file);
      RunReport report = diagnose(sc);
      std::cout << report.diagnostics.dump(2) << "\n";
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
