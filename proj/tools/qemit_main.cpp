#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "qemit/runner.hpp"
#include "qemit/scenario.hpp"

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("short write to " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moment-matrix verdicts for localized emitters behind a mode splitter"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  int workers = 1;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("scenario", scenario_path, "scenario file (INI)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "output directory, created if missing")
        ->capture_default_str();
    cmd->add_option("--workers", workers, "concurrent grid evaluators")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--seed", seed, "seed for random geometry draws")
        ->capture_default_str();
  };
  CLI::App* run = app.add_subcommand("run", "evaluate one scenario");
  add_common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "evaluate a parameter grid");
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    qemit::scenario::Scenario s = qemit::scenario::load_scenario(scenario_path);
    if (run->parsed() && s.sweep.enabled)
      throw qemit::scenario::ConfigError("[sweep] section present: use the sweep command");
    if (sweep->parsed() && !s.sweep.enabled)
      throw qemit::scenario::ConfigError("[sweep] section missing: nothing to sweep");
    const std::uint64_t effective_seed = qemit::scenario::resolve_chi(s, seed);

    fs::path dir(out_dir);
    fs::create_directories(dir);
    const std::string base = (dir / s.output_prefix).string();

    if (run->parsed()) {
      const qemit::runner::RunArtifacts artifacts = qemit::runner::run_scenario(s, effective_seed);
      write_file(base + ".json", artifacts.results_json);
      write_file(base + "_moments.csv", artifacts.moments_csv);
      if (!artifacts.g2_dat.empty()) write_file(base + "_g2.dat", artifacts.g2_dat);
      std::cout << "nonclassical: " << (artifacts.nonclassical ? "yes" : "no") << "\n";
      std::cout << "all bipartitions entangled: "
                << (artifacts.all_bipartitions_entangled ? "yes" : "no") << "\n";
    } else {
      const qemit::runner::SweepArtifacts artifacts =
          qemit::runner::sweep_scenario(s, effective_seed, workers);
      write_file(base + ".json", artifacts.results_json);
      write_file(base + "_sweep.csv", artifacts.sweep_csv);
      if (!artifacts.squeezing_dat.empty())
        write_file(base + "_squeezing.dat", artifacts.squeezing_dat);
      if (!artifacts.sub_poisson_dat.empty())
        write_file(base + "_sub_poisson.dat", artifacts.sub_poisson_dat);
    }
    return 0;
  } catch (const qemit::scenario::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}
