// Experiment runner: fblab <experiment> [--config file] [--out dir] [--threads k]

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "fblab/config.hpp"
#include "fblab/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"free-boundary lab: axisymmetric semilinear and one-phase experiments"};
  app.set_version_flag("--version", FBLAB_VERSION);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  unsigned threads = 1;
  const char* names[] = {"profile", "solve", "stability", "onephase", "blowdown", "window", "figure1"};
  const char* help[] = {"shoot and classify a 1D profile",
                        "Newton solve on an axisymmetric grid",
                        "second variation and inequality probe",
                        "one-phase curvature, claimH and stability form",
                        "Gamma-limit energy table",
                        "admissible exponent window per dimension",
                        "plot data for the three 1D profile cases"};
  for (int k = 0; k < 7; ++k) {
    auto* sub = app.add_subcommand(names[k], help[k]);
    sub->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--threads", threads, "worker threads; 1 is bitwise reproducible")->check(CLI::PositiveNumber);
  }
  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const auto selected = fblab::experiment_from_string(name);
    fblab::ExperimentConfig cfg = config_path.empty()
                                      ? fblab::make_config(fblab::ConfigDoc{}, selected)
                                      : fblab::load_config(config_path, selected);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    fblab::set_threads(threads);
    const fblab::RunOutput result = fblab::run(cfg);
    result.files.commit(cfg.output_dir);
    std::cout << (cfg.output_dir / "report.json").string() << "\n";
  } catch (const fblab::ConfigError& e) {
    std::cerr << "fblab " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fblab " << name << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
