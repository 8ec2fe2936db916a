#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdlib>
#include <iostream>

#include "nslab/scenario.hpp"

// Exit codes: 0 all assertions pass, 1 a named assertion failed,
// 2 config parse/validation error.
int main(int argc, char** argv) {
  if (const char* threads = std::getenv("NSLAB_THREADS"))
    Eigen::setNbThreads(std::max(1, std::atoi(threads)));

  CLI::App app{"nslab: Newton-Schroedinger vs second-quantized dynamics laboratory"};
  app.require_subcommand(1);

  std::string config_path, report_dir, out_override;

  auto* run = app.add_subcommand("run", "execute a scenario config and write its reports");
  run->add_option("config", config_path, "path to a scenario config file")->required();
  run->add_option("-o,--output", out_override, "override output.dir from the config");

  auto* validate = app.add_subcommand("validate", "parse and validate a config, run nothing");
  validate->add_option("config", config_path, "path to a scenario config file")->required();

  auto* plot = app.add_subcommand("plot", "render SVG plots for a finished run directory");
  plot->add_option("dir", report_dir, "directory containing index.json")->required();

  auto* list = app.add_subcommand("list-scenarios", "print the available scenario names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& name : nslab::scenario_names()) std::cout << name << "\n";
      return 0;
    }
    if (validate->parsed()) {
      nslab::validate_config(nslab::read_text_file(config_path));
      std::cout << "ok\n";
      return 0;
    }
    if (plot->parsed()) {
      int n = nslab::plot_report_dir(report_dir, std::cerr);
      std::cout << "wrote " << n << " svg file(s)\n";
      return 0;
    }
    // run
    auto report = nslab::run_scenario(nslab::read_text_file(config_path), out_override);
    for (const auto& a : report.assertions)
      std::cout << (a.pass ? "[PASS] " : "[FAIL] ") << a.name << ": " << a.detail << "\n";
    if (!report.all_pass()) {
      for (const auto& a : report.assertions)
        if (!a.pass) std::cerr << "assertion failed: " << a.name << "\n";
      return 1;
    }
    std::cout << "scenario " << report.scenario << " done in " << int(report.wall_ms)
              << " ms (config sha1 " << report.config_sha1.substr(0, 12) << ")\n";
    return 0;
  } catch (const nslab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    // parameter-validation failures (bad grid size, step counts, ...)
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
