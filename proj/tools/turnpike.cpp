// turnpike run <config> [--out DIR] [-v]
//
// Exit status: 0 ok, 1 experiment failure, 2 config or usage error.

#include "turnpike/errors.hpp"
#include "turnpike/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kBadConfig = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turnpike and MPC experiments for semilinear parabolic control problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool verbose = false;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Experiment config (INI)")->required();
  run->add_option("--out", out_dir,
                  "Output directory (default: config 'output', then $TURNPIKE_OUTPUT_ROOT/<name>)");
  run->add_flag("-v,--verbose", verbose, "Progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  turnpike::ExperimentConfig cfg;
  try {
    cfg = turnpike::load_config(config_path);
  } catch (const turnpike::ConfigError& e) {
    std::cerr << "turnpike: config error";
    if (e.line() > 0) std::cerr << " at " << config_path << ':' << e.line();
    std::cerr << ": " << e.what() << '\n';
    return kBadConfig;
  }

  const auto dir = turnpike::resolve_output_dir(cfg, config_path, out_dir);
  try {
    const auto report = turnpike::run_experiment(cfg, dir, verbose ? &std::cerr : nullptr);
    for (const auto& f : report.files) std::cout << (report.output_dir / f).string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "turnpike: experiment failed: " << e.what() << '\n';
    return kFailed;
  }
  return kOk;
}
