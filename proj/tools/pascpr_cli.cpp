#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "pascpr/config.hpp"
#include "pascpr/error.hpp"
#include "pascpr/harness.hpp"

using namespace pascpr;

namespace {

ExperimentConfig resolve(const std::string& config_path, const std::string& preset_name) {
  if (config_path.empty() && preset_name.empty()) throw Error(Errc::configuration, "need --config or --preset");
  ExperimentConfig base = preset_name.empty() ? ExperimentConfig{} : preset(preset_name);
  if (config_path.empty()) {
    base.validate();
    return base;
  }
  return load_config(config_path, base, preset_name.empty());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAS / carrier phase recovery WDM simulator"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out_path = "results.csv", in_path, figure;
  std::uint64_t seed = 0;
  int workers = 0;
  bool no_resume = false, dump_config = false;

  auto* run = app.add_subcommand("run", "run the sweep and write the optimum per sweep point");
  run->add_option("--config", config_path, "JSON experiment file")->check(CLI::ExistingFile);
  run->add_option("--preset", preset_name, "fig2_desk, fig3_desk, fig2_full, fig3_full or backtoback");
  run->add_option("--out", out_path, "results CSV (per-power rows go to <out>.points.csv)");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--workers", workers, "parallel sweep points")->check(CLI::PositiveNumber);
  run->add_flag("--no-resume", no_resume, "ignore rows already present in the points file");
  run->add_flag("--dump-config", dump_config, "print the resolved configuration and exit");

  auto* sweep = app.add_subcommand("sweep-nbps", "evaluate BPS over the configured half-window list");
  sweep->add_option("--config", config_path, "JSON experiment file")->check(CLI::ExistingFile)->required();
  sweep->add_option("--out", out_path, "results CSV");
  sweep->add_option("--workers", workers)->check(CLI::PositiveNumber);

  auto* plot = app.add_subcommand("plotdata", "emit per-curve series from a results CSV");
  plot->add_option("--in", in_path, "results CSV")->check(CLI::ExistingFile)->required();
  plot->add_option("--figure", figure, "fig2 or fig3")->check(CLI::IsMember({"fig2", "fig3"}))->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (plot->parsed()) {
      std::cout << plot_data(read_results(in_path), figure);
      return 0;
    }
    auto cfg = resolve(config_path, preset_name);
    if (run->count("--seed")) cfg.master_seed = seed;
    if (workers > 0) cfg.workers = workers;
    cfg.validate();
    if (dump_config) {
      std::cout << config_to_json(cfg);
      return 0;
    }
    RunOptions opt;
    opt.out = out_path;
    opt.resume = !no_resume;
    opt.log = &std::cerr;
    const auto res = sweep->parsed() ? sweep_nbps(cfg, opt) : run_experiment(cfg, opt);
    std::cerr << "wrote " << out_path << " (" << res.computed_jobs << " computed, " << res.reused_jobs
              << " reused, " << res.failed_jobs << " failed)\n";
    return res.failed_jobs ? 3 : 0;
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
