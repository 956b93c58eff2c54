// SPDX-License-Identifier: Apache-2.0
#include "qcl/cli.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qcl/config.hpp"
#include "qcl/runner.hpp"

namespace qcl {

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"continual-learning lab: statevector circuit models and dense nets"};
  app.require_subcommand(1);

  std::string run_config;
  int stop_after = -1;
  bool quiet = false;
  auto* cmd_run = app.add_subcommand("run", "train a model over a task sequence");
  cmd_run->add_option("--config", run_config, "experiment config file")->required();
  cmd_run->add_option("--stop-after", stop_after,
                      "pause after this many tasks (resume by running again)");
  cmd_run->add_flag("--quiet", quiet, "suppress per-task progress lines");

  std::string vt_config;
  auto* cmd_vt =
      app.add_subcommand("verify-theory", "numeric checks of the model-class ceilings");
  cmd_vt->add_option("--config", vt_config, "theory config file")->required();

  int gc_n = 50;
  std::uint64_t gc_seed = 7;
  auto* cmd_gc =
      app.add_subcommand("gradcheck", "cross-check the three gradient paths");
  cmd_gc->add_option("--n", gc_n, "number of random circuits")
      ->check(CLI::PositiveNumber);
  cmd_gc->add_option("--seed", gc_seed, "rng seed");

  std::string gx_config;
  auto* cmd_gx =
      app.add_subcommand("gen-xxz", "precompute the spin-chain eigenvector cache");
  cmd_gx->add_option("--config", gx_config, "xxz config file")->required();

  std::string plot_dir;
  std::vector<std::string> plot_jsonl, plot_labels;
  std::string plot_metric = "test_accuracy";
  int plot_window = 40;
  std::string plot_out;
  auto* cmd_plot = app.add_subcommand(
      "plot", "regenerate a run's SVGs, or overlay several runs in one plot");
  auto* plot_dir_opt = cmd_plot->add_option("--dir", plot_dir, "run output directory");
  auto* plot_jsonl_opt = cmd_plot->add_option(
      "--jsonl", plot_jsonl, "metrics.jsonl files to overlay (repeatable)");
  cmd_plot->add_option("--metric", plot_metric,
                       "metric column for --jsonl mode (default test_accuracy)");
  cmd_plot->add_option("--window", plot_window, "moving-average window")
      ->check(CLI::PositiveNumber);
  auto* plot_out_opt =
      cmd_plot->add_option("--out", plot_out, "output SVG path for --jsonl mode");
  cmd_plot->add_option("--label", plot_labels, "legend label per --jsonl input");
  plot_jsonl_opt->excludes(plot_dir_opt);
  plot_out_opt->needs(plot_jsonl_opt);

  std::string report_dir;
  auto* cmd_report = app.add_subcommand(
      "report", "regenerate summary.csv for a run directory and print it");
  cmd_report->add_option("--dir", report_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*cmd_run) {
      const ExperimentConfig cfg = parse_config_file(run_config);
      RunOptions opt;
      opt.stop_after_tasks = stop_after;
      opt.quiet = quiet;
      run_experiment(cfg, opt);
      return 0;
    }
    if (*cmd_vt) return run_verify_theory(parse_config_file(vt_config)) ? 0 : 1;
    if (*cmd_gc) return run_gradcheck(gc_n, gc_seed, true).ok ? 0 : 1;
    if (*cmd_gx) {
      run_gen_xxz(parse_config_file(gx_config));
      return 0;
    }
    if (*cmd_plot) {
      if (!plot_jsonl.empty()) {
        if (plot_out.empty())
          throw std::invalid_argument("plot --jsonl mode needs --out");
        write_multi_plot(plot_jsonl, plot_metric, plot_window, plot_labels, plot_out);
      } else if (!plot_dir.empty()) {
        write_plots(plot_dir);
      } else {
        throw std::invalid_argument("plot needs --dir or --jsonl");
      }
      return 0;
    }
    if (*cmd_report) {
      write_summary(report_dir);
      std::ifstream csv(run_paths(report_dir).summary);
      std::cout << csv.rdbuf();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 2;
}

}  // namespace qcl
