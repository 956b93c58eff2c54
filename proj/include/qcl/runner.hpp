// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qcl/config.hpp"
#include "qcl/metrics.hpp"
#include "qcl/training.hpp"

namespace qcl {

struct RunPaths {
  std::string dir;
  std::string manifest;    // manifest.json
  std::string metrics;     // metrics.jsonl, one record per task
  std::string checkpoint;  // checkpoint.json, rewritten after every task
  std::string summary;     // summary.csv
  std::string plots_dir;   // plots/*.svg
};

RunPaths run_paths(const std::string& output_dir);

/// Type-erased task stream; task(t) is valid for t in [0, task_count).
struct TaskSource {
  int task_count = 0;
  std::function<TaskData(int)> task;
};

TaskSource make_task_source(const ExperimentConfig& cfg);

/// Rows picked by index; keeps labels and class_count.
Dataset subset(const Dataset& ds, const std::vector<Eigen::Index>& idx);

/// Model described by cfg.model. Parameter init draws from the kModelInit
/// substream of the experiment seed. input_dim is the real feature width
/// (complex inputs already doubled) and sizes the MLP; class_count picks the
/// head shape.
Model build_model(const ExperimentConfig& cfg, Eigen::Index input_dim,
                  int class_count);

struct RunOptions {
  int stop_after_tasks = -1;  // checkpoint-resume hook; < 0 runs to the end
  bool quiet = false;
};

/// Full experiment loop: stream construction, per-task training, metric
/// records appended to metrics.jsonl, checkpoint after every task, summary
/// and plots on completion. A matching interrupted run in output_dir is
/// resumed; a mismatched one is an error.
void run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

std::vector<MetricsRecord> read_metrics_jsonl(const std::string& path);

/// summary.csv derived from metrics.jsonl and the manifest config. The same
/// function backs the run epilogue and the report command, so both emit
/// byte-identical files.
void write_summary(const std::string& run_dir);

void write_plots(const std::string& run_dir);

/// One labeled moving-mean line (plus band) per metrics.jsonl input, all in a
/// single SVG. Labels default to each file's parent directory name.
void write_multi_plot(const std::vector<std::string>& jsonl_paths,
                      const std::string& metric, int window,
                      const std::vector<std::string>& labels,
                      const std::string& out_svg);

/// Bound checks, the classical saturation sweep, and the shifted-ensemble
/// gradient comparison; prints one line per check and writes JSON reports
/// into output_dir. Returns true when every check passes.
bool run_verify_theory(const ExperimentConfig& cfg);

struct GradcheckReport {
  int circuits = 0;
  double max_fd_rel_err = 0.0;    // adjoint vs central differences
  double max_shift_abs_diff = 0.0;  // adjoint vs parameter shift
  bool ok = false;
};

/// Cross-checks the three gradient paths on random circuits of up to 4
/// qubits and depth 3, cycling through all readout kinds. Mixed-gate
/// circuits compare the reverse sweep against central differences
/// (relative error below 1e-5 wherever |g| > 1e-8); rotation-only circuits
/// additionally compare against the shift rule (absolute error below 1e-8).
GradcheckReport run_gradcheck(int n_circuits, std::uint64_t seed, bool verbose);

/// Writes the eigenvector cache for an xxz stream to cfg.stream.cache.
void run_gen_xxz(const ExperimentConfig& cfg);

}  // namespace qcl
