// SPDX-License-Identifier: Apache-2.0
#include "qcl/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "qcl/plot.hpp"
#include "qcl/rng.hpp"
#include "qcl/theory.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace qcl {

namespace {

constexpr const char* kCodeVersion = "0.1.0";

std::string now_utc() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  fs::rename(tmp, path);
}

std::string fmt17(double v) {
  char b[40];
  std::snprintf(b, sizeof(b), "%.17g", v);
  return b;
}

Eigen::Index feature_width(const Dataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("feature_width: empty dataset");
  return ds.complex_inputs() ? 2 * ds.states.front().size() : ds.inputs.cols();
}

Dataset slice_rows(const Dataset& ds, Eigen::Index begin, Eigen::Index end) {
  Dataset out;
  out.class_count = ds.class_count;
  out.inputs = ds.inputs.middleRows(begin, end - begin);
  out.labels = ds.labels.segment(begin, end - begin);
  return out;
}

/// First k entries of a fresh permutation; the whole set when k covers it.
Dataset pick(const Dataset& ds, Rng& rng, int k) {
  const Eigen::Index n = ds.size();
  if (k <= 0 || k >= n) return ds;
  const std::vector<int> perm = rng.permutation(static_cast<int>(n));
  std::vector<Eigen::Index> idx(perm.begin(), perm.begin() + k);
  return subset(ds, idx);
}

ojson metrics_row(const MetricsRecord& r) {
  ojson j;
  j["task_index"] = r.task_index;
  j["train_accuracy"] = r.train_accuracy;
  j["test_accuracy"] = r.test_accuracy;
  j["weight_norm"] = r.weight_norm;
  j["grad_norm"] = r.grad_norm;
  j["fim_trace"] = r.fim_trace;
  j["wall_time_seconds"] = r.wall_time_seconds;
  return j;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void save_checkpoint(const std::string& path, const Model& model,
                     const AdamState& adam, int tasks_done) {
  ojson j;
  j["tasks_done"] = tasks_done;
  j["params"] = to_std(model_flat_params(model));
  j["adam_m"] = to_std(adam.m);
  j["adam_v"] = to_std(adam.v);
  j["adam_t"] = adam.t;
  atomic_write(path, j.dump() + "\n");
}

void load_checkpoint(const std::string& path, Model& model, AdamState& adam,
                     int& tasks_done) {
  const json j = json::parse(read_file(path));
  tasks_done = j.at("tasks_done").get<int>();
  const Eigen::VectorXd params = from_std(j.at("params").get<std::vector<double>>());
  if (params.size() != model_param_count(model))
    throw std::runtime_error("checkpoint does not match the configured model");
  Model m = model;
  set_model_flat_params(m, params);
  model = std::move(m);
  adam.m = from_std(j.at("adam_m").get<std::vector<double>>());
  adam.v = from_std(j.at("adam_v").get<std::vector<double>>());
  adam.t = j.at("adam_t").get<long>();
  if (adam.m.size() != params.size() || adam.v.size() != params.size())
    throw std::runtime_error("checkpoint optimizer state has the wrong size");
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) return lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "sin") return Activation::Sin;
  throw std::invalid_argument("unknown activation: " + name);
}

ExperimentConfig manifest_config(const std::string& manifest_path) {
  const json m = json::parse(read_file(manifest_path));
  return parse_config_text(m.at("config").get<std::string>());
}

}  // namespace

RunPaths run_paths(const std::string& output_dir) {
  const fs::path dir(output_dir);
  RunPaths p;
  p.dir = dir.string();
  p.manifest = (dir / "manifest.json").string();
  p.metrics = (dir / "metrics.jsonl").string();
  p.checkpoint = (dir / "checkpoint.json").string();
  p.summary = (dir / "summary.csv").string();
  p.plots_dir = (dir / "plots").string();
  return p;
}

Dataset subset(const Dataset& ds, const std::vector<Eigen::Index>& idx) {
  Dataset out;
  out.class_count = ds.class_count;
  const Eigen::Index n = ds.size();
  out.labels.resize(static_cast<Eigen::Index>(idx.size()));
  if (ds.complex_inputs()) {
    out.states.reserve(idx.size());
  } else {
    out.inputs.resize(static_cast<Eigen::Index>(idx.size()), ds.inputs.cols());
  }
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= n)
      throw std::out_of_range("subset: index out of range");
    out.labels[static_cast<Eigen::Index>(i)] = ds.labels[idx[i]];
    if (ds.complex_inputs())
      out.states.push_back(ds.states[static_cast<size_t>(idx[i])]);
    else
      out.inputs.row(static_cast<Eigen::Index>(i)) = ds.inputs.row(idx[i]);
  }
  return out;
}

Model build_model(const ExperimentConfig& cfg, Eigen::Index input_dim,
                  int class_count) {
  const std::uint64_t init_seed =
      Rng(cfg.experiment.seed).fork(streams::kModelInit).next_u64();
  if (cfg.model.kind == "qnn") {
    const CircuitSpec spec = build_circuit(layout_from_name(cfg.model.layout),
                                           cfg.model.n_qubits, cfg.model.depth);
    const InitScheme scheme = cfg.model.init == "uniform_0_2pi"
                                  ? InitScheme::Uniform0To2Pi
                                  : InitScheme::UniformPm01;
    QnnModel q;
    q.circuit = spec;
    q.params = init_params(spec, scheme, init_seed);
    if (cfg.model.readout == "logprob_top10") {
      q.readout.kind = ReadoutKind::LogProbTop10;
    } else {
      q.readout.kind = ReadoutKind::ZQubitSigmoid;
      q.readout.qubit = cfg.model.readout_qubit < 0 ? cfg.model.n_qubits - 1
                                                    : cfg.model.readout_qubit;
      q.readout.scale = cfg.model.logit_scale;
    }
    return q;
  }
  MLPSpec spec;
  spec.input = static_cast<int>(input_dim);
  spec.hidden = cfg.model.hidden;
  spec.output = class_count == 2 ? 1 : class_count;
  spec.act = activation_from_name(cfg.model.activation);
  spec.with_bias = cfg.model.with_bias;
  return MlpModel{spec, mlp_init(spec, init_seed)};
}

TaskSource make_task_source(const ExperimentConfig& cfg) {
  const auto& st = cfg.stream;
  const std::string& kind = cfg.experiment.kind;
  const int T = cfg.experiment.tasks;
  const std::uint64_t seed = cfg.experiment.seed;

  if (kind == "xxz") {
    XxzConfig xc;
    xc.L = st.L;
    xc.delta_start = st.delta_start;
    xc.delta_stop = st.delta_stop;
    xc.delta_step = st.delta_step;
    xc.samples_per_task = st.samples_per_task;
    if (!st.cache.empty() && fs::exists(st.cache)) {
      auto tasks = std::make_shared<std::vector<TaskData>>(
          load_xxz_cache(st.cache, 1 << st.L));
      if (static_cast<int>(tasks->size()) < T)
        throw std::runtime_error("xxz cache holds fewer tasks than requested");
      return {T, [tasks](int t) { return tasks->at(static_cast<size_t>(t)); }};
    }
    auto stream = std::make_shared<XxzStream>(xc, T, seed);
    return {T, [stream](int t) { return stream->task(t); }};
  }

  Dataset train, test;
  if (st.source == "synthetic") {
    Rng base = Rng(seed).fork(streams::kTaskData);
    const Dataset all =
        synthetic_prototypes(st.classes, st.dim, st.train_per_class + st.test_per_class,
                             st.noise, base.next_u64());
    const Eigen::Index cut =
        static_cast<Eigen::Index>(st.classes) * st.train_per_class;
    train = slice_rows(all, 0, cut);
    test = slice_rows(all, cut, all.size());
  } else if (st.source == "idx") {
    train = load_idx(st.train_images, st.train_labels);
    test = load_idx(st.test_images, st.test_labels);
  } else if (st.source == "cifar100") {
    train = load_cifar100_binary(st.train_file);
    test = load_cifar100_binary(st.test_file);
    if (st.grayscale) {
      train = gray_dataset(train);
      test = gray_dataset(test);
    }
  } else {
    throw std::invalid_argument("make_task_source: unsupported source " + st.source);
  }
  if (st.normalize) {
    train = l2_normalize_inputs(train);
    test = l2_normalize_inputs(test);
  }

  if (kind == "permuted") {
    auto s = std::make_shared<PermutedStream>(std::move(train), std::move(test), T, seed);
    return {T, [s](int t) { return s->task(t); }};
  }
  if (kind == "split_pairs") {
    auto s = std::make_shared<SplitPairStream>(std::move(train), std::move(test), T, seed);
    return {T, [s](int t) { return s->task(t); }};
  }
  throw std::invalid_argument("make_task_source: unsupported experiment kind " + kind);
}

void run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  validate_config(cfg);
  if (cfg.experiment.kind == "theory")
    throw std::invalid_argument("theory configs run through verify-theory");

  const RunPaths paths = run_paths(cfg.experiment.output_dir);
  fs::create_directories(paths.dir);
  const std::string canonical = serialize_config(cfg);

  ojson manifest;
  bool resuming = false;
  if (fs::exists(paths.manifest)) {
    manifest = ojson::parse(read_file(paths.manifest));
    if (manifest.at("config").get<std::string>() != canonical)
      throw std::runtime_error("output_dir holds a different experiment: " + paths.dir);
    if (manifest.at("status").get<std::string>() == "complete") {
      write_summary(paths.dir);
      write_plots(paths.dir);
      return;
    }
    resuming = true;
  } else {
    manifest["code_version"] = kCodeVersion;
    manifest["config"] = canonical;
    manifest["started_at"] = now_utc();
    manifest["finished_at"] = "";
    manifest["status"] = "running";
    manifest["tasks_total"] = cfg.experiment.tasks;
    atomic_write(paths.manifest, manifest.dump(2) + "\n");
  }

  const TaskSource source = make_task_source(cfg);
  const TaskData first = source.task(0);
  Model model = build_model(cfg, feature_width(first.train), first.train.class_count);
  (void)model_logits(model, first.train, 0);  // surfaces shape mismatches up front
  AdamState adam = AdamState::zeros(model_param_count(model));

  int tasks_done = 0;
  if (resuming && fs::exists(paths.checkpoint))
    load_checkpoint(paths.checkpoint, model, adam, tasks_done);
  if (resuming) {
    auto rows = read_lines(paths.metrics);
    if (static_cast<int>(rows.size()) < tasks_done)
      throw std::runtime_error("metrics log is behind the checkpoint in " + paths.dir);
    rows.resize(static_cast<size_t>(tasks_done));
    std::string joined;
    for (const auto& r : rows) joined += r + "\n";
    atomic_write(paths.metrics, joined);
  }

  Rng probe_rng = Rng(cfg.experiment.seed).fork(streams::kProbe);
  const Dataset probe = pick(first.train, probe_rng, cfg.metrics.probe_size);

  TrainConfig tc;
  tc.learning_rate = cfg.train.learning_rate;
  tc.batch_size = cfg.train.batch_size;
  tc.epochs = cfg.train.epochs;
  tc.reset = cfg.train.optimizer_reset == "per_task" ? OptimizerReset::PerTask
                                                     : OptimizerReset::Never;
  tc.seed = cfg.experiment.seed;

  const int total = source.task_count;
  const int stop =
      opt.stop_after_tasks < 0 ? total : std::min(total, opt.stop_after_tasks);

  std::ofstream metrics_out(paths.metrics, std::ios::binary | std::ios::app);
  if (!metrics_out) throw std::runtime_error("cannot append to " + paths.metrics);

  for (int t = tasks_done; t < stop; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const TaskData td = t == 0 ? first : source.task(t);
    const TaskMetrics tm = train_task(model, adam, td, tc, t);

    MetricsRecord rec;
    rec.task_index = t;
    rec.train_accuracy = tm.train_accuracy;
    rec.test_accuracy = tm.test_accuracy;
    if (cfg.metrics.eval_subsample > 0) {
      Rng er = Rng(cfg.experiment.seed)
                   .fork(streams::kEvalSubsample)
                   .fork(static_cast<std::uint64_t>(t));
      rec.train_accuracy = evaluate(model, pick(td.train, er, cfg.metrics.eval_subsample));
      rec.test_accuracy = evaluate(model, pick(td.test, er, cfg.metrics.eval_subsample));
    }
    rec.weight_norm = weight_l2(model);
    rec.grad_norm = tm.mean_grad_norm;
    rec.fim_trace = fim_trace_empirical(model, probe);
    rec.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    metrics_out << metrics_row(rec).dump() << "\n";
    metrics_out.flush();
    if (!metrics_out) throw std::runtime_error("write failed for " + paths.metrics);
    save_checkpoint(paths.checkpoint, model, adam, t + 1);

    if (!opt.quiet) {
      char line[192];
      std::snprintf(line, sizeof(line),
                    "task %4d/%d  train %.4f  test %.4f  |w| %.5g  |g| %.4g  "
                    "tr(F) %.4g  %.2fs",
                    t + 1, total, rec.train_accuracy, rec.test_accuracy,
                    rec.weight_norm, rec.grad_norm, rec.fim_trace,
                    rec.wall_time_seconds);
      std::cout << line << std::endl;
    }
  }
  metrics_out.close();

  if (stop == total) {
    manifest["status"] = "complete";
    manifest["finished_at"] = now_utc();
    atomic_write(paths.manifest, manifest.dump(2) + "\n");
    write_summary(paths.dir);
    write_plots(paths.dir);
  }
}

std::vector<MetricsRecord> read_metrics_jsonl(const std::string& path) {
  std::vector<MetricsRecord> out;
  for (const auto& line : read_lines(path)) {
    const json j = json::parse(line);
    MetricsRecord r;
    r.task_index = j.at("task_index").get<int>();
    r.train_accuracy = j.at("train_accuracy").get<double>();
    r.test_accuracy = j.at("test_accuracy").get<double>();
    r.weight_norm = j.at("weight_norm").get<double>();
    r.grad_norm = j.at("grad_norm").get<double>();
    r.fim_trace = j.at("fim_trace").get<double>();
    r.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    out.push_back(r);
  }
  return out;
}

void write_summary(const std::string& run_dir) {
  const RunPaths paths = run_paths(run_dir);
  const ExperimentConfig cfg = manifest_config(paths.manifest);
  const auto recs = read_metrics_jsonl(paths.metrics);
  const Eigen::Index n = static_cast<Eigen::Index>(recs.size());
  if (n == 0) throw std::runtime_error("no metric records in " + paths.metrics);

  Eigen::VectorXd acc(n), wn(n), gn(n), fim(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    acc[i] = recs[static_cast<size_t>(i)].test_accuracy;
    wn[i] = recs[static_cast<size_t>(i)].weight_norm;
    gn[i] = recs[static_cast<size_t>(i)].grad_norm;
    fim[i] = recs[static_cast<size_t>(i)].fim_trace;
  }

  const int bw = std::min<int>(cfg.metrics.baseline_window, static_cast<int>(n));
  const auto rel = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const double base = v.head(bw).mean();
    return base != 0.0 ? Eigen::VectorXd(v / base) : v;
  };
  const Eigen::VectorXd rel_w = rel(wn);
  const Eigen::VectorXd rel_g = rel(gn);

  AccuracyDrop drop;
  if (n >= 20) drop = accuracy_drop(acc, static_cast<int>(n));
  SlopeFit fit;
  if (n >= 3) fit = slope_pvalue(acc);

  std::ostringstream csv;
  csv << "path,records,initial_accuracy,final_accuracy,accuracy_drop,"
         "drop_rate_per_100,slope_per_task,p_value,final_rel_weight_norm,"
         "final_rel_grad_norm,mean_fim_trace\n";
  csv << paths.metrics << "," << n << "," << fmt17(acc[0]) << ","
      << fmt17(acc[n - 1]) << "," << fmt17(drop.drop) << ","
      << fmt17(drop.rate_per_100) << "," << fmt17(fit.slope) << ","
      << fmt17(fit.p_value) << "," << fmt17(rel_w[n - 1]) << ","
      << fmt17(rel_g[n - 1]) << "," << fmt17(fim.mean()) << "\n";
  atomic_write(paths.summary, csv.str());
}

void write_plots(const std::string& run_dir) {
  const RunPaths paths = run_paths(run_dir);
  const ExperimentConfig cfg = manifest_config(paths.manifest);
  const auto recs = read_metrics_jsonl(paths.metrics);
  const Eigen::Index n = static_cast<Eigen::Index>(recs.size());
  if (n == 0) throw std::runtime_error("no metric records in " + paths.metrics);

  Eigen::VectorXd acc(n), wn(n), gn(n), fim(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    acc[i] = recs[static_cast<size_t>(i)].test_accuracy;
    wn[i] = recs[static_cast<size_t>(i)].weight_norm;
    gn[i] = recs[static_cast<size_t>(i)].grad_norm;
    fim[i] = recs[static_cast<size_t>(i)].fim_trace;
  }
  const int bw = std::min<int>(cfg.metrics.baseline_window, static_cast<int>(n));
  const auto rel = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const double base = v.head(bw).mean();
    return base != 0.0 ? Eigen::VectorXd(v / base) : v;
  };

  fs::create_directories(paths.plots_dir);
  const auto emit = [&](const std::string& name, const std::string& title,
                        const std::string& ylab, const Eigen::VectorXd& v) {
    const PlotSeries s = compute_plot_series(v, cfg.metrics.window);
    atomic_write((fs::path(paths.plots_dir) / name).string(),
                 render_line_plot(title, ylab, s));
  };
  emit("test_accuracy.svg", "Test accuracy per task", "accuracy", acc);
  emit("rel_weight_norm.svg", "Relative weight norm", "norm / baseline", rel(wn));
  emit("rel_grad_norm.svg", "Relative gradient norm", "norm / baseline", rel(gn));
  emit("fim_trace.svg", "Empirical FIM trace on the probe", "trace", fim);
}

void write_multi_plot(const std::vector<std::string>& jsonl_paths,
                      const std::string& metric, int window,
                      const std::vector<std::string>& labels,
                      const std::string& out_svg) {
  if (jsonl_paths.empty()) throw std::invalid_argument("write_multi_plot: no inputs");
  if (!labels.empty() && labels.size() != jsonl_paths.size())
    throw std::invalid_argument("write_multi_plot: label count mismatch");
  std::vector<NamedSeries> series;
  for (size_t k = 0; k < jsonl_paths.size(); ++k) {
    const auto recs = read_metrics_jsonl(jsonl_paths[k]);
    if (recs.empty())
      throw std::runtime_error("no metric records in " + jsonl_paths[k]);
    Eigen::VectorXd v(static_cast<Eigen::Index>(recs.size()));
    for (size_t i = 0; i < recs.size(); ++i) {
      const MetricsRecord& r = recs[i];
      double x = 0.0;
      if (metric == "train_accuracy") x = r.train_accuracy;
      else if (metric == "test_accuracy") x = r.test_accuracy;
      else if (metric == "weight_norm") x = r.weight_norm;
      else if (metric == "grad_norm") x = r.grad_norm;
      else if (metric == "fim_trace") x = r.fim_trace;
      else throw std::invalid_argument("unknown metric: " + metric);
      v[static_cast<Eigen::Index>(i)] = x;
    }
    std::string label = labels.empty()
                            ? fs::path(jsonl_paths[k]).parent_path().filename().string()
                            : labels[k];
    if (label.empty()) label = "series " + std::to_string(k + 1);
    series.push_back({label, compute_plot_series(v, window)});
  }
  atomic_write(out_svg, render_line_plot(metric, metric, series));
}

namespace {

// File-name-safe %g rendering of a scale factor (1.5 -> "1p5", -2 -> "m2").
std::string number_tag(double v) {
  char b[32];
  std::snprintf(b, sizeof(b), "%g", v);
  std::string s(b);
  for (auto& c : s) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
  }
  return s;
}

}  // namespace

bool run_verify_theory(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.experiment.kind != "theory")
    throw std::invalid_argument("verify-theory needs experiment.kind = theory");
  const auto& th = cfg.theory;
  const RunPaths paths = run_paths(cfg.experiment.output_dir);
  fs::create_directories(paths.dir);

  bool all_ok = true;
  const auto verdict = [](bool ok) { return ok ? "PASS" : "FAIL"; };

  const CircuitSpec spec = build_circuit(LayoutKind::HeaRing, th.n_qubits, th.depth);
  for (double scale : th.scales) {
    BoundsOptions bo;
    bo.n_samples = th.n_samples;
    bo.seed = cfg.experiment.seed;
    bo.readout_qubit = 0;
    bo.zero_input = false;
    const BoundsReport rep = qnn_bounds_check(spec, scale, bo);
    all_ok = all_ok && rep.all_ok();
    char line[256];
    std::snprintf(line, sizeof(line),
                  "bounds scale=%g: %s  (max|f| %.6g <= %.6g, max|df| %.6g <= %.6g, "
                  "max tr %.6g <= %.6g, xi in [%.6g, %.6g])",
                  scale, verdict(rep.all_ok()), rep.observed_max_abs_logit,
                  rep.logit_ceiling, rep.observed_max_abs_grad, rep.grad_ceiling,
                  rep.observed_max_fim_trace, rep.trace_ceiling, rep.observed_xi_min,
                  rep.observed_xi_max);
    std::cout << line << std::endl;
    const std::string fname = "bounds_scale_" + number_tag(scale) + ".json";
    atomic_write((fs::path(paths.dir) / fname).string(), bounds_report_to_json(rep));
  }

  {
    Rng data_rng = Rng(cfg.experiment.seed).fork(streams::kTaskData);
    const int per_class = std::max(1, th.collapse_samples / 2);
    const Dataset ds = synthetic_prototypes(2, th.collapse_dim, per_class,
                                            cfg.stream.noise, data_rng.next_u64());
    MLPSpec ms;
    ms.input = th.collapse_dim;
    ms.hidden = {th.collapse_width};
    ms.output = 1;
    ms.act = Activation::Relu;
    ms.with_bias = false;
    const std::uint64_t init_seed =
        Rng(cfg.experiment.seed).fork(streams::kModelInit).next_u64();
    Model model = MlpModel{ms, mlp_init(ms, init_seed)};
    AdamState adam = AdamState::zeros(model_param_count(model));
    TrainConfig tc;
    tc.learning_rate = cfg.train.learning_rate;
    tc.batch_size = cfg.train.batch_size;
    tc.epochs = th.collapse_epochs;
    tc.reset = OptimizerReset::Never;
    tc.seed = cfg.experiment.seed;
    TaskData task{ds, ds};
    const TaskMetrics tm = train_task(model, adam, task, tc, 0);

    const ScaleSweepResult sweep =
        classical_collapse_sweep(std::get<MlpModel>(model), ds, th.lambdas);
    bool saturated_seen = false;
    bool monotone = true;
    double prev = 0.0;
    for (const auto& pt : sweep) {
      if (pt.mean_abs_logit <= 4.0) continue;
      if (saturated_seen && !(pt.fim_trace < prev)) monotone = false;
      saturated_seen = true;
      prev = pt.fim_trace;
    }
    const bool ok = saturated_seen && monotone && tm.train_accuracy >= 0.95;
    all_ok = all_ok && ok;
    char line[256];
    std::snprintf(line, sizeof(line),
                  "collapse: %s  (train acc %.4f, %zu scales, saturated tail "
                  "%sdecreasing)",
                  verdict(ok), tm.train_accuracy, sweep.size(),
                  monotone && saturated_seen ? "" : "NOT ");
    std::cout << line << std::endl;
    atomic_write((fs::path(paths.dir) / "collapse_sweep.json").string(),
                 scale_sweep_to_json(sweep));
  }

  // Slot n_qubits is the first Ry of the ring layout; the CRX angles before
  // it see a |0> control on the all-zeros input and have zero gradient.
  const int haar_k =
      th.haar_param_index >= 0 ? th.haar_param_index : th.n_qubits;
  for (int depth : th.haar_depths) {
    const CircuitSpec hs_spec = build_circuit(LayoutKind::HeaRing, th.n_qubits, depth);
    const HaarStats hs = haar_gradient_stats(hs_spec, haar_k, th.haar_samples,
                                             th.haar_offset, cfg.experiment.seed);
    const double diff = std::abs(hs.mean_sq - hs.mean_sq_shifted);
    const double tol =
        3.0 * std::sqrt(hs.stderr_mean * hs.stderr_mean +
                        hs.stderr_shifted * hs.stderr_shifted) +
        1e-9;
    const bool ok = diff <= tol;
    all_ok = all_ok && ok;
    char line[256];
    std::snprintf(line, sizeof(line),
                  "haar depth=%d: %s  (E[g^2] %.6g +/- %.2g vs shifted %.6g +/- "
                  "%.2g)",
                  depth, verdict(ok), hs.mean_sq, hs.stderr_mean, hs.mean_sq_shifted,
                  hs.stderr_shifted);
    std::cout << line << std::endl;
    char name[64];
    std::snprintf(name, sizeof(name), "haar_depth_%d.json", depth);
    atomic_write((fs::path(paths.dir) / name).string(), haar_stats_to_json(hs));
  }

  std::cout << "overall: " << verdict(all_ok) << std::endl;
  return all_ok;
}

namespace {

CircuitSpec random_gradcheck_circuit(Rng& rng, int n_qubits, int depth,
                                     bool rotations_only) {
  CircuitSpec spec;
  spec.n_qubits = n_qubits;
  spec.depth = depth;
  spec.layout = LayoutKind::Brickwall;
  int slot = 0;
  for (int d = 0; d < depth; ++d) {
    for (int g = 0; g < n_qubits; ++g) {
      static constexpr std::array<GateKind, 4> kAll = {GateKind::Su4, GateKind::Ry,
                                                       GateKind::Rz, GateKind::Crx};
      GatePlacement pl;
      pl.kind = rotations_only
                    ? (rng.bounded(2) == 0 ? GateKind::Ry : GateKind::Rz)
                    : kAll[static_cast<size_t>(rng.bounded(4))];
      if (gate_arity(pl.kind) == 1) {
        pl.qubits = {static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n_qubits))),
                     -1};
      } else {
        const int qa =
            static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n_qubits)));
        int qb =
            static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n_qubits - 1)));
        if (qb >= qa) ++qb;
        pl.qubits = {qa, qb};
      }
      pl.slot = slot;
      slot += gate_param_count(pl.kind);
      spec.gates.push_back(pl);
    }
  }
  spec.param_count = slot;
  return spec;
}

QState random_input_state(Rng& rng, int n_qubits) {
  Eigen::VectorXcd amps(Eigen::Index(1) << n_qubits);
  for (Eigen::Index b = 0; b < amps.size(); ++b)
    amps[b] = std::complex<double>(rng.normal(), rng.normal());
  amps /= amps.norm();
  return encode_complex(amps, n_qubits);
}

}  // namespace

GradcheckReport run_gradcheck(int n_circuits, std::uint64_t seed, bool verbose) {
  if (n_circuits < 1)
    throw std::invalid_argument("run_gradcheck: n_circuits must be >= 1");
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  GradcheckReport rep;
  rep.circuits = n_circuits;
  rep.ok = true;
  const Rng root(seed);

  for (int i = 0; i < n_circuits; ++i) {
    Rng rng = root.fork(static_cast<std::uint64_t>(i));
    const int readout_sel = i % 3;
    // the 10-outcome readout needs at least 10 amplitudes, so 4 qubits
    const int n_qubits = readout_sel == 1 ? 4 : 2 + static_cast<int>(rng.bounded(3));
    const int depth = 1 + static_cast<int>(rng.bounded(3));

    CotangentSpec cot;
    if (readout_sel == 0) {
      cot.kind = CotangentSpec::Kind::BceZLogit;
      cot.qubit = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n_qubits)));
      cot.scale = 1.0 + rng.uniform();
      cot.label = static_cast<int>(rng.bounded(2));
    } else if (readout_sel == 1) {
      cot.kind = CotangentSpec::Kind::CceLogProbTop10;
      cot.label = static_cast<int>(rng.bounded(10));
    } else {
      cot.kind = CotangentSpec::Kind::RawZLogit;
      cot.qubit = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n_qubits)));
      cot.scale = 1.0 + rng.uniform();
    }

    {
      const CircuitSpec spec = random_gradcheck_circuit(rng, n_qubits, depth, false);
      const ParamVector params = rng.uniform_vector(spec.param_count, 0.0, kTwoPi);
      const QState input = random_input_state(rng, n_qubits);
      Eigen::VectorXd g_adj;
      adjoint_gradient(spec, params, input, cot, g_adj);
      const auto f = [&](const Eigen::VectorXd& p) {
        return circuit_loss(spec, p, input, cot);
      };
      const Eigen::VectorXd g_fd = finite_diff_gradient(f, params, 1e-5);
      for (Eigen::Index k = 0; k < g_adj.size(); ++k) {
        if (std::abs(g_adj[k]) <= 1e-8) continue;
        const double rel = std::abs(g_adj[k] - g_fd[k]) /
                           std::max(std::abs(g_adj[k]), std::abs(g_fd[k]));
        rep.max_fd_rel_err = std::max(rep.max_fd_rel_err, rel);
        if (rel >= 1e-5) {
          rep.ok = false;
          if (verbose) {
            char line[160];
            std::snprintf(line, sizeof(line),
                          "circuit %d param %ld: adjoint %.12g vs fd %.12g "
                          "(rel %.3g)",
                          i, static_cast<long>(k), g_adj[k], g_fd[k], rel);
            std::cout << line << std::endl;
          }
        }
      }
    }

    {
      const CircuitSpec spec = random_gradcheck_circuit(rng, n_qubits, depth, true);
      const ParamVector params = rng.uniform_vector(spec.param_count, 0.0, kTwoPi);
      const QState input = random_input_state(rng, n_qubits);
      Eigen::VectorXd g_adj, g_ps;
      adjoint_gradient(spec, params, input, cot, g_adj);
      parameter_shift_gradient(spec, params, input, cot, g_ps);
      const double diff = (g_adj - g_ps).cwiseAbs().maxCoeff();
      rep.max_shift_abs_diff = std::max(rep.max_shift_abs_diff, diff);
      if (diff >= 1e-8) {
        rep.ok = false;
        if (verbose) {
          char line[128];
          std::snprintf(line, sizeof(line),
                        "circuit %d: adjoint vs shift rule differ by %.3g", i, diff);
          std::cout << line << std::endl;
        }
      }
    }
  }

  if (verbose) {
    char line[192];
    std::snprintf(line, sizeof(line),
                  "gradcheck: %d circuits, max fd rel err %.3g, max shift diff "
                  "%.3g -> %s",
                  rep.circuits, rep.max_fd_rel_err, rep.max_shift_abs_diff,
                  rep.ok ? "PASS" : "FAIL");
    std::cout << line << std::endl;
  }
  return rep;
}

void run_gen_xxz(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.stream.source != "xxz")
    throw std::invalid_argument("gen-xxz needs stream.source = xxz");
  if (cfg.stream.cache.empty())
    throw std::invalid_argument("gen-xxz needs stream.cache set");
  XxzConfig xc;
  xc.L = cfg.stream.L;
  xc.delta_start = cfg.stream.delta_start;
  xc.delta_stop = cfg.stream.delta_stop;
  xc.delta_step = cfg.stream.delta_step;
  xc.samples_per_task = cfg.stream.samples_per_task;
  const XxzStream stream(xc, cfg.experiment.tasks, cfg.experiment.seed);
  const fs::path out(cfg.stream.cache);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_xxz_cache(stream, cfg.stream.cache);
  std::cout << "wrote " << cfg.experiment.tasks << " tasks ("
            << cfg.stream.samples_per_task << " points each, L=" << cfg.stream.L
            << ") to " << cfg.stream.cache << std::endl;
}

}  // namespace qcl
