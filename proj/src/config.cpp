// SPDX-License-Identifier: Apache-2.0
#include "qcl/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace qcl {

namespace {

struct Value {
  enum class Type { String, Bool, Int, Float, Array } type;
  std::string s;
  bool b = false;
  long long i = 0;
  unsigned long long u = 0;    // carries values above LLONG_MAX
  bool oversized = false;      // true when only `u` holds the value
  double f = 0.0;
  std::vector<Value> items;
};

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " + msg);
}

// Strips an unquoted trailing comment.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

Value parse_scalar(const std::string& raw, int line) {
  const std::string t = trim(raw);
  if (t.empty()) fail(line, "empty value");
  Value v;
  if (t.front() == '"') {
    if (t.size() < 2 || t.back() != '"') fail(line, "unterminated string");
    v.type = Value::Type::String;
    std::string out;
    for (size_t i = 1; i + 1 < t.size(); ++i) {
      if (t[i] == '\\' && i + 2 < t.size() && (t[i + 1] == '"' || t[i + 1] == '\\')) {
        out.push_back(t[i + 1]);
        ++i;
      } else if (t[i] == '"') {
        fail(line, "unescaped quote inside string");
      } else {
        out.push_back(t[i]);
      }
    }
    v.s = out;
    return v;
  }
  if (t == "true" || t == "false") {
    v.type = Value::Type::Bool;
    v.b = t == "true";
    return v;
  }
  {
    long long i = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), i);
    if (res.ec == std::errc() && res.ptr == t.data() + t.size()) {
      v.type = Value::Type::Int;
      v.i = i;
      v.u = i >= 0 ? static_cast<unsigned long long>(i) : 0;
      return v;
    }
    if (t.front() != '-') {
      unsigned long long big = 0;
      const auto ures = std::from_chars(t.data(), t.data() + t.size(), big);
      if (ures.ec == std::errc() && ures.ptr == t.data() + t.size()) {
        v.type = Value::Type::Int;
        v.u = big;
        v.oversized = true;
        return v;
      }
    }
  }
  {
    char* end = nullptr;
    const double f = std::strtod(t.c_str(), &end);
    if (end == t.c_str() + t.size()) {
      v.type = Value::Type::Float;
      v.f = f;
      return v;
    }
  }
  fail(line, "cannot parse value: " + t);
}

Value parse_value(const std::string& raw, int line) {
  const std::string t = trim(raw);
  if (t.empty()) fail(line, "empty value");
  if (t.front() != '[') return parse_scalar(t, line);
  if (t.back() != ']') fail(line, "unterminated array");
  Value v;
  v.type = Value::Type::Array;
  const std::string body = t.substr(1, t.size() - 2);
  std::string cur;
  bool in_str = false;
  for (char c : body) {
    if (c == '"') in_str = !in_str;
    if (c == ',' && !in_str) {
      v.items.push_back(parse_scalar(cur, line));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty()) v.items.push_back(parse_scalar(cur, line));
  return v;
}

using Setter = std::function<void(ExperimentConfig&, const Value&, int line)>;

void expect(bool ok, int line, const std::string& msg) {
  if (!ok) fail(line, msg);
}

template <typename Sub, typename T>
Setter make_setter(Sub ExperimentConfig::*sub, T Sub::*field) {
  return [sub, field](ExperimentConfig& c, const Value& v, int line) {
    Sub& s = c.*sub;
    if constexpr (std::is_same_v<T, std::string>) {
      expect(v.type == Value::Type::String, line, "expected a string");
      s.*field = v.s;
    } else if constexpr (std::is_same_v<T, bool>) {
      expect(v.type == Value::Type::Bool, line, "expected true/false");
      s.*field = v.b;
    } else if constexpr (std::is_same_v<T, int>) {
      expect(v.type == Value::Type::Int && !v.oversized, line, "expected an integer");
      s.*field = static_cast<int>(v.i);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      expect(v.type == Value::Type::Int && (v.oversized || v.i >= 0), line,
             "expected a non-negative integer");
      s.*field = static_cast<std::uint64_t>(v.u);
    } else if constexpr (std::is_same_v<T, double>) {
      expect(v.type == Value::Type::Float || v.type == Value::Type::Int, line,
             "expected a number");
      s.*field = v.type == Value::Type::Float ? v.f
                 : v.oversized               ? double(v.u)
                                             : double(v.i);
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      expect(v.type == Value::Type::Array, line, "expected an array");
      std::vector<int> out;
      for (const auto& item : v.items) {
        expect(item.type == Value::Type::Int && !item.oversized, line,
               "expected integer array");
        out.push_back(static_cast<int>(item.i));
      }
      s.*field = out;
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      expect(v.type == Value::Type::Array, line, "expected an array");
      std::vector<double> out;
      for (const auto& item : v.items) {
        expect(item.type == Value::Type::Float || item.type == Value::Type::Int, line,
               "expected numeric array");
        out.push_back(item.type == Value::Type::Float ? item.f
                      : item.oversized               ? double(item.u)
                                                     : double(item.i));
      }
      s.*field = out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
  };
}

const std::map<std::string, Setter>& schema() {
  using C = ExperimentConfig;
  static const std::map<std::string, Setter> s = {
      {"experiment.kind", make_setter(&C::experiment, &C::Experiment::kind)},
      {"experiment.seed", make_setter(&C::experiment, &C::Experiment::seed)},
      {"experiment.tasks", make_setter(&C::experiment, &C::Experiment::tasks)},
      {"experiment.output_dir", make_setter(&C::experiment, &C::Experiment::output_dir)},
      {"model.kind", make_setter(&C::model, &C::ModelCfg::kind)},
      {"model.layout", make_setter(&C::model, &C::ModelCfg::layout)},
      {"model.n_qubits", make_setter(&C::model, &C::ModelCfg::n_qubits)},
      {"model.depth", make_setter(&C::model, &C::ModelCfg::depth)},
      {"model.init", make_setter(&C::model, &C::ModelCfg::init)},
      {"model.readout", make_setter(&C::model, &C::ModelCfg::readout)},
      {"model.readout_qubit", make_setter(&C::model, &C::ModelCfg::readout_qubit)},
      {"model.logit_scale", make_setter(&C::model, &C::ModelCfg::logit_scale)},
      {"model.hidden", make_setter(&C::model, &C::ModelCfg::hidden)},
      {"model.activation", make_setter(&C::model, &C::ModelCfg::activation)},
      {"model.with_bias", make_setter(&C::model, &C::ModelCfg::with_bias)},
      {"train.learning_rate", make_setter(&C::train, &C::Train::learning_rate)},
      {"train.batch_size", make_setter(&C::train, &C::Train::batch_size)},
      {"train.epochs", make_setter(&C::train, &C::Train::epochs)},
      {"train.optimizer_reset", make_setter(&C::train, &C::Train::optimizer_reset)},
      {"stream.source", make_setter(&C::stream, &C::Stream::source)},
      {"stream.classes", make_setter(&C::stream, &C::Stream::classes)},
      {"stream.dim", make_setter(&C::stream, &C::Stream::dim)},
      {"stream.train_per_class", make_setter(&C::stream, &C::Stream::train_per_class)},
      {"stream.test_per_class", make_setter(&C::stream, &C::Stream::test_per_class)},
      {"stream.noise", make_setter(&C::stream, &C::Stream::noise)},
      {"stream.train_images", make_setter(&C::stream, &C::Stream::train_images)},
      {"stream.train_labels", make_setter(&C::stream, &C::Stream::train_labels)},
      {"stream.test_images", make_setter(&C::stream, &C::Stream::test_images)},
      {"stream.test_labels", make_setter(&C::stream, &C::Stream::test_labels)},
      {"stream.train_file", make_setter(&C::stream, &C::Stream::train_file)},
      {"stream.test_file", make_setter(&C::stream, &C::Stream::test_file)},
      {"stream.grayscale", make_setter(&C::stream, &C::Stream::grayscale)},
      {"stream.normalize", make_setter(&C::stream, &C::Stream::normalize)},
      {"stream.L", make_setter(&C::stream, &C::Stream::L)},
      {"stream.delta_start", make_setter(&C::stream, &C::Stream::delta_start)},
      {"stream.delta_stop", make_setter(&C::stream, &C::Stream::delta_stop)},
      {"stream.delta_step", make_setter(&C::stream, &C::Stream::delta_step)},
      {"stream.samples_per_task", make_setter(&C::stream, &C::Stream::samples_per_task)},
      {"stream.cache", make_setter(&C::stream, &C::Stream::cache)},
      {"metrics.probe_size", make_setter(&C::metrics, &C::Metrics::probe_size)},
      {"metrics.window", make_setter(&C::metrics, &C::Metrics::window)},
      {"metrics.baseline_window", make_setter(&C::metrics, &C::Metrics::baseline_window)},
      {"metrics.eval_subsample", make_setter(&C::metrics, &C::Metrics::eval_subsample)},
      {"theory.n_qubits", make_setter(&C::theory, &C::Theory::n_qubits)},
      {"theory.depth", make_setter(&C::theory, &C::Theory::depth)},
      {"theory.scales", make_setter(&C::theory, &C::Theory::scales)},
      {"theory.n_samples", make_setter(&C::theory, &C::Theory::n_samples)},
      {"theory.lambdas", make_setter(&C::theory, &C::Theory::lambdas)},
      {"theory.collapse_width", make_setter(&C::theory, &C::Theory::collapse_width)},
      {"theory.collapse_dim", make_setter(&C::theory, &C::Theory::collapse_dim)},
      {"theory.collapse_samples", make_setter(&C::theory, &C::Theory::collapse_samples)},
      {"theory.collapse_epochs", make_setter(&C::theory, &C::Theory::collapse_epochs)},
      {"theory.haar_param_index",
       make_setter(&C::theory, &C::Theory::haar_param_index)},
      {"theory.haar_offset", make_setter(&C::theory, &C::Theory::haar_offset)},
      {"theory.haar_samples", make_setter(&C::theory, &C::Theory::haar_samples)},
      {"theory.haar_depths", make_setter(&C::theory, &C::Theory::haar_depths)},
  };
  return s;
}

const std::vector<std::string> kSections = {"experiment", "model", "train",
                                            "stream", "metrics", "theory"};

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& s : kSections) known = known || s == section;
      if (!known) fail(line_no, "unknown section [" + section + "]");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(line_no, "empty key");
    if (section.empty()) fail(line_no, "key outside any [section]");
    const std::string full = section + "." + key;
    const auto it = schema().find(full);
    if (it == schema().end()) fail(line_no, "unknown key " + full);
    it->second(cfg, parse_value(line.substr(eq + 1), line_no), line_no);
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Keep floats recognizable as floats across round trips.
  std::string s(buf);
  if (s.find_first_of(".eEnN") == std::string::npos) s += ".0";
  return s;
}

std::string fmt_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

template <typename T>
std::string fmt_array(const std::vector<T>& xs) {
  std::string out = "[";
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, double>) out += fmt_double(xs[i]);
    else out += std::to_string(xs[i]);
  }
  return out + "]";
}

}  // namespace

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[experiment]\n";
  o << "kind = " << fmt_string(c.experiment.kind) << "\n";
  o << "seed = " << c.experiment.seed << "\n";
  o << "tasks = " << c.experiment.tasks << "\n";
  o << "output_dir = " << fmt_string(c.experiment.output_dir) << "\n";
  o << "\n[model]\n";
  o << "kind = " << fmt_string(c.model.kind) << "\n";
  o << "layout = " << fmt_string(c.model.layout) << "\n";
  o << "n_qubits = " << c.model.n_qubits << "\n";
  o << "depth = " << c.model.depth << "\n";
  o << "init = " << fmt_string(c.model.init) << "\n";
  o << "readout = " << fmt_string(c.model.readout) << "\n";
  o << "readout_qubit = " << c.model.readout_qubit << "\n";
  o << "logit_scale = " << fmt_double(c.model.logit_scale) << "\n";
  o << "hidden = " << fmt_array(c.model.hidden) << "\n";
  o << "activation = " << fmt_string(c.model.activation) << "\n";
  o << "with_bias = " << (c.model.with_bias ? "true" : "false") << "\n";
  o << "\n[train]\n";
  o << "learning_rate = " << fmt_double(c.train.learning_rate) << "\n";
  o << "batch_size = " << c.train.batch_size << "\n";
  o << "epochs = " << c.train.epochs << "\n";
  o << "optimizer_reset = " << fmt_string(c.train.optimizer_reset) << "\n";
  o << "\n[stream]\n";
  o << "source = " << fmt_string(c.stream.source) << "\n";
  o << "classes = " << c.stream.classes << "\n";
  o << "dim = " << c.stream.dim << "\n";
  o << "train_per_class = " << c.stream.train_per_class << "\n";
  o << "test_per_class = " << c.stream.test_per_class << "\n";
  o << "noise = " << fmt_double(c.stream.noise) << "\n";
  o << "train_images = " << fmt_string(c.stream.train_images) << "\n";
  o << "train_labels = " << fmt_string(c.stream.train_labels) << "\n";
  o << "test_images = " << fmt_string(c.stream.test_images) << "\n";
  o << "test_labels = " << fmt_string(c.stream.test_labels) << "\n";
  o << "train_file = " << fmt_string(c.stream.train_file) << "\n";
  o << "test_file = " << fmt_string(c.stream.test_file) << "\n";
  o << "grayscale = " << (c.stream.grayscale ? "true" : "false") << "\n";
  o << "normalize = " << (c.stream.normalize ? "true" : "false") << "\n";
  o << "L = " << c.stream.L << "\n";
  o << "delta_start = " << fmt_double(c.stream.delta_start) << "\n";
  o << "delta_stop = " << fmt_double(c.stream.delta_stop) << "\n";
  o << "delta_step = " << fmt_double(c.stream.delta_step) << "\n";
  o << "samples_per_task = " << c.stream.samples_per_task << "\n";
  o << "cache = " << fmt_string(c.stream.cache) << "\n";
  o << "\n[metrics]\n";
  o << "probe_size = " << c.metrics.probe_size << "\n";
  o << "window = " << c.metrics.window << "\n";
  o << "baseline_window = " << c.metrics.baseline_window << "\n";
  o << "eval_subsample = " << c.metrics.eval_subsample << "\n";
  o << "\n[theory]\n";
  o << "n_qubits = " << c.theory.n_qubits << "\n";
  o << "depth = " << c.theory.depth << "\n";
  o << "scales = " << fmt_array(c.theory.scales) << "\n";
  o << "n_samples = " << c.theory.n_samples << "\n";
  o << "lambdas = " << fmt_array(c.theory.lambdas) << "\n";
  o << "collapse_width = " << c.theory.collapse_width << "\n";
  o << "collapse_dim = " << c.theory.collapse_dim << "\n";
  o << "collapse_samples = " << c.theory.collapse_samples << "\n";
  o << "collapse_epochs = " << c.theory.collapse_epochs << "\n";
  o << "haar_param_index = " << c.theory.haar_param_index << "\n";
  o << "haar_offset = " << fmt_double(c.theory.haar_offset) << "\n";
  o << "haar_samples = " << c.theory.haar_samples << "\n";
  o << "haar_depths = " << fmt_array(c.theory.haar_depths) << "\n";
  return o.str();
}

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("config: " + msg);
}

bool one_of(const std::string& v, std::initializer_list<const char*> opts) {
  for (const char* o : opts)
    if (v == o) return true;
  return false;
}

}  // namespace

void validate_config(const ExperimentConfig& c) {
  check(one_of(c.experiment.kind, {"permuted", "split_pairs", "xxz", "theory"}),
        "experiment.kind must be permuted, split_pairs, xxz, or theory");
  check(c.experiment.tasks >= 1, "experiment.tasks must be >= 1");
  check(!c.experiment.output_dir.empty(), "experiment.output_dir must be set");

  if (c.experiment.kind == "theory") {
    check(c.theory.n_qubits >= 2, "theory.n_qubits must be >= 2");
    check(c.theory.depth >= 1, "theory.depth must be >= 1");
    check(c.theory.n_samples >= 1, "theory.n_samples must be >= 1");
    check(!c.theory.scales.empty(), "theory.scales must be nonempty");
    check(!c.theory.lambdas.empty(), "theory.lambdas must be nonempty");
    check(c.theory.collapse_width >= 1 && c.theory.collapse_dim >= 1 &&
              c.theory.collapse_samples >= 2,
          "theory collapse shape must be positive");
    check(c.theory.haar_param_index >= -1,
          "theory.haar_param_index must be -1 (auto) or a slot index");
    check(c.theory.haar_samples >= 2, "theory.haar_samples must be >= 2");
    check(!c.theory.haar_depths.empty(), "theory.haar_depths must be nonempty");
    return;
  }

  check(one_of(c.model.kind, {"qnn", "mlp"}), "model.kind must be qnn or mlp");
  if (c.model.kind == "qnn") {
    check(one_of(c.model.layout, {"brickwall", "ladder", "hea_ring"}),
          "model.layout must be brickwall, ladder, or hea_ring");
    check(c.model.n_qubits >= 2, "model.n_qubits must be >= 2");
    check(c.model.depth >= 1, "model.depth must be >= 1");
    check(one_of(c.model.init, {"uniform_0_2pi", "uniform_pm0p1"}),
          "model.init must be uniform_0_2pi or uniform_pm0p1");
    check(one_of(c.model.readout, {"logprob_top10", "z_sigmoid"}),
          "model.readout must be logprob_top10 or z_sigmoid");
    check(c.model.readout_qubit >= -1 && c.model.readout_qubit < c.model.n_qubits,
          "model.readout_qubit out of range");
  } else {
    check(!c.model.hidden.empty(), "model.hidden must be nonempty");
    for (int h : c.model.hidden) check(h >= 1, "model.hidden widths must be positive");
    check(one_of(c.model.activation, {"relu", "sin"}),
          "model.activation must be relu or sin");
  }

  check(c.train.learning_rate >= 0.0, "train.learning_rate must be >= 0");
  check(c.train.batch_size >= 1, "train.batch_size must be >= 1");
  check(c.train.epochs >= 1, "train.epochs must be >= 1");
  check(one_of(c.train.optimizer_reset, {"never", "per_task"}),
        "train.optimizer_reset must be never or per_task");

  check(one_of(c.stream.source, {"synthetic", "idx", "cifar100", "xxz"}),
        "stream.source must be synthetic, idx, cifar100, or xxz");
  if (c.stream.source == "synthetic") {
    check(c.stream.classes >= 2, "stream.classes must be >= 2");
    check(c.stream.dim >= 1, "stream.dim must be >= 1");
    check(c.stream.train_per_class >= 1 && c.stream.test_per_class >= 1,
          "stream per-class sample counts must be >= 1");
    check(c.stream.noise >= 0.0, "stream.noise must be >= 0");
  } else if (c.stream.source == "idx") {
    check(!c.stream.train_images.empty() && !c.stream.train_labels.empty() &&
              !c.stream.test_images.empty() && !c.stream.test_labels.empty(),
          "stream idx paths must all be set");
  } else if (c.stream.source == "cifar100") {
    check(!c.stream.train_file.empty() && !c.stream.test_file.empty(),
          "stream cifar100 files must be set");
  } else {
    check(c.stream.L >= 2 && c.stream.L <= 14, "stream.L must be in [2, 14]");
    check(c.stream.delta_step > 0.0, "stream.delta_step must be > 0");
    check(c.stream.delta_stop >= c.stream.delta_start,
          "stream.delta_stop must be >= delta_start");
    check(c.stream.samples_per_task >= 4, "stream.samples_per_task must be >= 4");
  }

  const std::string kind = c.experiment.kind;
  if (kind == "xxz") check(c.stream.source == "xxz", "xxz experiments need stream.source = xxz");
  if (kind != "xxz") check(c.stream.source != "xxz", "stream.source xxz needs experiment.kind = xxz");

  // Model/stream pairing: class counts drive the readout and head shape.
  const bool binary = kind == "split_pairs" || kind == "xxz";
  if (c.model.kind == "qnn") {
    if (binary)
      check(c.model.readout == "z_sigmoid", "binary tasks need the z_sigmoid readout");
    else
      check(c.model.readout == "logprob_top10",
            "multiclass tasks need the logprob_top10 readout");
    if (!binary && c.stream.source == "synthetic")
      check(c.stream.classes == 10, "logprob_top10 needs a 10-class stream");
  }

  check(c.metrics.probe_size >= 1, "metrics.probe_size must be >= 1");
  check(c.metrics.window >= 1, "metrics.window must be >= 1");
  check(c.metrics.baseline_window >= 1, "metrics.baseline_window must be >= 1");
  check(c.metrics.eval_subsample >= 0, "metrics.eval_subsample must be >= 0");
}

}  // namespace qcl
