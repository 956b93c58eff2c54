// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qcl {

/// Flat key-value experiment description, TOML-shaped: [section] headers,
/// key = value lines, # comments. Values: quoted strings, integers, floats,
/// booleans, homogeneous [..] arrays. Unknown sections or keys are errors.
struct ExperimentConfig {
  struct Experiment {
    std::string kind = "permuted";  // permuted | split_pairs | xxz | theory
    std::uint64_t seed = 0;
    int tasks = 1;
    std::string output_dir = "runs/out";
    bool operator==(const Experiment&) const = default;
  } experiment;

  struct ModelCfg {
    std::string kind = "qnn";  // qnn | mlp
    // qnn
    std::string layout = "brickwall";  // brickwall | ladder | hea_ring
    int n_qubits = 6;
    int depth = 4;
    std::string init = "uniform_0_2pi";  // uniform_0_2pi | uniform_pm0p1
    std::string readout = "logprob_top10";  // logprob_top10 | z_sigmoid
    int readout_qubit = -1;  // -1 = last qubit
    double logit_scale = 1.0;
    // mlp
    std::vector<int> hidden = {16};
    std::string activation = "relu";  // relu | sin
    bool with_bias = true;
    bool operator==(const ModelCfg&) const = default;
  } model;

  struct Train {
    double learning_rate = 1e-3;
    int batch_size = 128;
    int epochs = 1;
    std::string optimizer_reset = "never";  // never | per_task
    bool operator==(const Train&) const = default;
  } train;

  struct Stream {
    std::string source = "synthetic";  // synthetic | idx | cifar100 | xxz
    // synthetic
    int classes = 10;
    int dim = 64;
    int train_per_class = 32;
    int test_per_class = 16;
    double noise = 0.25;
    // idx
    std::string train_images, train_labels, test_images, test_labels;
    // cifar100
    std::string train_file, test_file;
    bool grayscale = true;
    bool normalize = true;
    // xxz
    int L = 6;
    double delta_start = -2.0;
    double delta_stop = 2.0;
    double delta_step = 0.02;
    int samples_per_task = 200;
    std::string cache;
    bool operator==(const Stream&) const = default;
  } stream;

  struct Metrics {
    int probe_size = 64;
    int window = 40;
    int baseline_window = 10;
    int eval_subsample = 0;  // 0 = full test split
    bool operator==(const Metrics&) const = default;
  } metrics;

  struct Theory {
    int n_qubits = 4;
    int depth = 4;
    std::vector<double> scales = {1.0, 3.0};
    int n_samples = 1000;
    std::vector<double> lambdas = {1.0, 2.0, 4.0, 8.0, 16.0};
    int collapse_width = 16;
    int collapse_dim = 8;
    int collapse_samples = 256;
    int collapse_epochs = 200;
    // -1 picks the first single-qubit rotation; the leading entangler angles
    // have an identically zero gradient on the |0..0> input.
    int haar_param_index = -1;
    double haar_offset = 12.566370614359172;  // 4 pi
    int haar_samples = 500;
    std::vector<int> haar_depths = {2, 8};
    bool operator==(const Theory&) const = default;
  } theory;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Canonical form: every key emitted, fixed order, round-trip exact doubles.
std::string serialize_config(const ExperimentConfig& cfg);

/// Semantic checks beyond the grammar (enum values, positive sizes, pairing
/// of model and stream). Throws std::invalid_argument on the first problem.
void validate_config(const ExperimentConfig& cfg);

}  // namespace qcl
