// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qcl {

/// Labeled inputs. Exactly one of `inputs` (real features, one row per
/// sample) or `states` (complex vectors) is populated.
struct Dataset {
  Eigen::MatrixXd inputs;
  std::vector<Eigen::VectorXcd> states;
  Eigen::VectorXi labels;
  int class_count = 2;

  bool complex_inputs() const { return !states.empty(); }
  Eigen::Index size() const {
    return complex_inputs() ? Eigen::Index(states.size()) : inputs.rows();
  }
};

struct TaskData {
  Dataset train;
  Dataset test;
};

struct PermutedTaskDesc {
  int task_index = 0;
  std::vector<int> permutation;
};

struct SplitPairTaskDesc {
  int task_index = 0;
  std::array<int, 2> classes = {0, 1};  // original labels mapped to 0, 1
};

struct XxzTaskDesc {
  int task_index = 0;
  int i = 0;  // eigenstate index, label 0
  int j = 1;  // eigenstate index, label 1
  bool degenerate = false;  // some sampled delta has gap < 1e-10 at i or j
};

/// Applies one pixel permutation to every row of both splits.
TaskData apply_permutation(const Dataset& train, const Dataset& test,
                           const std::vector<int>& perm);

/// Task t applies a permutation drawn from substream (seed, t) to every train
/// and test input of the base pair. Task generation is independent per t.
class PermutedStream {
 public:
  PermutedStream(Dataset base_train, Dataset base_test, int task_count,
                 std::uint64_t seed);
  int task_count() const { return task_count_; }
  PermutedTaskDesc descriptor(int t) const;
  TaskData task(int t) const;

 private:
  Dataset train_, test_;
  int task_count_;
  std::uint64_t seed_;
};

/// Task t picks an ordered pair of distinct classes (with replacement across
/// tasks) from substream (seed, t); first class is relabeled 0, second 1.
class SplitPairStream {
 public:
  SplitPairStream(Dataset base_train, Dataset base_test, int task_count,
                  std::uint64_t seed);
  int task_count() const { return task_count_; }
  SplitPairTaskDesc descriptor(int t) const;
  TaskData task(int t) const;

 private:
  Dataset train_, test_;
  int task_count_;
  std::uint64_t seed_;
};

struct XxzConfig {
  int L = 6;
  double delta_start = -2.0;
  double delta_stop = 2.0;
  double delta_step = 0.02;
  int samples_per_task = 200;

  int grid_size() const;
  double delta(int index) const;
};

/// PBC XXZ chain: H = sum_i X_i X_{i+1} + Y_i Y_{i+1} + delta Z_i Z_{i+1},
/// site L+1 = site 1. Real symmetric in the computational basis. For L = 2
/// both bonds hit the same pair, so that coupling is doubly counted.
Eigen::MatrixXd xxz_hamiltonian(int L, double delta);

struct EigenSystem {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns; first nonzero entry >= 0
};

/// Dense diagonalization with the deterministic sign convention applied.
EigenSystem diagonalize(const Eigen::Ref<const Eigen::MatrixXd>& h);

/// Task t fixes an eigenstate pair (i, j), i != j, from substream (seed, t);
/// each data point samples delta uniformly from the grid and is the i-th
/// (label 0) or j-th (label 1) eigenvector of H(delta). Points alternate
/// labels; of each consecutive four, the first two go to train, the last two
/// to test.
class XxzStream {
 public:
  XxzStream(XxzConfig cfg, int task_count, std::uint64_t seed);
  int task_count() const { return task_count_; }
  const XxzConfig& config() const { return cfg_; }
  XxzTaskDesc descriptor(int t) const;
  TaskData task(int t) const;

  /// Rows for the JSONL cache, in generation order.
  struct CachePoint {
    int task = 0;
    int label = 0;
    double delta = 0.0;
    int index = 0;
    double eigenvalue = 0.0;
    Eigen::VectorXcd state;
  };
  std::vector<CachePoint> task_points(int t) const;

 private:
  const EigenSystem& eigensystem(int delta_index) const;

  XxzConfig cfg_;
  int task_count_;
  std::uint64_t seed_;
  mutable std::map<int, EigenSystem> cache_;
};

void write_xxz_cache(const XxzStream& stream, const std::string& path);

/// Reads a cache written by write_xxz_cache back into per-task datasets.
std::vector<TaskData> load_xxz_cache(const std::string& path, int dim);

/// (re_0, .., re_{d-1}, im_0, .., im_{d-1}); preserves the L2 norm.
Eigen::VectorXd complex_to_real_features(const Eigen::Ref<const Eigen::VectorXcd>& v);

/// IDX-format loader (big-endian; magic 0x803 for images, 0x801 for labels).
/// Pixels are scaled to [0, 1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// CIFAR-100 binary: 3074-byte records, coarse label, fine label, 3072 pixels
/// (R, G, B planes). Fine labels, pixels scaled to [0, 1].
Dataset load_cifar100_binary(const std::string& path);

/// Luma weights 0.299 R + 0.587 G + 0.114 B over plane-ordered input.
Eigen::VectorXd rgb_to_gray(const Eigen::Ref<const Eigen::VectorXd>& rgb);

/// Returns a copy with every row L2-normalized. Zero rows are an error.
Dataset l2_normalize_inputs(const Dataset& ds);

Dataset gray_dataset(const Dataset& rgb);

/// Gaussian blobs around per-class prototype vectors; labels cycle
/// 0,1,..,classes-1. noise_sigma = 0 reproduces the prototypes exactly.
Dataset synthetic_prototypes(int classes, int dim, int per_class, double noise_sigma,
                             std::uint64_t seed);

}  // namespace qcl
