// SPDX-License-Identifier: Apache-2.0
#include "qcl/task_streams.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "qcl/rng.hpp"

namespace qcl {

using json = nlohmann::json;

namespace {

void require_real(const Dataset& ds, const char* where) {
  if (ds.complex_inputs())
    throw std::invalid_argument(std::string(where) + ": needs real-vector inputs");
  if (ds.inputs.rows() != ds.labels.size())
    throw std::invalid_argument(std::string(where) + ": inputs/labels size mismatch");
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("truncated file: " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

TaskData apply_permutation(const Dataset& train, const Dataset& test,
                           const std::vector<int>& perm) {
  require_real(train, "apply_permutation");
  require_real(test, "apply_permutation");
  if (Eigen::Index(perm.size()) != train.inputs.cols())
    throw std::invalid_argument("apply_permutation: permutation length mismatch");
  auto permute = [&](const Dataset& src) {
    Dataset out = src;
    for (Eigen::Index c = 0; c < src.inputs.cols(); ++c)
      out.inputs.col(c) = src.inputs.col(perm[c]);
    return out;
  };
  return {permute(train), permute(test)};
}

PermutedStream::PermutedStream(Dataset base_train, Dataset base_test, int task_count,
                               std::uint64_t seed)
    : train_(std::move(base_train)), test_(std::move(base_test)),
      task_count_(task_count), seed_(seed) {
  require_real(train_, "PermutedStream");
  require_real(test_, "PermutedStream");
  if (train_.inputs.cols() != test_.inputs.cols())
    throw std::invalid_argument("PermutedStream: train/test width mismatch");
  if (task_count < 1)
    throw std::invalid_argument("PermutedStream: task_count must be >= 1");
}

PermutedTaskDesc PermutedStream::descriptor(int t) const {
  if (t < 0 || t >= task_count_)
    throw std::out_of_range("PermutedStream: task index out of range");
  Rng rng = Rng(seed_).fork(streams::kTaskData).fork(static_cast<std::uint64_t>(t));
  return {t, rng.permutation(static_cast<int>(train_.inputs.cols()))};
}

TaskData PermutedStream::task(int t) const {
  return apply_permutation(train_, test_, descriptor(t).permutation);
}

SplitPairStream::SplitPairStream(Dataset base_train, Dataset base_test, int task_count,
                                 std::uint64_t seed)
    : train_(std::move(base_train)), test_(std::move(base_test)),
      task_count_(task_count), seed_(seed) {
  require_real(train_, "SplitPairStream");
  require_real(test_, "SplitPairStream");
  if (train_.class_count < 2)
    throw std::invalid_argument("SplitPairStream: need at least 2 classes");
  if (task_count < 1)
    throw std::invalid_argument("SplitPairStream: task_count must be >= 1");
  for (int c = 0; c < train_.class_count; ++c) {
    if ((train_.labels.array() == c).count() == 0 ||
        (test_.labels.array() == c).count() == 0)
      throw std::invalid_argument("SplitPairStream: class " + std::to_string(c) +
                                  " has no samples");
  }
}

SplitPairTaskDesc SplitPairStream::descriptor(int t) const {
  if (t < 0 || t >= task_count_)
    throw std::out_of_range("SplitPairStream: task index out of range");
  Rng rng = Rng(seed_).fork(streams::kTaskData).fork(static_cast<std::uint64_t>(t));
  const int n = train_.class_count;
  const int a = static_cast<int>(rng.bounded(n));
  int b = static_cast<int>(rng.bounded(n - 1));
  if (b >= a) b += 1;
  return {t, {a, b}};
}

TaskData SplitPairStream::task(int t) const {
  const auto desc = descriptor(t);
  auto filter = [&](const Dataset& src) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < src.size(); ++r)
      if (src.labels[r] == desc.classes[0] || src.labels[r] == desc.classes[1])
        rows.push_back(r);
    Dataset out;
    out.class_count = 2;
    out.inputs.resize(rows.size(), src.inputs.cols());
    out.labels.resize(rows.size());
    for (size_t k = 0; k < rows.size(); ++k) {
      out.inputs.row(k) = src.inputs.row(rows[k]);
      out.labels[k] = src.labels[rows[k]] == desc.classes[0] ? 0 : 1;
    }
    return out;
  };
  return {filter(train_), filter(test_)};
}

int XxzConfig::grid_size() const {
  if (delta_step <= 0.0)
    throw std::invalid_argument("XxzConfig: delta_step must be positive");
  return static_cast<int>(std::floor((delta_stop - delta_start) / delta_step + 0.5)) + 1;
}

double XxzConfig::delta(int index) const {
  if (index < 0 || index >= grid_size())
    throw std::out_of_range("XxzConfig: delta index out of range");
  return delta_start + delta_step * index;
}

Eigen::MatrixXd xxz_hamiltonian(int L, double delta) {
  if (L < 2 || L > 14)
    throw std::invalid_argument("xxz_hamiltonian: L must be in [2, 14]");
  const Eigen::Index dim = Eigen::Index(1) << L;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (int site = 0; site < L; ++site) {
    const int a = site, b = (site + 1) % L;
    const std::uint64_t ma = 1ull << (L - 1 - a);
    const std::uint64_t mb = 1ull << (L - 1 - b);
    for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(dim); ++s) {
      const bool za = s & ma, zb = s & mb;
      h(s, s) += delta * ((za == zb) ? 1.0 : -1.0);
      if (za != zb) {
        const std::uint64_t flipped = s ^ ma ^ mb;
        h(flipped, s) += 2.0;
      }
    }
  }
  return h;
}

EigenSystem diagonalize(const Eigen::Ref<const Eigen::MatrixXd>& h) {
  if (h.rows() != h.cols())
    throw std::invalid_argument("diagonalize: matrix must be square");
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("diagonalize: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("diagonalize: eigensolver failed");
  EigenSystem out{es.eigenvalues(), es.eigenvectors()};
  for (Eigen::Index c = 0; c < out.vectors.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.vectors.rows(); ++r) {
      if (std::abs(out.vectors(r, c)) > 1e-12) {
        if (out.vectors(r, c) < 0.0) out.vectors.col(c) = -out.vectors.col(c);
        break;
      }
    }
  }
  return out;
}

XxzStream::XxzStream(XxzConfig cfg, int task_count, std::uint64_t seed)
    : cfg_(cfg), task_count_(task_count), seed_(seed) {
  cfg_.grid_size();  // validates the grid
  if (task_count < 1)
    throw std::invalid_argument("XxzStream: task_count must be >= 1");
  if (cfg_.samples_per_task < 4)
    throw std::invalid_argument("XxzStream: samples_per_task must be >= 4");
}

const EigenSystem& XxzStream::eigensystem(int delta_index) const {
  auto it = cache_.find(delta_index);
  if (it == cache_.end()) {
    it = cache_.emplace(delta_index,
                        diagonalize(xxz_hamiltonian(cfg_.L, cfg_.delta(delta_index))))
             .first;
  }
  return it->second;
}

XxzTaskDesc XxzStream::descriptor(int t) const {
  if (t < 0 || t >= task_count_)
    throw std::out_of_range("XxzStream: task index out of range");
  Rng rng = Rng(seed_).fork(streams::kTaskData).fork(static_cast<std::uint64_t>(t));
  const std::uint64_t dim = 1ull << cfg_.L;
  const int i = static_cast<int>(rng.bounded(dim));
  int j = static_cast<int>(rng.bounded(dim - 1));
  if (j >= i) j += 1;
  XxzTaskDesc desc{t, i, j, false};
  // Degeneracy flag needs the same delta draws the points will use.
  const Eigen::Index d = Eigen::Index(dim);
  for (int p = 0; p < cfg_.samples_per_task; ++p) {
    const int di = static_cast<int>(rng.bounded(cfg_.grid_size()));
    const auto& es = eigensystem(di);
    for (int idx : {desc.i, desc.j}) {
      const double lo = idx > 0 ? es.values[idx] - es.values[idx - 1] : 1.0;
      const double hi = idx + 1 < d ? es.values[idx + 1] - es.values[idx] : 1.0;
      if (lo < 1e-10 || hi < 1e-10) desc.degenerate = true;
    }
  }
  return desc;
}

std::vector<XxzStream::CachePoint> XxzStream::task_points(int t) const {
  if (t < 0 || t >= task_count_)
    throw std::out_of_range("XxzStream: task index out of range");
  Rng rng = Rng(seed_).fork(streams::kTaskData).fork(static_cast<std::uint64_t>(t));
  const std::uint64_t dim = 1ull << cfg_.L;
  const int i = static_cast<int>(rng.bounded(dim));
  int j = static_cast<int>(rng.bounded(dim - 1));
  if (j >= i) j += 1;
  std::vector<CachePoint> points;
  points.reserve(cfg_.samples_per_task);
  for (int p = 0; p < cfg_.samples_per_task; ++p) {
    const int di = static_cast<int>(rng.bounded(cfg_.grid_size()));
    const auto& es = eigensystem(di);
    CachePoint cp;
    cp.task = t;
    cp.label = p % 2;
    cp.delta = cfg_.delta(di);
    cp.index = cp.label == 0 ? i : j;
    cp.eigenvalue = es.values[cp.index];
    cp.state = es.vectors.col(cp.index).cast<std::complex<double>>();
    points.push_back(std::move(cp));
  }
  return points;
}

TaskData XxzStream::task(int t) const {
  const auto points = task_points(t);
  TaskData td;
  for (Dataset* ds : {&td.train, &td.test}) {
    ds->class_count = 2;
  }
  std::vector<int> train_labels, test_labels;
  for (size_t p = 0; p < points.size(); ++p) {
    const bool to_train = (p % 4) < 2;
    Dataset& ds = to_train ? td.train : td.test;
    ds.states.push_back(points[p].state);
    (to_train ? train_labels : test_labels).push_back(points[p].label);
  }
  td.train.labels = Eigen::Map<const Eigen::VectorXi>(train_labels.data(),
                                                      train_labels.size());
  td.test.labels = Eigen::Map<const Eigen::VectorXi>(test_labels.data(),
                                                     test_labels.size());
  return td;
}

void write_xxz_cache(const XxzStream& stream, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (int t = 0; t < stream.task_count(); ++t) {
    for (const auto& cp : stream.task_points(t)) {
      json j;
      j["task"] = cp.task;
      j["label"] = cp.label;
      j["delta"] = cp.delta;
      j["index"] = cp.index;
      j["eigenvalue"] = cp.eigenvalue;
      std::vector<double> re(cp.state.size()), im(cp.state.size());
      for (Eigen::Index k = 0; k < cp.state.size(); ++k) {
        re[k] = cp.state[k].real();
        im[k] = cp.state[k].imag();
      }
      j["state"] = {{"real", re}, {"imag", im}};
      out << j.dump() << "\n";
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<TaskData> load_xxz_cache(const std::string& path, int dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  struct Row {
    int task, label;
    Eigen::VectorXcd state;
  };
  std::vector<Row> rows;
  std::string line;
  int max_task = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    Row r;
    r.task = j.at("task").get<int>();
    r.label = j.at("label").get<int>();
    const auto re = j.at("state").at("real").get<std::vector<double>>();
    const auto im = j.at("state").at("imag").get<std::vector<double>>();
    if (static_cast<int>(re.size()) != dim || im.size() != re.size())
      throw std::runtime_error("xxz cache: state dimension mismatch in " + path);
    r.state.resize(dim);
    for (int k = 0; k < dim; ++k) r.state[k] = {re[k], im[k]};
    max_task = std::max(max_task, r.task);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::runtime_error("xxz cache is empty: " + path);
  std::vector<TaskData> tasks(max_task + 1);
  std::vector<std::vector<int>> train_labels(max_task + 1), test_labels(max_task + 1);
  std::vector<int> seen(max_task + 1, 0);
  for (const auto& r : rows) {
    const int p = seen[r.task]++;
    const bool to_train = (p % 4) < 2;
    Dataset& ds = to_train ? tasks[r.task].train : tasks[r.task].test;
    ds.class_count = 2;
    ds.states.push_back(r.state);
    (to_train ? train_labels : test_labels)[r.task].push_back(r.label);
  }
  for (int t = 0; t <= max_task; ++t) {
    tasks[t].train.labels = Eigen::Map<const Eigen::VectorXi>(
        train_labels[t].data(), train_labels[t].size());
    tasks[t].test.labels = Eigen::Map<const Eigen::VectorXi>(
        test_labels[t].data(), test_labels[t].size());
  }
  return tasks;
}

Eigen::VectorXd complex_to_real_features(const Eigen::Ref<const Eigen::VectorXcd>& v) {
  Eigen::VectorXd out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open: " + images_path);
  if (read_be32(img, images_path) != 0x00000803u)
    throw std::runtime_error("bad IDX image magic in " + images_path);
  const std::uint32_t count = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);
  const std::size_t pixels = std::size_t(rows) * cols;
  std::vector<unsigned char> buf(pixels);
  Dataset ds;
  ds.inputs.resize(count, pixels);
  for (std::uint32_t r = 0; r < count; ++r) {
    img.read(reinterpret_cast<char*>(buf.data()), pixels);
    if (!img) throw std::runtime_error("truncated IDX image data in " + images_path);
    for (std::size_t c = 0; c < pixels; ++c)
      ds.inputs(r, c) = buf[c] / 255.0;
  }

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot open: " + labels_path);
  if (read_be32(lab, labels_path) != 0x00000801u)
    throw std::runtime_error("bad IDX label magic in " + labels_path);
  const std::uint32_t lcount = read_be32(lab, labels_path);
  if (lcount != count)
    throw std::runtime_error("IDX image/label count mismatch: " + images_path);
  std::vector<unsigned char> lbuf(lcount);
  lab.read(reinterpret_cast<char*>(lbuf.data()), lcount);
  if (!lab) throw std::runtime_error("truncated IDX label data in " + labels_path);
  ds.labels.resize(lcount);
  int max_label = 0;
  for (std::uint32_t r = 0; r < lcount; ++r) {
    ds.labels[r] = lbuf[r];
    max_label = std::max(max_label, int(lbuf[r]));
  }
  ds.class_count = max_label + 1;
  return ds;
}

Dataset load_cifar100_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open: " + path);
  const std::streamoff size = in.tellg();
  constexpr std::streamoff record = 2 + 3072;
  if (size == 0 || size % record != 0)
    throw std::runtime_error("CIFAR-100 file size is not a multiple of 3074: " + path);
  const Eigen::Index count = size / record;
  in.seekg(0);
  Dataset ds;
  ds.inputs.resize(count, 3072);
  ds.labels.resize(count);
  std::vector<unsigned char> buf(record);
  for (Eigen::Index r = 0; r < count; ++r) {
    in.read(reinterpret_cast<char*>(buf.data()), record);
    if (!in) throw std::runtime_error("truncated CIFAR-100 record in " + path);
    ds.labels[r] = buf[1];  // fine label
    for (int c = 0; c < 3072; ++c) ds.inputs(r, c) = buf[2 + c] / 255.0;
  }
  ds.class_count = 100;
  return ds;
}

Eigen::VectorXd rgb_to_gray(const Eigen::Ref<const Eigen::VectorXd>& rgb) {
  if (rgb.size() % 3 != 0)
    throw std::invalid_argument("rgb_to_gray: length must be divisible by 3");
  const Eigen::Index plane = rgb.size() / 3;
  return 0.299 * rgb.head(plane) + 0.587 * rgb.segment(plane, plane) +
         0.114 * rgb.tail(plane);
}

Dataset gray_dataset(const Dataset& rgb) {
  require_real(rgb, "gray_dataset");
  Dataset out = rgb;
  const Eigen::Index plane = rgb.inputs.cols() / 3;
  out.inputs.resize(rgb.inputs.rows(), plane);
  for (Eigen::Index r = 0; r < rgb.inputs.rows(); ++r)
    out.inputs.row(r) = rgb_to_gray(rgb.inputs.row(r));
  return out;
}

Dataset l2_normalize_inputs(const Dataset& ds) {
  require_real(ds, "l2_normalize_inputs");
  Dataset out = ds;
  for (Eigen::Index r = 0; r < ds.inputs.rows(); ++r) {
    const double n = ds.inputs.row(r).norm();
    if (!(n > 0.0))
      throw std::invalid_argument("l2_normalize_inputs: row " + std::to_string(r) +
                                  " has zero norm");
    out.inputs.row(r) /= n;
  }
  return out;
}

Dataset synthetic_prototypes(int classes, int dim, int per_class, double noise_sigma,
                             std::uint64_t seed) {
  if (classes < 2 || dim < 1 || per_class < 1)
    throw std::invalid_argument("synthetic_prototypes: bad shape arguments");
  if (noise_sigma < 0.0)
    throw std::invalid_argument("synthetic_prototypes: noise_sigma must be >= 0");
  Rng root(seed);
  Rng proto_rng = root.fork(1);
  Eigen::MatrixXd prototypes(classes, dim);
  for (int c = 0; c < classes; ++c)
    for (int d = 0; d < dim; ++d) prototypes(c, d) = proto_rng.normal();
  Rng noise_rng = root.fork(2);
  Dataset ds;
  ds.class_count = classes;
  ds.inputs.resize(Eigen::Index(classes) * per_class, dim);
  ds.labels.resize(Eigen::Index(classes) * per_class);
  Eigen::Index row = 0;
  for (int s = 0; s < per_class; ++s) {
    for (int c = 0; c < classes; ++c) {
      for (int d = 0; d < dim; ++d)
        ds.inputs(row, d) = prototypes(c, d) + noise_sigma * noise_rng.normal();
      ds.labels[row] = c;
      ++row;
    }
  }
  return ds;
}

}  // namespace qcl
