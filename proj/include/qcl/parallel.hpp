// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace qcl {

/// Worker count: QCL_THREADS if set (>= 1), else 1. Results never depend on
/// it; parallel sections write per-index slots and reduce in ascending order.
inline int thread_count() {
  const char* env = std::getenv("QCL_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  if (n < 1) throw std::runtime_error("QCL_THREADS must be a positive integer");
  return n;
}

/// Runs body(i) for i in [0, n), split across thread_count() threads in
/// contiguous chunks. body must only touch slot i of any shared output.
inline void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index)>& body) {
  const int workers = thread_count();
  if (workers == 1 || n < 2) {
    for (Eigen::Index i = 0; i < n; ++i) body(i);
    return;
  }
  const int used = static_cast<int>(std::min<Eigen::Index>(workers, n));
  std::vector<std::thread> pool;
  pool.reserve(used);
  std::exception_ptr error;
  std::mutex error_mu;
  for (int w = 0; w < used; ++w) {
    const Eigen::Index lo = n * w / used;
    const Eigen::Index hi = n * (w + 1) / used;
    pool.emplace_back([&, lo, hi] {
      try {
        for (Eigen::Index i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace qcl
