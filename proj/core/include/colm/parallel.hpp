#pragma once

#include <functional>

#include "colm/common.hpp"

namespace colm {

/// Persistent worker pool. Tasks must write disjoint outputs; the pool
/// guarantees nothing about execution order, so results may not depend
/// on scheduling. Nested run() calls execute inline on the caller.
class ThreadPool {
 public:
  static ThreadPool& instance();

  /// Number of workers including the calling thread.
  int threads() const { return nthreads_; }
  void set_threads(int n);

  /// Runs fn(i) for i in [0, ntasks); blocks until all complete.
  void run(i64 ntasks, const std::function<void(i64)>& fn);

  ~ThreadPool();

 private:
  ThreadPool();
  struct State;
  State* st_;
  int nthreads_;
};

/// Splits [0, n) into contiguous grains and runs them on the pool.
void parallel_for(i64 n, i64 grain, const std::function<void(i64, i64)>& fn);

}  // namespace colm
