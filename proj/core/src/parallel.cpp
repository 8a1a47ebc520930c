#include "colm/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace colm {

struct ThreadPool::State {
  std::mutex mu;
  std::condition_variable cv_work;
  std::condition_variable cv_done;
  std::vector<std::thread> workers;
  const std::function<void(i64)>* fn = nullptr;
  std::atomic<i64> next{0};
  i64 ntasks = 0;
  std::atomic<int> pending{0};
  u64 epoch = 0;
  bool stop = false;
  thread_local static bool inside;
};

thread_local bool ThreadPool::State::inside = false;

namespace {

void drain(ThreadPool::State* st) {
  for (;;) {
    i64 i = st->next.fetch_add(1, std::memory_order_relaxed);
    if (i >= st->ntasks) break;
    (*st->fn)(i);
  }
}

}  // namespace

ThreadPool::ThreadPool() : st_(new State), nthreads_(1) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("COLM_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) n = v;
  }
  set_threads(n > 0 ? n : 1);
}

ThreadPool::~ThreadPool() {
  set_threads(1);
  delete st_;
}

ThreadPool& ThreadPool::instance() {
  static ThreadPool pool;
  return pool;
}

void ThreadPool::set_threads(int n) {
  if (n < 1) n = 1;
  {
    std::unique_lock<std::mutex> lk(st_->mu);
    st_->stop = true;
    st_->cv_work.notify_all();
  }
  for (auto& t : st_->workers) t.join();
  st_->workers.clear();
  st_->stop = false;
  nthreads_ = n;
  for (int w = 0; w < n - 1; ++w) {
    st_->workers.emplace_back([st = st_] {
      u64 seen = 0;
      for (;;) {
        {
          std::unique_lock<std::mutex> lk(st->mu);
          st->cv_work.wait(lk, [&] { return st->stop || st->epoch != seen; });
          if (st->stop) return;
          seen = st->epoch;
        }
        State::inside = true;
        drain(st);
        State::inside = false;
        if (st->pending.fetch_sub(1, std::memory_order_acq_rel) == 1) {
          std::lock_guard<std::mutex> lk(st->mu);
          st->cv_done.notify_all();
        }
      }
    });
  }
}

void ThreadPool::run(i64 ntasks, const std::function<void(i64)>& fn) {
  if (ntasks <= 0) return;
  if (nthreads_ == 1 || ntasks == 1 || State::inside) {
    for (i64 i = 0; i < ntasks; ++i) fn(i);
    return;
  }
  {
    std::lock_guard<std::mutex> lk(st_->mu);
    st_->fn = &fn;
    st_->ntasks = ntasks;
    st_->next.store(0, std::memory_order_relaxed);
    st_->pending.store(static_cast<int>(st_->workers.size()), std::memory_order_relaxed);
    ++st_->epoch;
    st_->cv_work.notify_all();
  }
  drain(st_);
  std::unique_lock<std::mutex> lk(st_->mu);
  st_->cv_done.wait(lk, [&] { return st_->pending.load(std::memory_order_acquire) == 0; });
  st_->fn = nullptr;
}

void parallel_for(i64 n, i64 grain, const std::function<void(i64, i64)>& fn) {
  if (n <= 0) return;
  if (grain < 1) grain = 1;
  i64 ntasks = (n + grain - 1) / grain;
  ThreadPool::instance().run(ntasks, [&](i64 t) {
    i64 lo = t * grain;
    i64 hi = lo + grain < n ? lo + grain : n;
    fn(lo, hi);
  });
}

}  // namespace colm
