// Copyright 2026 The Scalpel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace scalpel {

// Chunked parallel_for over a fixed worker set. Chunk boundaries depend only
// on (n, grain), never on the worker count, so any computation that writes
// disjoint per-chunk outputs is reproducible across thread counts.
//
// One job runs at a time; parallel_for must be called from a single
// orchestrating thread.
class ThreadPool {
 public:
  // threads == 0 picks hardware_concurrency. The calling thread participates,
  // so `threads` is the total lane count.
  explicit ThreadPool(int threads = 0) {
    int n = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    lanes_ = n;
    for (int i = 0; i < n - 1; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(mu_);
      stop_ = true;
      cv_.notify_all();
    }
    for (auto& t : workers_) t.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int lanes() const { return lanes_; }

  // Invokes fn(begin, end) over [0, n) in chunks of `grain`. Blocks until all
  // chunks complete.
  void parallel_for(int64_t n, int64_t grain, const std::function<void(int64_t, int64_t)>& fn) {
    if (n <= 0) return;
    if (grain < 1) grain = 1;
    const int64_t chunks = (n + grain - 1) / grain;
    if (chunks == 1 || lanes_ == 1) {
      // Same chunk units as the parallel path, so chunk-indexed reductions
      // see identical boundaries for every worker count.
      for (int64_t c = 0; c < chunks; ++c) {
        const int64_t begin = c * grain;
        fn(begin, begin + grain < n ? begin + grain : n);
      }
      return;
    }
    auto job = std::make_shared<Job>();
    job->fn = &fn;
    job->n = n;
    job->grain = grain;
    job->chunks = chunks;
    {
      std::unique_lock<std::mutex> lock(mu_);
      current_ = job;
      cv_.notify_all();
    }
    run_chunks(*job);
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_done_.wait(lock, [&] { return job->done.load(std::memory_order_acquire) >= job->chunks; });
      current_.reset();
    }
  }

 private:
  struct Job {
    const std::function<void(int64_t, int64_t)>* fn = nullptr;
    int64_t n = 0;
    int64_t grain = 0;
    int64_t chunks = 0;
    std::atomic<int64_t> next{0};
    std::atomic<int64_t> done{0};
  };

  // A stale worker holding an exhausted job sees next >= chunks and never
  // touches fn, so the caller's function reference cannot outlive its use.
  void run_chunks(Job& job) {
    for (;;) {
      int64_t c = job.next.fetch_add(1, std::memory_order_relaxed);
      if (c >= job.chunks) break;
      int64_t begin = c * job.grain;
      int64_t end = begin + job.grain < job.n ? begin + job.grain : job.n;
      (*job.fn)(begin, end);
      if (job.done.fetch_add(1, std::memory_order_acq_rel) + 1 == job.chunks) {
        std::unique_lock<std::mutex> lock(mu_);
        cv_done_.notify_all();
      }
    }
  }

  void worker_loop() {
    std::shared_ptr<Job> last;
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return stop_ || (current_ != nullptr && current_ != last); });
        if (stop_) return;
        job = current_;
      }
      last = job;
      run_chunks(*job);
    }
  }

  std::vector<std::thread> workers_;
  int lanes_ = 1;

  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable cv_done_;
  bool stop_ = false;
  std::shared_ptr<Job> current_;
};

}  // namespace scalpel
