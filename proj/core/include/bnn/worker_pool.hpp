#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace bnn {

/// Fixed set of persistent worker threads. `run` hands the same task to every
/// worker (each receives its own index) and blocks until all have finished.
/// Threads are spawned once so dispatch cost excludes thread creation.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const noexcept { return threads_.size(); }

  /// Not reentrant; one task in flight at a time. Rethrows the first
  /// exception raised by any worker.
  void run(const std::function<void(std::size_t worker)>& task);

 private:
  void loop(std::size_t index);

  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  std::uint64_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stopping_ = false;
  std::exception_ptr error_;
  std::vector<std::thread> threads_;
};

/// Default worker count: the hardware concurrency, at least 1.
std::size_t default_worker_count() noexcept;

}  // namespace bnn
