// Thread-parallel force/energy evaluation. The flattened molecule-pair index
// space is split into W contiguous chunks; every worker accumulates into its
// own full-length force/torque buffers and the buffers are reduced in fixed
// worker order, so results are bit-identical for a given W independent of
// scheduling.
#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "tmd/ewald.hpp"
#include "tmd/potentials.hpp"

namespace tmd {

// Fork-join pool; task(w) runs once per worker id, worker 0 on the caller.
class ThreadPool {
 public:
  explicit ThreadPool(int workers);
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int worker_count() const { return workers_; }
  void run(const std::function<void(int)>& task);

 private:
  void worker_loop(int id);

  int workers_ = 1;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable cv_start_;
  std::condition_variable cv_done_;
  const std::function<void(int)>* task_ = nullptr;
  long generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

struct ForceFieldOptions {
  double cutoff = 0.0;
  ElectrostaticsMethod method = ElectrostaticsMethod::none;
  double eps_rf = std::numeric_limits<double>::infinity();
  std::optional<EwaldParams> ewald;  // required when method == ewald
  int workers = 1;
  bool volume_derivatives = true;    // accumulate s1/s2 (off for ewald)
};

// Owns the pair table, per-worker buffers, Ewald machinery and LRC terms;
// evaluate() refreshes all force-field caches on the state.
class ForceField {
 public:
  ForceField(const SystemComposition& comp, const ForceFieldOptions& opts);

  void evaluate(SystemState& state);

  const PairTable& table() const { return table_; }
  const LrcTerms& lrc() const { return lrc_; }
  const Ewald* ewald() const { return ewald_ ? &*ewald_ : nullptr; }
  int workers() const { return pool_.worker_count(); }
  const SystemComposition& composition() const { return comp_; }
  bool volume_derivatives_enabled() const { return opts_.volume_derivatives; }

  // exposed for tests: evaluation into an explicit accumulator, serial
  void evaluate_serial(const Scene& scene, EvalAccum& acc) const;

 private:
  const SystemComposition& comp_;
  ForceFieldOptions opts_;
  PairTable table_;
  LrcTerms lrc_;
  std::optional<Ewald> ewald_;
  ThreadPool pool_;
  std::vector<EvalAccum> buffers_;
};

}  // namespace tmd
