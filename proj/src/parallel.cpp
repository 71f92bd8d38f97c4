#include "tmd/parallel.hpp"

namespace tmd {

ThreadPool::ThreadPool(int workers) : workers_(workers < 1 ? 1 : workers) {
  for (int id = 1; id < workers_; ++id)
    threads_.emplace_back([this, id] { worker_loop(id); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  cv_start_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop(int id) {
  long seen = 0;
  for (;;) {
    const std::function<void(int)>* task = nullptr;
    {
      std::unique_lock lock(mutex_);
      cv_start_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      task = task_;
    }
    (*task)(id);
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0) cv_done_.notify_one();
    }
  }
}

void ThreadPool::run(const std::function<void(int)>& task) {
  if (workers_ == 1) {
    task(0);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    task_ = &task;
    pending_ = workers_ - 1;
    ++generation_;
  }
  cv_start_.notify_all();
  task(0);
  std::unique_lock lock(mutex_);
  cv_done_.wait(lock, [&] { return pending_ == 0; });
}

ForceField::ForceField(const SystemComposition& comp, const ForceFieldOptions& opts)
    : comp_(comp),
      opts_(opts),
      table_(comp, opts.cutoff, opts.method, opts.eps_rf,
             opts.method == ElectrostaticsMethod::ewald && opts.ewald ? opts.ewald->alpha : 0.0),
      lrc_(lj_lrc(comp, opts.cutoff)),
      pool_(opts.workers) {
  comp.validate(opts.method);
  if (opts.method == ElectrostaticsMethod::ewald) {
    if (!opts.ewald) throw ConfigError("force field: ewald method without ewald parameters");
    if (opts.workers != 1)
      throw ConfigError("force field: ewald summation runs single-threaded (worker count must be 1)");
    ewald_.emplace(comp, *opts.ewald);
    opts_.volume_derivatives = false;
  }
  buffers_.resize(pool_.worker_count());
  for (auto& b : buffers_) b.resize(comp.molecule_count());
}

void ForceField::evaluate_serial(const Scene& scene, EvalAccum& acc) const {
  acc.zero();
  evaluate_pair_range(scene, 0, pair_count(scene.n_molecules), acc);
}

void ForceField::evaluate(SystemState& state) {
  const Scene scene = build_scene(comp_, state, table_, opts_.volume_derivatives);
  const long pairs = pair_count(scene.n_molecules);
  const int w = pool_.worker_count();

  // static contiguous partition of the flat pair range
  pool_.run([&](int id) {
    EvalAccum& acc = buffers_[id];
    acc.zero();
    const long first = pairs * id / w;
    const long last = pairs * (id + 1) / w;
    evaluate_pair_range(scene, first, last, acc);
  });

  // fixed-order reduction into buffer 0
  EvalAccum& total = buffers_[0];
  for (int id = 1; id < w; ++id) total.add(buffers_[id]);

  state.force = total.force;
  state.torque = total.torque;
  state.virial = total.virial;

  EnergyBreakdown e;
  e.lj = total.u_lj;
  e.elec_real = total.u_elec_real;
  e.rf = total.u_rf;
  const double volume = comp_.volume();
  e.lrc = lrc_.energy(volume);
  if (opts_.volume_derivatives) {
    const VolumeDerivatives vd = volume_derivatives(total.s1, total.s2, volume);
    e.du_dv_explicit = vd.du_dv;
    e.d2u_dv2_explicit = vd.d2u_dv2;
    e.du_dv_lrc = lrc_.du_dv(volume);
    e.d2u_dv2_lrc = lrc_.d2u_dv2(volume);
  }

  if (ewald_) {
    double u_recip = 0.0, u_self = 0.0;
    ewald_->evaluate(scene, state.force, state.torque, u_recip, u_self);
    e.elec_recip = u_recip;
    e.elec_self = u_self;
  }
  state.energy = e;
}

}  // namespace tmd
