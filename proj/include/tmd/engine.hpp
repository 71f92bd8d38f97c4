// NVT molecular dynamics for rigid multi-site molecules: velocity-Verlet
// translation, no-squish quaternion splitting for rotation, isokinetic
// velocity scaling, and orchestration of all samplers on the extended-step
// grid. Single orchestrator thread; force evaluation delegates to the
// thread-parallel module.
#pragma once

#include <memory>
#include <optional>

#include "tmd/greenkubo.hpp"
#include "tmd/massieu.hpp"
#include "tmd/parallel.hpp"
#include "tmd/results.hpp"
#include "tmd/rng.hpp"
#include "tmd/structure.hpp"

namespace tmd {

struct SimulationPlan {
  double dt = 0.0;
  long n_equilibration = 0;
  long n_production = 0;
  // 0 disables the thermostat entirely (NVE after initialization)
  int thermostat_interval_equil = 1;
  int thermostat_interval_prod = 10;

  int n_ext = 1;          // extended time step for correlation sampling
  int corr_length = 100;  // number of stored lags M
  int n_blocks = 10;

  bool sample_massieu = false;
  bool sample_rdf = false;
  double rdf_bin_width = 0.02;
  long rdf_stride = 0;  // 0: every extended step
  bool sample_self_diffusion = false;
  bool sample_electric_conductivity = false;
  bool sample_thermal_conductivity = false;
  std::vector<double> enthalpy;  // per species, required for thermal conductivity
  bool sample_residence = false;
  int residence_solute = 0;
  int residence_solvent = 0;
  double residence_radius = 0.0;  // <= 0: first RDF minimum from an equilibration pre-pass
  double residence_tstar = 0.0;   // Impey grace time
  PlateauParams plateau;

  std::string checkpoint_path;
  long checkpoint_interval = 0;  // production steps; 0 writes only at the end
  std::string config_text;       // embedded into checkpoints for self-contained restarts
};

class Engine {
 public:
  Engine(const SystemComposition& comp, const ForceFieldOptions& ff_opts,
         const SimulationPlan& plan, std::uint64_t seed);

  // replaces the lattice start (testing and restarts); forces are recomputed
  void set_state(const SystemState& state);

  const SystemState& state() const { return state_; }
  const SystemComposition& composition() const { return comp_; }
  const ForceField& force_field() const { return *ff_; }
  long production_steps_done() const { return prod_done_; }
  long correlation_pushes() const;  // sampler touch counter (invariant checks)

  void compute_forces();
  void step();              // one dt, no thermostat
  void apply_thermostat();  // isokinetic rescale, translational and rotational separately

  // full protocol: equilibration, production with samplers, finalization
  ResultsBundle run();

  // checkpointing (dynamic part; the config text identifies the static part)
  std::string checkpoint_bytes() const;
  void save_checkpoint(const std::string& path) const;
  void restore_dynamic(ByteReader& reader);

 private:
  void init_samplers();
  void sample_extended_step();
  void sample_rdf_snapshot();
  void accumulate_scalars();
  ResultsBundle finalize_results();
  void write_checkpoint_if_due(bool at_end);
  double resolve_residence_radius();

  SystemComposition comp_;
  ForceFieldOptions ff_opts_;
  SimulationPlan plan_;
  std::unique_ptr<ForceField> ff_;
  SystemState state_;
  Rng rng_;
  std::uint64_t seed_ = 0;

  long equil_done_ = 0;
  long prod_done_ = 0;
  bool samplers_ready_ = false;
  double residence_radius_used_ = 0.0;

  // scalar accumulation (every production step)
  BlockStat stat_tkin_, stat_tkin_rot_, stat_u_, stat_virial_;

  std::optional<DerivativeAccumulator> massieu_;
  std::optional<CorrelationSet> je_corr_;
  std::optional<CorrelationSet> jq_corr_;
  std::vector<CorrelationSet> vacf_;  // per species
  std::optional<ResidenceTracker> residence_;
  std::optional<RdfHistogram> rdf_;
  std::optional<RdfHistogram> rdf_prepass_;  // residence auto-radius
  std::vector<std::uint8_t> occupancy_scratch_;
  std::vector<double> flux_scratch_;
};

}  // namespace tmd
