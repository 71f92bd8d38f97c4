#include "tmd/engine.hpp"

#include <cmath>
#include <fstream>

#include "tmd/checkpoint.hpp"

namespace tmd {

namespace {

// quaternion permutation operators of the no-squish free-rotor splitting
inline std::array<double, 4> permute(int axis, const std::array<double, 4>& q) {
  switch (axis) {
    case 1: return {-q[1], q[0], q[3], -q[2]};
    case 2: return {-q[2], -q[3], q[0], q[1]};
    default: return {-q[3], q[2], -q[1], q[0]};
  }
}

inline double dot4(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

// Exact free-rotor propagation of (orientation, body angular momentum) by the
// symplectic axis splitting P3 P2 P1 P2 P3; axes with zero inertia are skipped
// (point particles, linear molecules).
void free_rotate(Quat& orient, Vec3& ang_mom, const Vec3& inertia, double dt) {
  std::array<double, 4> q{orient.w, orient.x, orient.y, orient.z};
  std::array<double, 4> p{};
  for (int k = 1; k <= 3; ++k) {
    const double pi_k = ang_mom[k - 1];
    if (pi_k == 0.0) continue;
    const auto pq = permute(k, q);
    for (int c = 0; c < 4; ++c) p[c] += 2.0 * pi_k * pq[c];
  }

  constexpr int axis_seq[5] = {3, 2, 1, 2, 3};
  const double dt_seq[5] = {0.5 * dt, 0.5 * dt, dt, 0.5 * dt, 0.5 * dt};
  for (int stage = 0; stage < 5; ++stage) {
    const int k = axis_seq[stage];
    const double inertia_k = inertia[k - 1];
    if (inertia_k <= 0.0) continue;
    const auto pq = permute(k, q);
    const double zeta = dot4(p, pq) / (4.0 * inertia_k);
    const double c = std::cos(dt_seq[stage] * zeta);
    const double s = std::sin(dt_seq[stage] * zeta);
    const auto pp = permute(k, p);
    for (int i = 0; i < 4; ++i) {
      q[i] = c * q[i] + s * pq[i];
      p[i] = c * p[i] + s * pp[i];
    }
  }

  for (int k = 1; k <= 3; ++k)
    ang_mom[k - 1] = (inertia[k - 1] > 0.0) ? 0.5 * dot4(p, permute(k, q)) : 0.0;
  orient = {q[0], q[1], q[2], q[3]};
  orient.normalize();
}

}  // namespace

Engine::Engine(const SystemComposition& comp, const ForceFieldOptions& ff_opts,
               const SimulationPlan& plan, std::uint64_t seed)
    : comp_(comp), ff_opts_(ff_opts), plan_(plan), rng_(seed), seed_(seed) {
  if (plan.dt <= 0.0) throw ConfigError("engine: time step must be positive");
  if (plan.n_ext < 1) throw ConfigError("engine: extended step factor must be >= 1");
  if (ff_opts_.method == ElectrostaticsMethod::ewald && plan_.sample_massieu)
    throw ConfigError("engine: massieu sampling is not available together with ewald summation");
  if (plan_.sample_thermal_conductivity &&
      static_cast<int>(plan_.enthalpy.size()) != comp.species_count())
    throw ConfigError("engine: thermal conductivity requires an enthalpy for every component");

  ff_ = std::make_unique<ForceField>(comp_, ff_opts_);
  state_ = init_lattice(comp_, seed);
  compute_forces();

  const long expected = plan_.n_production;
  stat_tkin_ = BlockStat(plan_.n_blocks, expected);
  stat_tkin_rot_ = BlockStat(plan_.n_blocks, expected);
  stat_u_ = BlockStat(plan_.n_blocks, expected);
  stat_virial_ = BlockStat(plan_.n_blocks, expected);

  // residence auto-radius needs structure data before production starts
  if (plan_.sample_residence && plan_.residence_radius <= 0.0) {
    rdf_prepass_.emplace(comp_, plan_.rdf_bin_width > 0 ? plan_.rdf_bin_width : 0.02,
                         0.5 * comp_.box_length);
  }
}

void Engine::set_state(const SystemState& state) {
  if (state.molecule_count() != comp_.molecule_count())
    throw ConfigError("engine: state does not match composition");
  state_ = state;
  state_.box_length = comp_.box_length;
  state_.wrap();
  compute_forces();
}

void Engine::compute_forces() { ff_->evaluate(state_); }

void Engine::step() {
  const double dt = plan_.dt;
  const double half = 0.5 * dt;
  const int n = state_.molecule_count();

  for (int i = 0; i < n; ++i) {
    const auto& sp = comp_.species[comp_.species_of_molecule(i)];
    state_.vel[i] += (half / sp.total_mass) * state_.force[i];
    if (sp.rotational_dof > 0) {
      const Vec3 torque_body = rotate_inv(state_.orient[i], state_.torque[i]);
      Vec3 ang_mom;
      for (int k = 0; k < 3; ++k) {
        const double inertia_k = sp.inertia_principal[k];
        ang_mom[k] = (inertia_k > 0.0) ? inertia_k * state_.ang_vel[i][k] + half * torque_body[k]
                                       : 0.0;
      }
      state_.pos[i] += dt * state_.vel[i];
      free_rotate(state_.orient[i], ang_mom, sp.inertia_principal, dt);
      for (int k = 0; k < 3; ++k)
        state_.ang_vel[i][k] =
            (sp.inertia_principal[k] > 0.0) ? ang_mom[k] / sp.inertia_principal[k] : 0.0;
    } else {
      state_.pos[i] += dt * state_.vel[i];
    }
  }
  state_.wrap();

  compute_forces();

  for (int i = 0; i < n; ++i) {
    const auto& sp = comp_.species[comp_.species_of_molecule(i)];
    state_.vel[i] += (half / sp.total_mass) * state_.force[i];
    if (sp.rotational_dof > 0) {
      const Vec3 torque_body = rotate_inv(state_.orient[i], state_.torque[i]);
      for (int k = 0; k < 3; ++k) {
        const double inertia_k = sp.inertia_principal[k];
        if (inertia_k > 0.0) state_.ang_vel[i][k] += half * torque_body[k] / inertia_k;
      }
    }
  }
  state_.check_finite("engine step");
}

void Engine::apply_thermostat() {
  const double T = comp_.temperature;
  const int dof_t = translational_dof(comp_);
  const double ke_t = kinetic_energy_trans(comp_, state_);
  if (ke_t <= 0.0) throw NumericalError("thermostat: zero translational kinetic energy");
  const double scale_t = std::sqrt(0.5 * dof_t * T / ke_t);
  for (auto& v : state_.vel) v *= scale_t;

  const int dof_r = rotational_dof(comp_);
  if (dof_r > 0) {
    const double ke_r = kinetic_energy_rot(comp_, state_);
    if (ke_r <= 0.0) throw NumericalError("thermostat: zero rotational kinetic energy");
    const double scale_r = std::sqrt(0.5 * dof_r * T / ke_r);
    for (auto& w : state_.ang_vel) w *= scale_r;
  }
}

double Engine::resolve_residence_radius() {
  if (plan_.residence_radius > 0.0) return plan_.residence_radius;
  if (!rdf_prepass_ || rdf_prepass_->snapshots() < 1)
    throw ConfigError("residence sampling: no RDF pre-pass data to locate the shell radius");
  // first LJ/dummy site pair between solute and solvent species
  for (const auto& table : rdf_prepass_->finalize()) {
    const bool match = (table.species_a == plan_.residence_solute &&
                        table.species_b == plan_.residence_solvent) ||
                       (table.species_a == plan_.residence_solvent &&
                        table.species_b == plan_.residence_solute);
    if (!match) continue;
    const double r_min = first_minimum(table.r_mid, table.g);
    if (std::isnan(r_min))
      throw ConfigError("residence sampling: no first RDF minimum found; set residence_radius");
    return r_min;
  }
  throw ConfigError("residence sampling: solute/solvent species have no RDF site pair");
}

void Engine::init_samplers() {
  const long expected = plan_.n_production / plan_.n_ext;
  const int blocks = plan_.n_blocks;

  if (plan_.sample_massieu)
    massieu_.emplace(comp_.temperature, comp_.volume(), comp_.molecule_count(), blocks, expected);
  if (plan_.sample_electric_conductivity)
    je_corr_.emplace(3, plan_.corr_length, blocks, expected);
  if (plan_.sample_thermal_conductivity)
    jq_corr_.emplace(3, plan_.corr_length, blocks, expected);
  if (plan_.sample_self_diffusion) {
    vacf_.clear();
    for (int s = 0; s < comp_.species_count(); ++s)
      vacf_.emplace_back(3 * comp_.counts[s], plan_.corr_length, blocks, expected);
  }
  if (plan_.sample_residence) {
    if (residence_radius_used_ <= 0.0) residence_radius_used_ = resolve_residence_radius();
    const int grace =
        static_cast<int>(std::floor(plan_.residence_tstar / (plan_.dt * plan_.n_ext) + 1e-9));
    residence_.emplace(comp_.counts[plan_.residence_solute], comp_.counts[plan_.residence_solvent],
                       plan_.corr_length, grace, blocks, expected);
  }
  if (plan_.sample_rdf)
    rdf_.emplace(comp_, plan_.rdf_bin_width, 0.5 * comp_.box_length);
  samplers_ready_ = true;
}

long Engine::correlation_pushes() const {
  long pushes = 0;
  if (je_corr_) pushes = std::max(pushes, je_corr_->samples());
  if (jq_corr_) pushes = std::max(pushes, jq_corr_->samples());
  for (const auto& v : vacf_) pushes = std::max(pushes, v.samples());
  if (residence_) pushes = std::max(pushes, residence_->committed());
  if (massieu_) pushes = std::max(pushes, massieu_->samples());
  return pushes;
}

void Engine::accumulate_scalars() {
  const int dof_t = translational_dof(comp_);
  stat_tkin_.add(2.0 * kinetic_energy_trans(comp_, state_) / dof_t);
  const int dof_r = rotational_dof(comp_);
  if (dof_r > 0) stat_tkin_rot_.add(2.0 * kinetic_energy_rot(comp_, state_) / dof_r);
  stat_u_.add(state_.energy.total());
  stat_virial_.add(state_.virial);
}

void Engine::sample_extended_step() {
  if (massieu_)
    massieu_->add(state_.energy.total(), state_.energy.du_dv(), state_.energy.d2u_dv2());
  if (je_corr_) {
    const Vec3 j = electric_current_flux(comp_, state_);
    const double sample[3] = {j.x, j.y, j.z};
    je_corr_->push(sample);
  }
  if (jq_corr_) {
    const Vec3 j = heat_flux(comp_, state_, ff_->table(), plan_.enthalpy);
    const double sample[3] = {j.x, j.y, j.z};
    jq_corr_->push(sample);
  }
  if (!vacf_.empty()) {
    for (int s = 0; s < comp_.species_count(); ++s) {
      flux_scratch_.resize(3 * comp_.counts[s]);
      const int begin = comp_.molecule_offset(s);
      for (int m = 0; m < comp_.counts[s]; ++m) {
        flux_scratch_[3 * m] = state_.vel[begin + m].x;
        flux_scratch_[3 * m + 1] = state_.vel[begin + m].y;
        flux_scratch_[3 * m + 2] = state_.vel[begin + m].z;
      }
      vacf_[s].push(flux_scratch_);
    }
  }
  if (residence_) {
    shell_occupancy(comp_, state_, plan_.residence_solute, plan_.residence_solvent,
                    residence_radius_used_, occupancy_scratch_);
    residence_->push(occupancy_scratch_);
  }
}

void Engine::sample_rdf_snapshot() { rdf_->accumulate(state_); }

void Engine::write_checkpoint_if_due(bool at_end) {
  if (plan_.checkpoint_path.empty()) return;
  if (at_end || (plan_.checkpoint_interval > 0 && prod_done_ > 0 &&
                 prod_done_ % plan_.checkpoint_interval == 0))
    save_checkpoint(plan_.checkpoint_path);
}

ResultsBundle Engine::run() {
  const int equil_interval = plan_.thermostat_interval_equil;
  const int prod_interval = plan_.thermostat_interval_prod;
  const bool thermostat_on = prod_interval > 0 || equil_interval > 0;

  const long prepass_stride = std::max<long>(1, plan_.n_ext);
  while (equil_done_ < plan_.n_equilibration) {
    ++equil_done_;
    step();
    if (thermostat_on && equil_interval > 0 && equil_done_ % equil_interval == 0)
      apply_thermostat();
    if (rdf_prepass_ && equil_done_ > plan_.n_equilibration / 2 &&
        equil_done_ % prepass_stride == 0)
      rdf_prepass_->accumulate(state_);
  }

  if (!samplers_ready_) init_samplers();

  const long rdf_stride = plan_.rdf_stride > 0 ? plan_.rdf_stride : plan_.n_ext;
  while (prod_done_ < plan_.n_production) {
    ++prod_done_;
    step();
    if (thermostat_on && prod_interval > 0 && prod_done_ % prod_interval == 0)
      apply_thermostat();
    accumulate_scalars();
    if (prod_done_ % plan_.n_ext == 0) sample_extended_step();
    if (rdf_ && prod_done_ % rdf_stride == 0) sample_rdf_snapshot();
    write_checkpoint_if_due(false);
  }
  if (residence_) residence_->flush();
  write_checkpoint_if_due(true);

  return finalize_results();
}

ResultsBundle Engine::finalize_results() {
  ResultsBundle out;
  out.seed = seed_;
  out.equilibration_steps = plan_.n_equilibration;
  out.production_steps = prod_done_;
  out.n_ext = plan_.n_ext;
  out.dt = plan_.dt;
  out.temperature = comp_.temperature;
  out.molecule_count = comp_.molecule_count();
  out.density = comp_.molecule_count() / comp_.volume();
  if (prod_done_ == 0) return out;

  out.t_kin_trans = stat_tkin_.stat();
  out.t_kin_rot = stat_tkin_rot_.stat();
  Stat u = stat_u_.stat();
  u.value /= comp_.molecule_count();
  u.stderr_ /= comp_.molecule_count();
  out.u_pot_per_molecule = u;

  const double volume = comp_.volume();
  const double rho = out.density;
  const double T = comp_.temperature;
  if (ff_opts_.method != ElectrostaticsMethod::ewald) {
    const Stat w = stat_virial_.stat();
    const double p = rho * T + w.value / (3.0 * volume) - ff_->lrc().du_dv(volume);
    out.pressure = {p, w.stderr_ / (3.0 * volume), w.n};
    out.compressibility_factor = {p / (rho * T), out.pressure.stderr_ / (rho * T), w.n};
    out.pressure_available = true;
  } else {
    out.warnings.push_back(
        "pressure/compressibility unavailable: reciprocal-space virial not implemented for ewald");
  }

  const double dt_ext = plan_.dt * plan_.n_ext;
  auto acf_of = [&](const CorrelationSet& c, const std::string& name, const std::string& units,
                    double channel_scale) {
    AcfTable t;
    t.name = name;
    t.units = units;
    t.dt = dt_ext;
    t.n_ext = plan_.n_ext;
    double integral = 0.0;
    for (int lag = 0; lag < c.length(); ++lag) {
      const double value = c.acf(lag) * channel_scale;
      if (lag == 0)
        integral = 0.0;
      else
        integral += 0.5 * (value + t.c.back()) * dt_ext;
      t.c.push_back(value);
      t.running_integral.push_back(integral);
    }
    return t;
  };

  if (massieu_ && massieu_->samples() >= 2) {
    out.massieu = massieu_->finalize();
    for (const auto& w : out.massieu->warnings) out.warnings.push_back(w);
  }

  if (je_corr_) {
    out.acfs.push_back(acf_of(*je_corr_, "electric_current", "charge^2 length^2 / time^2", 1.0));
    auto est = estimate_transport(*je_corr_, dt_ext, 1.0 / (3.0 * volume * T), plan_.plateau);
    out.transport.push_back({"electric_conductivity", "charge^2 / (energy length time)", est});
    if (je_corr_->origin_count(je_corr_->length() - 1) < 100)
      out.warnings.push_back("electric conductivity: fewer than 100 origins at the longest lag");
  }
  if (jq_corr_) {
    out.acfs.push_back(acf_of(*jq_corr_, "heat_flux", "energy^2 length^2 / time^2", 1.0));
    auto est = estimate_transport(*jq_corr_, dt_ext, 1.0 / (3.0 * volume * T * T), plan_.plateau);
    out.transport.push_back({"thermal_conductivity", "1 / (length time)", est});
  }
  for (std::size_t s = 0; s < vacf_.size(); ++s) {
    const double inv_n = 1.0 / comp_.counts[s];
    out.acfs.push_back(
        acf_of(vacf_[s], "vacf_" + comp_.species[s].name, "length^2 / time^2", inv_n));
    auto est = estimate_transport(vacf_[s], dt_ext, inv_n / 3.0, plan_.plateau);
    out.transport.push_back({"self_diffusion_" + comp_.species[s].name, "length^2 / time", est});
  }
  if (residence_) {
    const auto& i_name = comp_.species[plan_.residence_solute].name;
    const auto& j_name = comp_.species[plan_.residence_solvent].name;
    AcfTable t;
    t.name = "residence_" + i_name + "_" + j_name;
    t.units = "1";
    t.dt = dt_ext;
    t.n_ext = plan_.n_ext;
    double integral = 0.0;
    for (int lag = 0; lag < plan_.corr_length; ++lag) {
      const double value = residence_->acf(lag);
      if (lag > 0) integral += 0.5 * (value + t.c.back()) * dt_ext;
      t.c.push_back(value);
      t.running_integral.push_back(integral);
    }
    out.acfs.push_back(std::move(t));
    auto est = residence_->residence_time(dt_ext, plan_.plateau);
    out.transport.push_back({"residence_time_" + i_name + "_" + j_name, "time", est});
    out.scalars.push_back({"residence_shell_radius_" + i_name + "_" + j_name,
                           residence_radius_used_});
  }
  if (rdf_ && rdf_->snapshots() > 0) {
    out.rdf = rdf_->finalize();
    for (const auto& table : out.rdf) {
      const double r_min = first_minimum(table.r_mid, table.g);
      if (!std::isnan(r_min)) {
        out.scalars.push_back({"rdf_first_minimum_" + table.label_a + "_" + table.label_b, r_min});
        out.scalars.push_back(
            {"solvation_number_" + table.label_a + "_" + table.label_b,
             solvation_number(table, table.partner_density, r_min)});
      }
    }
  }

  if (ff_->ewald() && !ff_->ewald()->warning().empty())
    out.warnings.push_back(ff_->ewald()->warning());
  return out;
}

std::string Engine::checkpoint_bytes() const {
  ByteWriter w;
  w.bytes("TMDCKPT1", 8);
  w.u32(1);
  w.str(plan_.config_text);

  w.u64(seed_);
  w.i64(equil_done_);
  w.i64(prod_done_);
  const auto rng_state = rng_.save();
  for (auto word : rng_state) w.u64(word);

  w.u32(static_cast<std::uint32_t>(state_.molecule_count()));
  w.f64(state_.box_length);
  for (int i = 0; i < state_.molecule_count(); ++i) {
    const auto& q = state_.orient[i];
    for (double v : {state_.pos[i].x, state_.pos[i].y, state_.pos[i].z, q.w, q.x, q.y, q.z,
                     state_.vel[i].x, state_.vel[i].y, state_.vel[i].z, state_.ang_vel[i].x,
                     state_.ang_vel[i].y, state_.ang_vel[i].z})
      w.f64(v);
  }

  stat_tkin_.serialize(w);
  stat_tkin_rot_.serialize(w);
  stat_u_.serialize(w);
  stat_virial_.serialize(w);

  w.u8(samplers_ready_ ? 1 : 0);
  w.f64(residence_radius_used_);
  w.u8(massieu_ ? 1 : 0);
  if (massieu_) massieu_->serialize(w);
  w.u8(je_corr_ ? 1 : 0);
  if (je_corr_) je_corr_->serialize(w);
  w.u8(jq_corr_ ? 1 : 0);
  if (jq_corr_) jq_corr_->serialize(w);
  w.u32(static_cast<std::uint32_t>(vacf_.size()));
  for (const auto& v : vacf_) v.serialize(w);
  w.u8(residence_ ? 1 : 0);
  if (residence_) residence_->serialize(w);
  w.u8(rdf_ ? 1 : 0);
  if (rdf_) rdf_->serialize(w);
  w.u8(rdf_prepass_ ? 1 : 0);
  if (rdf_prepass_) rdf_prepass_->serialize(w);
  w.bytes("END!", 4);
  return w.data();
}

void Engine::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  const std::string bytes = checkpoint_bytes();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("checkpoint write failed for '" + path + "'");
}

void Engine::restore_dynamic(ByteReader& r) {
  seed_ = r.u64();
  equil_done_ = r.i64();
  prod_done_ = r.i64();
  std::array<std::uint64_t, 4> rng_state{};
  for (auto& word : rng_state) word = r.u64();
  rng_.restore(rng_state);

  const int n = static_cast<int>(r.u32());
  if (n != comp_.molecule_count()) throw IoError("checkpoint: molecule count mismatch");
  state_.resize(n);
  state_.box_length = r.f64();
  for (int i = 0; i < n; ++i) {
    state_.pos[i] = {r.f64(), r.f64(), r.f64()};
    state_.orient[i] = {r.f64(), r.f64(), r.f64(), r.f64()};
    state_.vel[i] = {r.f64(), r.f64(), r.f64()};
    state_.ang_vel[i] = {r.f64(), r.f64(), r.f64()};
  }

  stat_tkin_.deserialize(r);
  stat_tkin_rot_.deserialize(r);
  stat_u_.deserialize(r);
  stat_virial_.deserialize(r);

  const bool ready = r.u8() != 0;
  residence_radius_used_ = r.f64();
  if (ready && !samplers_ready_) init_samplers();
  samplers_ready_ = ready;

  if (r.u8()) {
    if (!massieu_) massieu_.emplace();
    massieu_->deserialize(r);
  }
  if (r.u8()) {
    if (!je_corr_) je_corr_.emplace();
    je_corr_->deserialize(r);
  }
  if (r.u8()) {
    if (!jq_corr_) jq_corr_.emplace();
    jq_corr_->deserialize(r);
  }
  const int n_vacf = static_cast<int>(r.u32());
  if (n_vacf != static_cast<int>(vacf_.size())) {
    vacf_.assign(n_vacf, CorrelationSet{});
  }
  for (auto& v : vacf_) v.deserialize(r);
  if (r.u8()) {
    if (!residence_) residence_.emplace();
    residence_->deserialize(r);
  }
  if (r.u8()) {
    if (!rdf_) rdf_.emplace(comp_, plan_.rdf_bin_width, 0.5 * comp_.box_length);
    rdf_->deserialize(r);
  }
  if (r.u8()) {
    if (!rdf_prepass_)
      rdf_prepass_.emplace(comp_, plan_.rdf_bin_width > 0 ? plan_.rdf_bin_width : 0.02,
                           0.5 * comp_.box_length);
    rdf_prepass_->deserialize(r);
  }
  char marker[4];
  r.bytes(marker, 4);
  if (std::string(marker, 4) != "END!") throw IoError("checkpoint: missing end marker");

  compute_forces();
}

}  // namespace tmd
