#include "tmd/greenkubo.hpp"

#include <cmath>

#include "tmd/checkpoint.hpp"

namespace tmd {

CorrelationSet::CorrelationSet(int dim, int length, int n_blocks, long expected_samples)
    : dim_(dim),
      length_(length),
      n_blocks_(expected_samples > 0 ? n_blocks : 1),
      expected_(expected_samples) {
  if (dim < 1 || length < 2) throw ConfigError("correlation set: dim >= 1 and length >= 2 required");
  if (n_blocks_ < 1) n_blocks_ = 1;
  ring_.assign(static_cast<std::size_t>(length_) * dim_, 0.0);
  ring_weight_.assign(length_, 0.0);
  ring_valid_.assign(length_, 0);
  acf_sum_.assign(static_cast<std::size_t>(n_blocks_) * length_, 0.0);
  acf_cnt_.assign(static_cast<std::size_t>(n_blocks_) * length_, 0);
}

void CorrelationSet::push(std::span<const double> sample, double origin_weight, bool origin_valid) {
  if (static_cast<int>(sample.size()) != dim_)
    throw Error("correlation set: sample dimension mismatch");

  const int slot = static_cast<int>(pushes_ % length_);
  double* dst = ring_.data() + static_cast<std::size_t>(slot) * dim_;
  for (int c = 0; c < dim_; ++c) dst[c] = sample[c];
  ring_weight_[slot] = origin_weight;
  ring_valid_[slot] = origin_valid ? 1 : 0;

  int block = 0;
  if (expected_ > 0) block = static_cast<int>((pushes_ * n_blocks_) / expected_);
  if (block >= n_blocks_) block = n_blocks_ - 1;

  const int max_lag = static_cast<int>(std::min<long>(pushes_, length_ - 1));
  for (int lag = 0; lag <= max_lag; ++lag) {
    const int os = (slot - lag + length_) % length_;
    if (!ring_valid_[os]) continue;
    const double* origin = ring_.data() + static_cast<std::size_t>(os) * dim_;
    double dot = 0.0;
    for (int c = 0; c < dim_; ++c) dot += dst[c] * origin[c];
    acf_sum_[idx(block, lag)] += ring_weight_[os] * dot;
    acf_cnt_[idx(block, lag)] += 1;
  }
  ++pushes_;
}

double CorrelationSet::acf(int lag) const {
  double sum = 0.0;
  long cnt = 0;
  for (int b = 0; b < n_blocks_; ++b) {
    sum += acf_sum_[idx(b, lag)];
    cnt += acf_cnt_[idx(b, lag)];
  }
  return cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
}

long CorrelationSet::origin_count(int lag) const {
  long cnt = 0;
  for (int b = 0; b < n_blocks_; ++b) cnt += acf_cnt_[idx(b, lag)];
  return cnt;
}

double CorrelationSet::integral(double dt) const {
  double sum = 0.0;
  for (int lag = 0; lag < length_; ++lag) {
    const double c = acf(lag);
    sum += (lag == 0 || lag == length_ - 1) ? 0.5 * c : c;
  }
  return sum * dt;
}

std::vector<double> CorrelationSet::block_integrals(double dt) const {
  std::vector<double> out;
  for (int b = 0; b < n_blocks_; ++b) {
    bool complete = true;
    double sum = 0.0;
    for (int lag = 0; lag < length_; ++lag) {
      const long cnt = acf_cnt_[idx(b, lag)];
      if (cnt == 0) {
        complete = false;
        break;
      }
      const double c = acf_sum_[idx(b, lag)] / static_cast<double>(cnt);
      sum += (lag == 0 || lag == length_ - 1) ? 0.5 * c : c;
    }
    if (complete) out.push_back(sum * dt);
  }
  return out;
}

std::size_t CorrelationSet::memory_bytes() const {
  return ring_.capacity() * sizeof(double) + ring_weight_.capacity() * sizeof(double) +
         ring_valid_.capacity() + acf_sum_.capacity() * sizeof(double) +
         acf_cnt_.capacity() * sizeof(long);
}

void CorrelationSet::serialize(ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u32(static_cast<std::uint32_t>(length_));
  w.u32(static_cast<std::uint32_t>(n_blocks_));
  w.i64(expected_);
  w.i64(pushes_);
  w.f64_vec(ring_);
  w.f64_vec(ring_weight_);
  w.u64(ring_valid_.size());
  for (auto v : ring_valid_) w.u8(v);
  w.f64_vec(acf_sum_);
  w.u64(acf_cnt_.size());
  for (auto v : acf_cnt_) w.i64(v);
}

void CorrelationSet::deserialize(ByteReader& r) {
  dim_ = static_cast<int>(r.u32());
  length_ = static_cast<int>(r.u32());
  n_blocks_ = static_cast<int>(r.u32());
  expected_ = r.i64();
  pushes_ = r.i64();
  if (dim_ < 1 || length_ < 2 || n_blocks_ < 1 || pushes_ < 0)
    throw IoError("correlation set: corrupted header");
  ring_ = r.f64_vec<double>();
  ring_weight_ = r.f64_vec<double>();
  const std::uint64_t nv = r.u64();
  ring_valid_.resize(nv);
  for (auto& v : ring_valid_) v = r.u8();
  acf_sum_ = r.f64_vec<double>();
  const std::uint64_t nc = r.u64();
  acf_cnt_.resize(nc);
  for (auto& v : acf_cnt_) v = r.i64();
  if (ring_.size() != static_cast<std::size_t>(length_) * dim_ ||
      ring_weight_.size() != static_cast<std::size_t>(length_) ||
      ring_valid_.size() != static_cast<std::size_t>(length_) ||
      acf_sum_.size() != static_cast<std::size_t>(n_blocks_) * length_ ||
      acf_cnt_.size() != acf_sum_.size())
    throw IoError("correlation set: corrupted payload length");
}

TransportEstimate estimate_transport(const CorrelationSet& corr, double dt, double prefactor,
                                     const PlateauParams& plateau) {
  TransportEstimate out;
  out.has_value = corr.origin_count(corr.length() - 1) > 0;
  if (!out.has_value) return out;

  out.value = prefactor * corr.integral(dt);

  const auto blocks = corr.block_integrals(dt);
  if (blocks.size() >= 2) {
    double mean = 0.0;
    for (double b : blocks) mean += b;
    mean /= static_cast<double>(blocks.size());
    double var = 0.0;
    for (double b : blocks) var += (b - mean) * (b - mean);
    var /= static_cast<double>(blocks.size() - 1);
    out.stderr_ = std::abs(prefactor) * std::sqrt(var / static_cast<double>(blocks.size()));
  }

  const double c0 = std::abs(corr.acf(0));
  if (c0 > 0.0) {
    const int tail_begin =
        std::max(1, corr.length() - static_cast<int>(plateau.window * corr.length()));
    double tail = 0.0;
    int n = 0;
    for (int lag = tail_begin; lag < corr.length(); ++lag, ++n) tail += std::abs(corr.acf(lag));
    if (n > 0) out.converged = (tail / n) <= plateau.threshold * c0;
  }
  return out;
}

Vec3 electric_current_flux(const SystemComposition& comp, const SystemState& state) {
  Vec3 j;
  for (int s = 0; s < comp.species_count(); ++s) {
    const double q = comp.species[s].net_charge;
    if (q == 0.0) continue;
    const int begin = comp.molecule_offset(s);
    for (int m = begin; m < begin + comp.counts[s]; ++m) j += q * state.vel[m];
  }
  return j;
}

Vec3 heat_flux(const SystemComposition& comp, const SystemState& state, const PairTable& table,
               const std::vector<double>& h_per_species) {
  if (static_cast<int>(h_per_species.size()) != comp.species_count())
    throw ConfigError("heat flux: partial molar enthalpy required for every component");

  const Scene sc = build_scene(comp, state, table, false);
  const int n = sc.n_molecules;
  const double rc2 = table.cutoff2();
  const ElectrostaticsMethod method = table.method();

  std::vector<double> pair_u(n, 0.0);
  std::vector<Vec3> w_lab(n);
  for (int i = 0; i < n; ++i) w_lab[i] = rotate(state.orient[i], state.ang_vel[i]);

  Vec3 transport;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Vec3 R = minimum_image(sc.com[i] - sc.com[j], sc.box_length);
      const auto& terms = table.terms(sc.species_of[i], sc.species_of[j]);
      const int bi = sc.site_begin[i], bj = sc.site_begin[j];

      double u_pair = 0.0;
      Vec3 f_pair;      // force on i from j
      Vec3 gamma_ij;    // torque on i about its COM
      Vec3 gamma_ji;    // torque on j about its COM

      auto add_term = [&](const Vec3& da, const Vec3& db, double u, double du_dr_r, double inv_r2,
                          const Vec3& rv) {
        u_pair += u;
        const Vec3 f = (-du_dr_r * inv_r2) * rv;
        f_pair += f;
        gamma_ij += cross(da, f);
        gamma_ji -= cross(db, f);
      };

      for (const auto& t : terms.lj) {
        const Vec3 da = sc.site_offset[bi + t.site_a];
        const Vec3 db = sc.site_offset[bj + t.site_b];
        const Vec3 rv = R + da - db;
        const double r2 = norm2(rv);
        if (r2 >= rc2) continue;
        const double inv_r2 = 1.0 / r2;
        const double ir6 = inv_r2 * inv_r2 * inv_r2;
        const double a12 = t.c12 * ir6 * ir6;
        const double a6 = t.c6 * ir6;
        add_term(da, db, a12 - a6, -12.0 * a12 + 6.0 * a6, inv_r2, rv);
      }
      for (const auto& t : terms.qq) {
        const Vec3 da = sc.site_offset[bi + t.site_a];
        const Vec3 db = sc.site_offset[bj + t.site_b];
        const Vec3 rv = R + da - db;
        const double r2 = norm2(rv);
        if (r2 >= rc2) continue;
        const double inv_r2 = 1.0 / r2;
        const double r = std::sqrt(r2);
        const double u_c = t.qq / r;
        double u = u_c, du_r = -u_c;
        if (method == ElectrostaticsMethod::reaction_field) {
          const double rf = t.qq * table.rf_r3inv() * r2;
          u += rf + t.qq * table.rf_shift();
          du_r += 2.0 * rf;
        }
        add_term(da, db, u, du_r, inv_r2, rv);
      }

      if (u_pair == 0.0 && f_pair.x == 0.0 && f_pair.y == 0.0 && f_pair.z == 0.0) continue;
      pair_u[i] += u_pair;
      pair_u[j] += u_pair;
      transport += 0.5 * (dot(f_pair, state.vel[i]) + dot(gamma_ij, w_lab[i]) +
                          dot(f_pair, state.vel[j]) - dot(gamma_ji, w_lab[j])) *
                   R;
    }
  }

  Vec3 jq = transport;
  for (int i = 0; i < n; ++i) {
    const auto& sp = comp.species[sc.species_of[i]];
    const Vec3& w = state.ang_vel[i];
    const Vec3& I = sp.inertia_principal;
    const double e_kin = 0.5 * sp.total_mass * norm2(state.vel[i]) +
                         0.5 * (I.x * w.x * w.x + I.y * w.y * w.y + I.z * w.z * w.z);
    jq += (e_kin + 0.5 * pair_u[i] - h_per_species[sc.species_of[i]]) * state.vel[i];
  }
  return jq;
}

void shell_occupancy(const SystemComposition& comp, const SystemState& state, int solute_species,
                     int solvent_species, double radius, std::vector<std::uint8_t>& out) {
  const int a0 = comp.molecule_offset(solute_species);
  const int na = comp.counts[solute_species];
  const int b0 = comp.molecule_offset(solvent_species);
  const int nb = comp.counts[solvent_species];
  out.assign(static_cast<std::size_t>(na) * nb, 0);
  const double r2 = radius * radius;
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < nb; ++b) {
      if (solute_species == solvent_species && a == b) continue;
      const Vec3 d = minimum_image(state.pos[a0 + a] - state.pos[b0 + b], state.box_length);
      if (norm2(d) <= r2) out[static_cast<std::size_t>(a) * nb + b] = 1;
    }
}

ResidenceTracker::ResidenceTracker(int n_solute, int n_solvent, int length, int grace_steps,
                                   int n_blocks, long expected_samples)
    : n_solute_(n_solute), n_solvent_(n_solvent), grace_(grace_steps), length_(length) {
  if (n_solute < 1 || n_solvent < 1) throw ConfigError("residence tracker: empty species");
  if (grace_ < 0) grace_ = 0;
  prev_one_.assign(static_cast<std::size_t>(n_solute) * n_solvent, -1);
  per_solute_.reserve(n_solute);
  for (int a = 0; a < n_solute; ++a)
    per_solute_.emplace_back(n_solvent, length, n_blocks, expected_samples);
  scratch_.resize(n_solvent);
}

void ResidenceTracker::push(const std::vector<std::uint8_t>& raw) {
  if (raw.size() != prev_one_.size()) throw Error("residence tracker: bitmap size mismatch");
  pending_.push_back(raw);
  ++raw_count_;
  if (static_cast<int>(pending_.size()) > grace_) {
    commit(pending_.front());
    pending_.pop_front();
  }
}

void ResidenceTracker::flush() {
  while (!pending_.empty()) {
    commit(pending_.front());
    pending_.pop_front();
  }
}

void ResidenceTracker::commit(const std::vector<std::uint8_t>& raw_front) {
  // time index of the bitmap being committed
  const long s = committed_;
  std::vector<std::uint8_t> bits(raw_front.size());
  for (std::size_t c = 0; c < raw_front.size(); ++c) {
    if (raw_front[c]) {
      bits[c] = 1;
      prev_one_[c] = s;
      continue;
    }
    // zero: filled when a raw 1 closes the excursion within the grace window
    bits[c] = 0;
    if (prev_one_[c] < 0) continue;
    const long close_deadline = prev_one_[c] + grace_ + 1;
    for (std::size_t k = 1; k < pending_.size(); ++k) {
      const long q = s + static_cast<long>(k);
      if (q > close_deadline) break;
      if (pending_[k][c]) {
        bits[c] = 1;
        break;
      }
    }
  }

  for (int a = 0; a < n_solute_; ++a) {
    int inside = 0;
    for (int b = 0; b < n_solvent_; ++b) {
      const std::uint8_t v = bits[static_cast<std::size_t>(a) * n_solvent_ + b];
      scratch_[b] = v;
      inside += v;
    }
    per_solute_[a].push(scratch_, inside > 0 ? 1.0 / inside : 0.0, inside > 0);
  }
  ++committed_;
}

double ResidenceTracker::acf(int lag) const {
  double sum = 0.0;
  long cnt = 0;
  for (const auto& c : per_solute_) {
    for (int b = 0; b < c.blocks(); ++b) {
      sum += c.acf_sum(b, lag);
      cnt += c.acf_count(b, lag);
    }
  }
  return cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
}

TransportEstimate ResidenceTracker::residence_time(double dt, const PlateauParams& plateau) const {
  TransportEstimate out;
  // origins exist only where some solute had a populated shell
  long tail_origins = 0;
  for (const auto& c : per_solute_) tail_origins += c.origin_count(length_ - 1);
  if (tail_origins == 0) return out;
  out.has_value = true;

  double integral = 0.0;
  for (int lag = 0; lag < length_; ++lag) {
    const double c = acf(lag);
    integral += (lag == 0 || lag == length_ - 1) ? 0.5 * c : c;
  }
  out.value = integral * dt;

  // block-wise tau over pooled solutes
  const int n_blocks = per_solute_.front().blocks();
  std::vector<double> block_tau;
  for (int b = 0; b < n_blocks; ++b) {
    double sum = 0.0;
    bool complete = true;
    for (int lag = 0; lag < length_ && complete; ++lag) {
      double s = 0.0;
      long n = 0;
      for (const auto& c : per_solute_) {
        s += c.acf_sum(b, lag);
        n += c.acf_count(b, lag);
      }
      if (n == 0) {
        complete = false;
        break;
      }
      const double cval = s / static_cast<double>(n);
      sum += (lag == 0 || lag == length_ - 1) ? 0.5 * cval : cval;
    }
    if (complete) block_tau.push_back(sum * dt);
  }
  if (block_tau.size() >= 2) {
    double mean = 0.0;
    for (double b : block_tau) mean += b;
    mean /= static_cast<double>(block_tau.size());
    double var = 0.0;
    for (double b : block_tau) var += (b - mean) * (b - mean);
    var /= static_cast<double>(block_tau.size() - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(block_tau.size()));
  }

  const double c0 = std::abs(acf(0));
  if (c0 > 0.0) {
    const int tail_begin = std::max(1, length_ - static_cast<int>(plateau.window * length_));
    double tail = 0.0;
    int n = 0;
    for (int lag = tail_begin; lag < length_; ++lag, ++n) tail += std::abs(acf(lag));
    if (n > 0) out.converged = (tail / n) <= plateau.threshold * c0;
  }
  return out;
}

void ResidenceTracker::serialize(ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(n_solute_));
  w.u32(static_cast<std::uint32_t>(n_solvent_));
  w.u32(static_cast<std::uint32_t>(grace_));
  w.u32(static_cast<std::uint32_t>(length_));
  w.i64(raw_count_);
  w.i64(committed_);
  w.u64(pending_.size());
  for (const auto& p : pending_) {
    for (auto v : p) w.u8(v);
  }
  w.u64(prev_one_.size());
  for (auto v : prev_one_) w.i64(v);
  for (const auto& c : per_solute_) c.serialize(w);
}

void ResidenceTracker::deserialize(ByteReader& r) {
  n_solute_ = static_cast<int>(r.u32());
  n_solvent_ = static_cast<int>(r.u32());
  grace_ = static_cast<int>(r.u32());
  length_ = static_cast<int>(r.u32());
  raw_count_ = r.i64();
  committed_ = r.i64();
  if (n_solute_ < 1 || n_solvent_ < 1) throw IoError("residence tracker: corrupted header");
  const std::uint64_t np = r.u64();
  pending_.clear();
  for (std::uint64_t i = 0; i < np; ++i) {
    std::vector<std::uint8_t> p(static_cast<std::size_t>(n_solute_) * n_solvent_);
    for (auto& v : p) v = r.u8();
    pending_.push_back(std::move(p));
  }
  const std::uint64_t nprev = r.u64();
  prev_one_.resize(nprev);
  for (auto& v : prev_one_) v = r.i64();
  per_solute_.assign(n_solute_, CorrelationSet{});
  for (auto& c : per_solute_) c.deserialize(r);
  scratch_.resize(n_solvent_);
}

}  // namespace tmd
