// Pair interactions: Lennard-Jones and point-charge kernels with the radial
// derivative combinations needed for forces and for analytic volume
// derivatives, Lorentz-Berthelot pair tables, the LJ long-range correction,
// and the reaction-field augmentation.
#pragma once

#include <cmath>
#include <vector>

#include "tmd/model.hpp"

namespace tmd {

// u, force scale F = f_over_r * r_vec, and the radial combinations
// u'(r)*r and u''(r)*r^2 used by the volume-derivative accumulation.
struct PairEval {
  double u = 0.0;
  double f_over_r = 0.0;
  double du_dr_r = 0.0;
  double d2u_dr2_r2 = 0.0;
};

inline PairEval lj_pair(double r2, double sigma, double epsilon) {
  if (r2 <= 0.0) throw NumericalError("lj_pair: overlapping sites (r = 0)");
  const double s2 = sigma * sigma / r2;
  const double s6 = s2 * s2 * s2;
  const double s12 = s6 * s6;
  PairEval e;
  e.u = 4.0 * epsilon * (s12 - s6);
  e.du_dr_r = -4.0 * epsilon * (12.0 * s12 - 6.0 * s6);
  e.d2u_dr2_r2 = 4.0 * epsilon * (156.0 * s12 - 42.0 * s6);
  e.f_over_r = -e.du_dr_r / r2;
  return e;
}

// u = q1 q2 / r in reduced Gaussian-style units; du/dr = -u/r.
struct CoulombEval {
  double u = 0.0;
  double du_dr = 0.0;
};

inline CoulombEval coulomb_pair(double r, double q1, double q2) {
  if (r <= 0.0) throw NumericalError("coulomb_pair: overlapping charges (r = 0)");
  const double u = q1 * q2 / r;
  return {u, -u / r};
}

// (eps_RF - 1) / (2 eps_RF + 1); the conducting limit eps -> inf gives 1/2.
inline double reaction_field_factor(double eps_rf) {
  if (std::isinf(eps_rf)) return 0.5;
  return (eps_rf - 1.0) / (2.0 * eps_rf + 1.0);
}

// Accumulated sums from a completed pair loop:
//   s1 = sum u'(r) * a,          a  = (r_vec . R_com) / r
//   s2 = sum u''(r) a^2 + u' b,  b  = (|R_com|^2 - a^2) / r
// where R_com is the minimum-image center separation; for single-site
// molecules a = r and b = 0.
struct VolumeDerivatives {
  double du_dv = 0.0;
  double d2u_dv2 = 0.0;
};

inline VolumeDerivatives volume_derivatives(double s1, double s2, double volume) {
  return {s1 / (3.0 * volume), (s2 - 2.0 * s1) / (9.0 * volume * volume)};
}

// Site-site tail corrections assuming g(r) = 1 beyond the cutoff:
// U_LRC = k / V with fixed r_c, so dU/dV = -U/V and d2U/dV2 = 2U/V^2.
struct LrcTerms {
  double k = 0.0;  // U_LRC * V

  double energy(double volume) const { return k / volume; }
  double du_dv(double volume) const { return -k / (volume * volume); }
  double d2u_dv2(double volume) const { return 2.0 * k / (volume * volume * volume); }
};

LrcTerms lj_lrc(const SystemComposition& comp, double cutoff);

struct LjTerm {
  int site_a = 0, site_b = 0;
  double c12 = 0.0, c6 = 0.0;  // 4 eps sigma^12, 4 eps sigma^6
};

struct ChargeTerm {
  int site_a = 0, site_b = 0;
  double qq = 0.0;
};

struct SpeciesPairTerms {
  std::vector<LjTerm> lj;
  std::vector<ChargeTerm> qq;
};

// Combined interaction parameters per species pair (Lorentz-Berthelot for
// unlike LJ sites); zero-strength terms are dropped at build time.
class PairTable {
 public:
  PairTable(const SystemComposition& comp, double cutoff, ElectrostaticsMethod method,
            double eps_rf = std::numeric_limits<double>::infinity(), double ewald_alpha = 0.0);

  const SpeciesPairTerms& terms(int species_a, int species_b) const {
    return terms_[species_a * n_species_ + species_b];
  }

  double cutoff() const { return cutoff_; }
  double cutoff2() const { return cutoff_ * cutoff_; }
  ElectrostaticsMethod method() const { return method_; }
  double rf_factor() const { return rf_factor_; }
  double rf_r3inv() const { return rf_r3inv_; }    // rf_factor / rc^3
  double rf_shift() const { return rf_shift_; }    // -(1 + rf_factor) / rc
  double ewald_alpha() const { return ewald_alpha_; }
  // true when every species is a single LJ site (fast path, no torques)
  bool single_lj_only() const { return single_lj_only_; }

 private:
  int n_species_ = 0;
  double cutoff_ = 0.0;
  ElectrostaticsMethod method_ = ElectrostaticsMethod::none;
  double rf_factor_ = 0.0, rf_r3inv_ = 0.0, rf_shift_ = 0.0;
  double ewald_alpha_ = 0.0;
  bool single_lj_only_ = false;
  std::vector<SpeciesPairTerms> terms_;
};

// Immutable per-evaluation view: lab-frame site offsets from the molecular
// centers, shared read-only across workers.
struct Scene {
  const SystemComposition* comp = nullptr;
  const PairTable* table = nullptr;
  double box_length = 0.0;
  int n_molecules = 0;
  std::vector<int> species_of;
  std::vector<int> site_begin;       // index into site_offset per molecule
  std::vector<Vec3> site_offset;     // rotate(orient, body_pos)
  std::vector<Vec3> com;
  bool want_volume_derivs = true;
};

Scene build_scene(const SystemComposition& comp, const SystemState& state, const PairTable& table,
                  bool want_volume_derivs);

// Per-worker accumulation target (one per thread; reduced in worker order).
struct EvalAccum {
  std::vector<Vec3> force;
  std::vector<Vec3> torque;
  double u_lj = 0.0;
  double u_elec_real = 0.0;
  double u_rf = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double virial = 0.0;

  void resize(int n) {
    force.assign(n, {});
    torque.assign(n, {});
    zero_scalars();
  }
  void zero() {
    std::fill(force.begin(), force.end(), Vec3{});
    std::fill(torque.begin(), torque.end(), Vec3{});
    zero_scalars();
  }
  void zero_scalars() { u_lj = u_elec_real = u_rf = s1 = s2 = virial = 0.0; }
  void add(const EvalAccum& o);
};

inline long pair_count(int n) { return static_cast<long>(n) * (n - 1) / 2; }

// flat index p in [0, N(N-1)/2) -> ordered pair (i, j), i < j
std::pair<int, int> unflatten_pair(long p, int n);

// Evaluates molecule pairs with flat indices in [first, last).
void evaluate_pair_range(const Scene& scene, long first, long last, EvalAccum& acc);

inline Vec3 minimum_image(Vec3 d, double box) {
  d.x -= box * std::nearbyint(d.x / box);
  d.y -= box * std::nearbyint(d.y / box);
  d.z -= box * std::nearbyint(d.z / box);
  return d;
}

}  // namespace tmd
