#pragma once

namespace tmd {

// Potential energy decomposition plus the analytic volume derivatives.
// Contributions not used by the active electrostatics method stay exactly 0.
// `elec_self` holds the Ewald self term together with the intramolecular
// excluded-pair correction.
struct EnergyBreakdown {
  double lj = 0.0;
  double elec_real = 0.0;
  double elec_recip = 0.0;
  double elec_self = 0.0;
  double rf = 0.0;
  double lrc = 0.0;

  double du_dv_explicit = 0.0;
  double du_dv_lrc = 0.0;
  double d2u_dv2_explicit = 0.0;
  double d2u_dv2_lrc = 0.0;

  double total() const { return lj + elec_real + elec_recip + elec_self + rf + lrc; }
  double du_dv() const { return du_dv_explicit + du_dv_lrc; }
  double d2u_dv2() const { return d2u_dv2_explicit + d2u_dv2_lrc; }
};

}  // namespace tmd
