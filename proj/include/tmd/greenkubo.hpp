// Ring-buffered flux autocorrelation machinery with an extended time step,
// plus the flux definitions and Green-Kubo transport-coefficient estimators:
// electric conductivity, mixture thermal conductivity, self-diffusion and the
// residence time with the Impey grace period.
#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tmd/model.hpp"
#include "tmd/potentials.hpp"

namespace tmd {

class ByteWriter;
class ByteReader;

// Multiple-origin autocorrelation accumulator: every stored sample acts as a
// time origin for every newer sample within the window. Memory is O(M * dim),
// independent of the number of samples pushed.
class CorrelationSet {
 public:
  CorrelationSet(int dim, int length, int n_blocks = 10, long expected_samples = 0);
  CorrelationSet() = default;

  // origin_weight scales all products with this sample as the origin
  // (1/n(t0) for residence-time correlation); origin_valid = false excludes
  // it as an origin entirely.
  void push(std::span<const double> sample, double origin_weight = 1.0, bool origin_valid = true);

  int dim() const { return dim_; }
  int length() const { return length_; }
  long samples() const { return pushes_; }

  double acf(int lag) const;            // pooled <j(t0) . j(t0+lag)>
  long origin_count(int lag) const;
  double integral(double dt) const;     // trapezoidal over all lags
  std::vector<double> block_integrals(double dt) const;
  double acf_sum(int block, int lag) const { return acf_sum_[idx(block, lag)]; }
  long acf_count(int block, int lag) const { return acf_cnt_[idx(block, lag)]; }
  int blocks() const { return n_blocks_; }

  std::size_t memory_bytes() const;

  void serialize(ByteWriter& w) const;
  void deserialize(ByteReader& r);

 private:
  std::size_t idx(int block, int lag) const {
    return static_cast<std::size_t>(block) * length_ + lag;
  }

  int dim_ = 0;
  int length_ = 0;
  int n_blocks_ = 1;
  long expected_ = 0;
  long pushes_ = 0;
  std::vector<double> ring_;
  std::vector<double> ring_weight_;
  std::vector<std::uint8_t> ring_valid_;
  std::vector<double> acf_sum_;
  std::vector<long> acf_cnt_;
};

struct PlateauParams {
  double window = 0.2;     // trailing fraction of the lag window inspected
  double threshold = 0.05; // mean |C| over the tail vs C(0)
};

struct TransportEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  bool converged = true;
  bool has_value = false;
};

// value = prefactor * integral(C dt); uncertainty from block-wise integrals;
// the plateau check flags (never truncates) unconverged tails.
TransportEstimate estimate_transport(const CorrelationSet& corr, double dt, double prefactor,
                                     const PlateauParams& plateau);

// j_e = sum over net-charged molecules of q v (Eq. for the electric current
// flux); neutral molecules do not contribute.
Vec3 electric_current_flux(const SystemComposition& comp, const SystemState& state);

// Microscopic heat flow of a rigid-molecule mixture: kinetic + potential
// convection, pair interaction transport (force and torque terms), and the
// partial-molar-enthalpy subtraction. h_per_species must cover every species.
Vec3 heat_flux(const SystemComposition& comp, const SystemState& state, const PairTable& table,
               const std::vector<double>& h_per_species);

// COM-distance occupancy bitmaps for the residence-time correlation
void shell_occupancy(const SystemComposition& comp, const SystemState& state, int solute_species,
                     int solvent_species, double radius, std::vector<std::uint8_t>& out);

// Residence-time correlator: per-solute occupancy histories with the Impey
// rule (excursions shorter than the grace window stay "inside"), normalized
// per origin by the origin shell population.
class ResidenceTracker {
 public:
  ResidenceTracker(int n_solute, int n_solvent, int length, int grace_steps, int n_blocks = 10,
                   long expected_samples = 0);
  ResidenceTracker() = default;

  void push(const std::vector<std::uint8_t>& raw);  // n_solute * n_solvent entries
  void flush();                                     // commit the pending tail (end of run)

  long committed() const { return committed_; }
  // pooled survival correlation C(lag); lag 0 is 1 by construction
  double acf(int lag) const;
  TransportEstimate residence_time(double dt, const PlateauParams& plateau) const;

  void serialize(ByteWriter& w) const;
  void deserialize(ByteReader& r);

 private:
  void commit(const std::vector<std::uint8_t>& bits);

  int n_solute_ = 0;
  int n_solvent_ = 0;
  int grace_ = 0;
  int length_ = 0;
  std::deque<std::vector<std::uint8_t>> pending_;   // raw bitmaps awaiting the grace decision
  std::vector<long> prev_one_;                      // per channel, time of last committed-or-raw 1
  long raw_count_ = 0;
  long committed_ = 0;
  std::vector<CorrelationSet> per_solute_;
  std::vector<double> scratch_;
};

}  // namespace tmd
