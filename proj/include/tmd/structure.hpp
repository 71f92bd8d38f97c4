// Radial distribution functions between all LJ and dummy sites, with exact
// spherical-shell normalization, first-minimum location and solvation-number
// integrals consistent with direct neighbor counting.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tmd/model.hpp"
#include "tmd/potentials.hpp"

namespace tmd {

class ByteWriter;
class ByteReader;

struct RdfTable {
  std::string label_a, label_b;          // "<species><siteOrdinal>"
  int species_a = 0, species_b = 0;
  std::vector<double> r_mid;
  std::vector<double> g;
  std::vector<double> n_cum;             // cumulative neighbor count of B around A
  double bin_width = 0.0;
  double partner_density = 0.0;          // (N_B - delta)/V used for n_cum
  long snapshots = 0;
};

class RdfHistogram {
 public:
  // samples every LJ and dummy site; charge-only sites are skipped
  RdfHistogram(const SystemComposition& comp, double bin_width, double r_max);
  RdfHistogram() = default;

  void accumulate(const SystemState& state);
  long snapshots() const { return snapshots_; }
  int bins() const { return bins_; }
  int site_type_count() const { return static_cast<int>(types_.size()); }

  std::vector<RdfTable> finalize() const;

  void serialize(ByteWriter& w) const;
  void deserialize(ByteReader& r);

 private:
  struct SiteType {
    int species = 0;
    int site = 0;          // index within the species site list
    std::string label;
  };

  int pair_index(int ta, int tb) const {  // ta <= tb
    const int t = static_cast<int>(types_.size());
    return ta * t - ta * (ta + 1) / 2 + tb;
  }

  const SystemComposition* comp_ = nullptr;
  double bin_width_ = 0.0;
  double r_max_ = 0.0;
  int bins_ = 0;
  std::vector<SiteType> types_;
  std::vector<int> type_of_site_;            // per (species, site), -1 for charge sites
  std::vector<int> species_type_begin_;
  std::vector<std::vector<std::uint64_t>> counts_;  // per unordered type pair
  long snapshots_ = 0;
};

// first local minimum after the first peak above 1, on a 3-point smoothed
// table; NaN when no peak exists (gas-like g)
double first_minimum(const std::vector<double>& r_mid, const std::vector<double>& g);

// n_ij = 4 pi rho_j int_0^rmin r^2 g(r) dr with bin-wise exact shell volumes
double solvation_number(const RdfTable& table, double partner_density, double r_min);

}  // namespace tmd
