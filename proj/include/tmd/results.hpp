#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tmd/greenkubo.hpp"
#include "tmd/massieu.hpp"
#include "tmd/structure.hpp"

namespace tmd {

struct Stat {
  double value = 0.0;
  double stderr_ = 0.0;
  long n = 0;
};

// Block-averaged scalar time series with fixed expected length.
class BlockStat {
 public:
  BlockStat(int n_blocks = 10, long expected = 0)
      : n_blocks_(expected > 0 ? n_blocks : 1), expected_(expected) {
    if (n_blocks_ < 1) n_blocks_ = 1;
    sum_.assign(n_blocks_, 0.0);
    cnt_.assign(n_blocks_, 0);
  }

  void add(double x) {
    int b = 0;
    if (expected_ > 0) b = static_cast<int>((total_ * n_blocks_) / expected_);
    if (b >= n_blocks_) b = n_blocks_ - 1;
    sum_[b] += x;
    cnt_[b] += 1;
    ++total_;
  }

  long samples() const { return total_; }
  Stat stat() const;

  void serialize(ByteWriter& w) const;
  void deserialize(ByteReader& r);

 private:
  int n_blocks_ = 1;
  long expected_ = 0;
  long total_ = 0;
  std::vector<double> sum_;
  std::vector<long> cnt_;
};

struct AcfTable {
  std::string name;       // e.g. "electric_current", "heat_flux", "vacf_<species>"
  std::string units;
  double dt = 0.0;        // extended-step spacing
  int n_ext = 1;
  std::vector<double> c;
  std::vector<double> running_integral;
};

struct TransportValue {
  std::string name;
  std::string units;
  TransportEstimate estimate;
};

struct ResultsBundle {
  // run metadata
  std::uint64_t seed = 0;
  long equilibration_steps = 0;
  long production_steps = 0;
  int n_ext = 1;
  double dt = 0.0;
  double temperature = 0.0;
  double density = 0.0;
  int molecule_count = 0;

  Stat t_kin_trans, t_kin_rot, u_pot_per_molecule, pressure, compressibility_factor;
  bool pressure_available = false;

  std::optional<DerivativeReport> massieu;
  std::vector<RdfTable> rdf;
  std::vector<AcfTable> acfs;
  std::vector<TransportValue> transport;
  std::vector<std::pair<std::string, double>> scalars;  // solvation numbers, shell radii
  std::vector<std::string> warnings;
};

// Deterministic file emission: summary.dat, massieu.dat, rdf_*.dat, acf_*.dat.
// Re-emitting the same bundle produces byte-identical files.
std::vector<std::string> emit_results(const ResultsBundle& bundle, const std::string& directory);

}  // namespace tmd
