// Residual Massieu potential derivatives A^r_mn sampled from NVT averages of
// the potential energy and its analytic volume derivatives. The moment set
// {U, U^2, U^3, U_V, U_V U, U_V U^2, U_V^2, U_V^2 U, U_VV, U_VV U} feeds the
// fluctuation estimators for all eight derivatives up to third order in beta
// and second order in density.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "tmd/error.hpp"

namespace tmd {

class ByteWriter;
class ByteReader;

struct DerivativeEntry {
  int m = 0;
  int n = 0;
  double value = 0.0;
  double stderr_ = 0.0;
};

struct DerivativeReport {
  std::array<DerivativeEntry, 8> entries{};  // (1,0) (0,1) (2,0) (1,1) (0,2) (3,0) (2,1) (1,2)
  double compressibility = 0.0;              // Z = 1 + A01
  double residual_energy = 0.0;              // u^r/(kB T) = A10
  double residual_cv = 0.0;                  // c_v^r/kB = -A20
  long samples = 0;
  std::vector<std::string> warnings;

  const DerivativeEntry& find(int m, int n) const {
    for (const auto& e : entries)
      if (e.m == m && e.n == n) return e;
    throw Error("derivative (" + std::to_string(m) + "," + std::to_string(n) + ") not reported");
  }
};

class DerivativeAccumulator {
 public:
  // expected_samples sizes the block boundaries for uncertainty estimation;
  // 0 accumulates into a single block (no standard errors)
  DerivativeAccumulator(double temperature, double volume, long n_molecules, int n_blocks = 10,
                        long expected_samples = 0);
  DerivativeAccumulator() = default;

  // snapshot values must include the long-range corrections
  void add(double u, double du_dv, double d2u_dv2);

  long samples() const { return total_; }
  DerivativeReport finalize() const;

  void serialize(ByteWriter& w) const;
  void deserialize(ByteReader& r);

 private:
  struct Moments {
    long n = 0;
    // running means of shifted products, x = U - su, y = U_V - sv, z = U_VV - sw
    double x = 0, x2 = 0, x3 = 0;
    double y = 0, yx = 0, yx2 = 0;
    double y2 = 0, y2x = 0;
    double z = 0, zx = 0;

    void add(double xs, double ys, double zs);
    void combine(const Moments& o);  // weighted pooling
  };

  struct Estimates {
    double a10, a01, a20, a11, a02, a30, a21, a12;
  };
  Estimates evaluate(const Moments& m) const;

  double beta_ = 0.0;
  double volume_ = 0.0;
  long n_molecules_ = 0;
  int n_blocks_ = 1;
  long expected_ = 0;
  long total_ = 0;
  bool shift_set_ = false;
  double shift_u_ = 0.0, shift_uv_ = 0.0, shift_uvv_ = 0.0;
  std::vector<Moments> blocks_;
};

}  // namespace tmd
