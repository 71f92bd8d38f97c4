#include "tmd/massieu.hpp"

#include <cmath>

#include "tmd/checkpoint.hpp"

namespace tmd {

DerivativeAccumulator::DerivativeAccumulator(double temperature, double volume, long n_molecules,
                                             int n_blocks, long expected_samples)
    : beta_(1.0 / temperature),
      volume_(volume),
      n_molecules_(n_molecules),
      n_blocks_(expected_samples > 0 ? n_blocks : 1),
      expected_(expected_samples) {
  if (temperature <= 0.0 || volume <= 0.0 || n_molecules <= 0)
    throw ConfigError("derivative accumulator: bad state constants");
  if (n_blocks_ < 1) n_blocks_ = 1;
  blocks_.resize(n_blocks_);
}

void DerivativeAccumulator::Moments::add(double xs, double ys, double zs) {
  ++n;
  const double w = 1.0 / static_cast<double>(n);
  x += (xs - x) * w;
  x2 += (xs * xs - x2) * w;
  x3 += (xs * xs * xs - x3) * w;
  y += (ys - y) * w;
  yx += (ys * xs - yx) * w;
  yx2 += (ys * xs * xs - yx2) * w;
  y2 += (ys * ys - y2) * w;
  y2x += (ys * ys * xs - y2x) * w;
  z += (zs - z) * w;
  zx += (zs * xs - zx) * w;
}

void DerivativeAccumulator::Moments::combine(const Moments& o) {
  if (o.n == 0) return;
  const double w = static_cast<double>(o.n) / static_cast<double>(n + o.n);
  x += (o.x - x) * w;
  x2 += (o.x2 - x2) * w;
  x3 += (o.x3 - x3) * w;
  y += (o.y - y) * w;
  yx += (o.yx - yx) * w;
  yx2 += (o.yx2 - yx2) * w;
  y2 += (o.y2 - y2) * w;
  y2x += (o.y2x - y2x) * w;
  z += (o.z - z) * w;
  zx += (o.zx - zx) * w;
  n += o.n;
}

void DerivativeAccumulator::add(double u, double du_dv, double d2u_dv2) {
  if (!std::isfinite(u) || !std::isfinite(du_dv) || !std::isfinite(d2u_dv2))
    throw NumericalError("derivative accumulator: non-finite snapshot");
  if (!shift_set_) {
    // center the product moments on the first snapshot; central moments are
    // shift-invariant and this keeps the running sums well conditioned
    shift_u_ = u;
    shift_uv_ = du_dv;
    shift_uvv_ = d2u_dv2;
    shift_set_ = true;
  }
  int block = 0;
  if (expected_ > 0 && expected_ > 1)
    block = static_cast<int>((total_ * n_blocks_) / expected_);
  if (block >= n_blocks_) block = n_blocks_ - 1;
  blocks_[block].add(u - shift_u_, du_dv - shift_uv_, d2u_dv2 - shift_uvv_);
  ++total_;
}

DerivativeAccumulator::Estimates DerivativeAccumulator::evaluate(const Moments& m) const {
  const double beta = beta_;
  const double v = volume_;
  const double n = static_cast<double>(n_molecules_);

  const double mean_u = m.x + shift_u_;
  const double mean_uv = m.y + shift_uv_;
  const double mean_uvv = m.z + shift_uvv_;

  // central moments from the shifted raw means
  const double var_u = m.x2 - m.x * m.x;
  const double var_uv = m.y2 - m.y * m.y;
  const double cov_u_uv = m.yx - m.y * m.x;
  const double cov_u_uvv = m.zx - m.z * m.x;
  const double u3c = m.x3 - 3.0 * m.x2 * m.x + 2.0 * m.x * m.x * m.x;
  const double u2uv_c = m.yx2 - 2.0 * m.x * m.yx - m.x2 * m.y + 2.0 * m.x * m.x * m.y;
  const double uuv2_c = m.y2x - 2.0 * m.y * m.yx - m.y2 * m.x + 2.0 * m.y * m.y * m.x;

  Estimates e{};
  e.a10 = beta * mean_u / n;
  e.a01 = -beta * v * mean_uv / n;
  e.a20 = -beta * beta * var_u / n;
  e.a11 = -(beta * v / n) * (mean_uv - beta * cov_u_uv);
  e.a02 = (beta * v / n) * (2.0 * mean_uv + v * (mean_uvv - beta * var_uv));
  e.a30 = beta * beta * beta * u3c / n;
  e.a21 = (beta * beta * v / n) * (2.0 * cov_u_uv - beta * u2uv_c);
  e.a12 = (beta / n) * (2.0 * v * (mean_uv - beta * cov_u_uv) +
                        v * v * (mean_uvv - 2.0 * beta * var_uv - beta * cov_u_uvv +
                                 beta * beta * uuv2_c));
  return e;
}

DerivativeReport DerivativeAccumulator::finalize() const {
  if (total_ < 2) throw Error("derivative accumulator: at least 2 samples required");

  Moments pooled;
  for (const auto& b : blocks_) pooled.combine(b);
  const Estimates est = evaluate(pooled);

  // block-wise estimates for standard errors
  std::vector<Estimates> block_est;
  for (const auto& b : blocks_)
    if (b.n >= 2) block_est.push_back(evaluate(b));

  auto stderr_of = [&](double Estimates::* member, double pooled_value) {
    if (block_est.size() < 2) return 0.0;
    double mean = 0.0;
    for (const auto& b : block_est) mean += b.*member;
    mean /= static_cast<double>(block_est.size());
    double var = 0.0;
    for (const auto& b : block_est) var += (b.*member - mean) * (b.*member - mean);
    var /= static_cast<double>(block_est.size() - 1);
    (void)pooled_value;
    return std::sqrt(var / static_cast<double>(block_est.size()));
  };

  DerivativeReport rep;
  rep.samples = total_;
  rep.entries[0] = {1, 0, est.a10, stderr_of(&Estimates::a10, est.a10)};
  rep.entries[1] = {0, 1, est.a01, stderr_of(&Estimates::a01, est.a01)};
  rep.entries[2] = {2, 0, est.a20, stderr_of(&Estimates::a20, est.a20)};
  rep.entries[3] = {1, 1, est.a11, stderr_of(&Estimates::a11, est.a11)};
  rep.entries[4] = {0, 2, est.a02, stderr_of(&Estimates::a02, est.a02)};
  rep.entries[5] = {3, 0, est.a30, stderr_of(&Estimates::a30, est.a30)};
  rep.entries[6] = {2, 1, est.a21, stderr_of(&Estimates::a21, est.a21)};
  rep.entries[7] = {1, 2, est.a12, stderr_of(&Estimates::a12, est.a12)};
  rep.compressibility = 1.0 + est.a01;
  rep.residual_energy = est.a10;
  rep.residual_cv = -est.a20;
  if (total_ < 10000)
    rep.warnings.push_back(
        "third-order derivatives (A30, A21, A12) use third moments; fewer than 1e4 extended-step "
        "samples accumulated, expect slow convergence");
  return rep;
}

void DerivativeAccumulator::serialize(ByteWriter& w) const {
  w.f64(beta_);
  w.f64(volume_);
  w.i64(n_molecules_);
  w.u32(static_cast<std::uint32_t>(n_blocks_));
  w.i64(expected_);
  w.i64(total_);
  w.u8(shift_set_ ? 1 : 0);
  w.f64(shift_u_);
  w.f64(shift_uv_);
  w.f64(shift_uvv_);
  for (const auto& b : blocks_) {
    w.i64(b.n);
    for (double v : {b.x, b.x2, b.x3, b.y, b.yx, b.yx2, b.y2, b.y2x, b.z, b.zx}) w.f64(v);
  }
}

void DerivativeAccumulator::deserialize(ByteReader& r) {
  beta_ = r.f64();
  volume_ = r.f64();
  n_molecules_ = r.i64();
  n_blocks_ = static_cast<int>(r.u32());
  expected_ = r.i64();
  total_ = r.i64();
  shift_set_ = r.u8() != 0;
  shift_u_ = r.f64();
  shift_uv_ = r.f64();
  shift_uvv_ = r.f64();
  blocks_.assign(n_blocks_, {});
  for (auto& b : blocks_) {
    b.n = r.i64();
    b.x = r.f64();
    b.x2 = r.f64();
    b.x3 = r.f64();
    b.y = r.f64();
    b.yx = r.f64();
    b.yx2 = r.f64();
    b.y2 = r.f64();
    b.y2x = r.f64();
    b.z = r.f64();
    b.zx = r.f64();
  }
}

}  // namespace tmd
