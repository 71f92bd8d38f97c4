#include "tmd/results.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tmd/checkpoint.hpp"

namespace tmd {

Stat BlockStat::stat() const {
  Stat s;
  s.n = total_;
  double wsum = 0.0;
  long cnt = 0;
  for (int b = 0; b < n_blocks_; ++b) {
    wsum += sum_[b];
    cnt += cnt_[b];
  }
  if (cnt == 0) return s;
  s.value = wsum / static_cast<double>(cnt);

  std::vector<double> block_means;
  for (int b = 0; b < n_blocks_; ++b)
    if (cnt_[b] > 0) block_means.push_back(sum_[b] / static_cast<double>(cnt_[b]));
  if (block_means.size() >= 2) {
    double mean = 0.0;
    for (double m : block_means) mean += m;
    mean /= static_cast<double>(block_means.size());
    double var = 0.0;
    for (double m : block_means) var += (m - mean) * (m - mean);
    var /= static_cast<double>(block_means.size() - 1);
    s.stderr_ = std::sqrt(var / static_cast<double>(block_means.size()));
  }
  return s;
}

void BlockStat::serialize(ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(n_blocks_));
  w.i64(expected_);
  w.i64(total_);
  w.f64_vec(sum_);
  w.u64(cnt_.size());
  for (auto v : cnt_) w.i64(v);
}

void BlockStat::deserialize(ByteReader& r) {
  n_blocks_ = static_cast<int>(r.u32());
  expected_ = r.i64();
  total_ = r.i64();
  sum_ = r.f64_vec<double>();
  const std::uint64_t n = r.u64();
  cnt_.resize(n);
  for (auto& v : cnt_) v = r.i64();
  if (n_blocks_ < 1 || sum_.size() != static_cast<std::size_t>(n_blocks_) ||
      cnt_.size() != sum_.size())
    throw IoError("block stat: corrupted payload");
}

namespace {

constexpr const char* kUnitsLine =
    "# units: reduced Lennard-Jones units (sigma = eps = m = kB = 1)\n";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12e", v);
  return buf;
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name)
    out.push_back((std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_');
  return out.empty() ? std::string("x") : out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write results file '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

std::vector<std::string> emit_results(const ResultsBundle& b, const std::string& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create output directory '" + directory + "': " + ec.message());

  std::vector<std::string> paths;
  auto emit = [&](const std::string& name, const std::string& content) {
    const std::string path = directory + "/" + name;
    write_file(path, content);
    paths.push_back(path);
  };

  // summary
  {
    std::string s;
    s += "format_version 1\n";
    s += "# simulation summary\n";
    s += kUnitsLine;
    s += "seed " + std::to_string(b.seed) + "\n";
    s += "equilibration_steps " + std::to_string(b.equilibration_steps) + "\n";
    s += "production_steps " + std::to_string(b.production_steps) + "\n";
    s += "extended_step " + std::to_string(b.n_ext) + "\n";
    s += "timestep " + fmt(b.dt) + "\n";
    s += "molecules " + std::to_string(b.molecule_count) + "\n";
    s += "temperature_target " + fmt(b.temperature) + "\n";
    s += "density " + fmt(b.density) + "\n";
    auto stat_line = [&](const char* key, const Stat& st) {
      if (st.n > 0) s += std::string(key) + " " + fmt(st.value) + " +/- " + fmt(st.stderr_) + "\n";
    };
    stat_line("t_kin_trans", b.t_kin_trans);
    stat_line("t_kin_rot", b.t_kin_rot);
    stat_line("u_pot_per_molecule", b.u_pot_per_molecule);
    if (b.pressure_available) {
      stat_line("pressure", b.pressure);
      stat_line("compressibility_factor", b.compressibility_factor);
    }
    if (b.massieu) {
      s += "massieu_Z " + fmt(b.massieu->compressibility) + "\n";
      s += "massieu_u_res_per_kT " + fmt(b.massieu->residual_energy) + "\n";
      s += "massieu_cv_res_per_kB " + fmt(b.massieu->residual_cv) + "\n";
    }
    for (const auto& t : b.transport) {
      if (!t.estimate.has_value) {
        s += sanitize(t.name) + " unavailable\n";
        continue;
      }
      s += sanitize(t.name) + " " + fmt(t.estimate.value) + " +/- " + fmt(t.estimate.stderr_) +
           "  # units: " + t.units + (t.estimate.converged ? "" : "  [UNCONVERGED]") + "\n";
    }
    for (const auto& [key, value] : b.scalars) s += sanitize(key) + " " + fmt(value) + "\n";
    for (const auto& w : b.warnings) s += "# warning: " + w + "\n";
    emit("summary.dat", s);
  }

  if (b.massieu) {
    std::string s;
    s += "format_version 1\n";
    s += "# residual Massieu potential derivatives\n";
    s += kUnitsLine;
    s += "# samples " + std::to_string(b.massieu->samples) + "\n";
    s += "# columns: m n value stderr\n";
    for (const auto& e : b.massieu->entries)
      s += std::to_string(e.m) + " " + std::to_string(e.n) + " " + fmt(e.value) + " " +
           fmt(e.stderr_) + "\n";
    emit("massieu.dat", s);
  }

  for (const auto& t : b.rdf) {
    std::string s;
    s += "format_version 1\n";
    s += "# radial distribution function " + t.label_a + "-" + t.label_b + "\n";
    s += kUnitsLine;
    s += "# snapshots " + std::to_string(t.snapshots) + "\n";
    s += "# bin_width " + fmt(t.bin_width) + "\n";
    s += "# partner_density " + fmt(t.partner_density) + "\n";
    s += "# columns: r_mid g n_cum\n";
    for (std::size_t i = 0; i < t.r_mid.size(); ++i)
      s += fmt(t.r_mid[i]) + " " + fmt(t.g[i]) + " " + fmt(t.n_cum[i]) + "\n";
    emit("rdf_" + sanitize(t.label_a) + "_" + sanitize(t.label_b) + ".dat", s);
  }

  for (const auto& t : b.acfs) {
    std::string s;
    s += "format_version 1\n";
    s += "# autocorrelation function: " + t.name + "\n";
    s += kUnitsLine;
    s += "# acf units: " + t.units + "\n";
    s += "# n_ext " + std::to_string(t.n_ext) + "\n";
    s += "# lags " + std::to_string(t.c.size()) + "\n";
    s += "# dt_extended " + fmt(t.dt) + "\n";
    s += "# columns: t C(t) integral_0^t\n";
    for (std::size_t i = 0; i < t.c.size(); ++i)
      s += fmt(static_cast<double>(i) * t.dt) + " " + fmt(t.c[i]) + " " +
           fmt(t.running_integral[i]) + "\n";
    emit("acf_" + sanitize(t.name) + ".dat", s);
  }

  return paths;
}

}  // namespace tmd
