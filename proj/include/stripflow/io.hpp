#pragma once
/**
 * @brief Plot-ready exports: trajectory and diagnostics tables as CSV with
 *        shortest round-trip number formatting, a CSV reader for round trips
 *        and an output directory that appears atomically on commit.
 */
#include "evolution.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace stripflow {

/// Shortest decimal form that parses back to the same double; locale free.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(ErrorKind::Io, "number formatting failed");
  return std::string(buf, p);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error(ErrorKind::Io, "malformed number '" + s + "'");
  return v;
}

inline bool has_imaginary_part(const Trajectory& tr) {
  for (const auto& p : tr.profiles)
    if (p.g().imag().cwiseAbs().maxCoeff() != 0.0) return true;
  return false;
}

/// One row per (t, x node); columns t, x, g1..gm and g1_im..gm_im when complex.
inline std::string trajectory_csv(const Trajectory& tr) {
  if (tr.profiles.empty()) throw Error(ErrorKind::Domain, "trajectory is empty");
  const int m = tr.profiles.front().dim();
  const bool cplx = has_imaginary_part(tr);
  std::string out = "t,x";
  for (int c = 0; c < m; ++c) out += ",g" + std::to_string(c + 1);
  if (cplx)
    for (int c = 0; c < m; ++c) out += ",g" + std::to_string(c + 1) + "_im";
  out += '\n';
  for (std::size_t s = 0; s < tr.profiles.size(); ++s) {
    const auto& p = tr.profiles[s];
    const std::string t = format_double(tr.times[s]);
    for (int i = 0; i < p.nx(); ++i) {
      out += t;
      out += ',';
      out += format_double(p.axis().nodes()(i));
      for (int c = 0; c < m; ++c) out += ',' + format_double(p.g()(i, c).real());
      if (cplx)
        for (int c = 0; c < m; ++c) out += ',' + format_double(p.g()(i, c).imag());
      out += '\n';
    }
  }
  return out;
}

inline std::string diagnostics_csv(const Trajectory& tr) {
  std::string out = "step,t,h2alpha_norm,w1_margin,solve_residual,step_residual,step_iterations,status\n";
  for (const auto& d : tr.diagnostics) {
    out += std::to_string(d.step) + ',' + format_double(d.t) + ',' + format_double(d.h2alpha_norm) + ',' +
           format_double(d.w1_margin) + ',' + format_double(d.solve_residual) + ',' + format_double(d.step_residual) +
           ',' + std::to_string(d.step_iterations) + ',' + to_string(d.flag) + '\n';
  }
  return out;
}

struct TrajectoryTable {
  std::vector<double> times;
  std::vector<CMat> g;  // nx x m per sample
  RVec x;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

/// Reads a trajectory table written by trajectory_csv.
inline TrajectoryTable read_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "trajectory table is empty");
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "t" || header[1] != "x") throw Error(ErrorKind::Io, "unexpected table header");
  int m = 0;
  bool cplx = false;
  for (std::size_t k = 2; k < header.size(); ++k) {
    if (header[k].find("_im") != std::string::npos) cplx = true;
    else ++m;
  }
  if (cplx && static_cast<int>(header.size()) != 2 + 2 * m) throw Error(ErrorKind::Io, "unexpected table header");
  TrajectoryTable t;
  std::vector<double> xs;
  std::vector<std::vector<Complex>> rows;
  double cur = std::numeric_limits<double>::quiet_NaN();
  auto flush = [&] {
    if (rows.empty()) return;
    CMat g(static_cast<Eigen::Index>(rows.size()), m);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int c = 0; c < m; ++c) g(static_cast<Eigen::Index>(i), c) = rows[i][c];
    t.g.push_back(g);
    if (t.x.size() == 0) t.x = Eigen::Map<const RVec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    rows.clear();
    xs.clear();
  };
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size()) throw Error(ErrorKind::Io, "row " + std::to_string(n) + " has the wrong width");
    double tv = parse_double(f[0]);
    if (tv != cur) {
      flush();
      t.times.push_back(tv);
      cur = tv;
    }
    xs.push_back(parse_double(f[1]));
    std::vector<Complex> r(m);
    for (int c = 0; c < m; ++c)
      r[c] = Complex(parse_double(f[2 + c]), cplx ? parse_double(f[2 + m + c]) : 0.0);
    rows.push_back(r);
  }
  flush();
  return t;
}

/**
 * Files are staged in a sibling temporary directory and moved into place by a
 * single rename on commit. Without a commit the staging directory is removed,
 * so a failure between files never leaves a partial target behind.
 */
class AtomicDirectory {
 public:
  using Hook = std::function<void(const std::string&)>;

  explicit AtomicDirectory(std::filesystem::path target, Hook after_write = {})
      : target_(std::move(target)), hook_(std::move(after_write)) {
    namespace fs = std::filesystem;
    if (target_.empty()) throw Error(ErrorKind::Io, "output directory is empty");
    fs::path parent = fs::absolute(target_).parent_path();
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + parent.string() + "': " + ec.message());
    staging_ = parent / ("." + target_.filename().string() + ".partial-" + std::to_string(::getpid()));
    fs::remove_all(staging_, ec);
    fs::create_directory(staging_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + staging_.string() + "': " + ec.message());
  }

  AtomicDirectory(const AtomicDirectory&) = delete;
  AtomicDirectory& operator=(const AtomicDirectory&) = delete;

  ~AtomicDirectory() {
    if (!committed_) {
      std::error_code ec;
      std::filesystem::remove_all(staging_, ec);
    }
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(staging_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + (staging_ / name).string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw Error(ErrorKind::Io, "write failed for '" + (staging_ / name).string() + "'");
    if (hook_) hook_(name);
  }

  void commit() {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::path old;
    if (fs::exists(target_)) {
      old = staging_;
      old += ".old";
      fs::remove_all(old, ec);
      fs::rename(target_, old, ec);
      if (ec) throw Error(ErrorKind::Io, "cannot replace '" + target_.string() + "': " + ec.message());
    }
    fs::rename(staging_, target_, ec);
    if (ec) {
      if (!old.empty()) fs::rename(old, target_);
      throw Error(ErrorKind::Io, "cannot publish '" + target_.string() + "': " + ec.message());
    }
    committed_ = true;
    if (!old.empty()) fs::remove_all(old, ec);
  }

  const std::filesystem::path& staging() const { return staging_; }

 private:
  std::filesystem::path target_, staging_;
  Hook hook_;
  bool committed_ = false;
};

}  // namespace stripflow
