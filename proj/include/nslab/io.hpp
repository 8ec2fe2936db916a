#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nslab/wavefield.hpp"

namespace nslab {

/// Fixed 17-significant-digit float formatting: the round-trip-exact form
/// used in every CSV so that reruns are byte-identical.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
      : out_(path), n_cols_(columns.size()) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path.string());
    for (size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  void row(const std::vector<double>& values) {
    if (values.size() != n_cols_) throw std::logic_error("CsvWriter: column count mismatch");
    for (size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt17(values[i]);
    out_ << "\n";
  }

  void row_labeled(const std::string& label, const std::vector<double>& values) {
    out_ << label;
    for (double v : values) out_ << "," << fmt17(v);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
  size_t n_cols_;
};

/// Snapshot file: one JSON header line, then raw little-endian float64
/// (re, im) pairs in C row-major axis order.
inline void write_snapshot(const std::filesystem::path& path, const WaveField& psi, double time) {
  nlohmann::json h;
  h["dim"] = psi.grid.dim;
  h["points_per_axis"] = psi.grid.n;
  h["dims"] = std::vector<int>(psi.grid.dim, psi.grid.n);
  h["spacing"] = psi.grid.spacing;
  h["mass"] = psi.mass;
  h["time"] = time;
  h["count"] = psi.grid.size();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_snapshot: cannot open " + path.string());
  out << h.dump() << "\n";
  for (std::int64_t i = 0; i < psi.amplitude.size(); ++i) {
    double re = psi.amplitude[i].real(), im = psi.amplitude[i].imag();
    out.write(reinterpret_cast<const char*>(&re), sizeof re);
    out.write(reinterpret_cast<const char*>(&im), sizeof im);
  }
}

inline WaveField read_snapshot(const std::filesystem::path& path, double* time_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_snapshot: cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  nlohmann::json h = nlohmann::json::parse(header);
  Grid grid(h["dim"].get<int>(), h["points_per_axis"].get<int>(), h["spacing"].get<double>());
  WaveField psi(grid, h["mass"].get<double>());
  if (time_out) *time_out = h["time"].get<double>();
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    double re, im;
    in.read(reinterpret_cast<char*>(&re), sizeof re);
    in.read(reinterpret_cast<char*>(&im), sizeof im);
    psi.amplitude[i] = {re, im};
  }
  if (!in) throw std::runtime_error("read_snapshot: truncated payload in " + path.string());
  return psi;
}

/// SHA-1 of a byte string; used as the config content hash in run reports.
inline std::string sha1_hex(const std::string& data) {
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
  std::uint64_t total_bits = std::uint64_t(data.size()) * 8;
  std::string msg = data;
  msg.push_back(char(0x80));
  while (msg.size() % 64 != 56) msg.push_back(0);
  for (int i = 7; i >= 0; --i) msg.push_back(char((total_bits >> (8 * i)) & 0xFF));
  auto rol = [](std::uint32_t x, int n) { return (x << n) | (x >> (32 - n)); };
  for (size_t chunk = 0; chunk < msg.size(); chunk += 64) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint8_t(msg[chunk + 4 * i]) << 24) | (std::uint8_t(msg[chunk + 4 * i + 1]) << 16) |
             (std::uint8_t(msg[chunk + 4 * i + 2]) << 8) | std::uint8_t(msg[chunk + 4 * i + 3]);
    for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      std::uint32_t tmp = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }
  char out[41];
  std::snprintf(out, sizeof out, "%08x%08x%08x%08x%08x", h[0], h[1], h[2], h[3], h[4]);
  return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace nslab
