/*
 * io.hpp
 *
 * Tensor file formats and dataset ingestion.
 *
 * dense-binary (little-endian throughout):
 *   bytes  0..11  magic "RTCTENSOR3\0\1" (10 ASCII chars, NUL, format version 1)
 *   bytes 12..35  n1, n2, n3 as uint64
 *   bytes 36..    n1*n2*n3 float64 values, first index fastest
 * NaN marks a missing cell.
 *
 * long-csv: header "location,time,day,value", one row per cell, 0-based
 * indices. Value may be "nan" / "NaN" / empty; cells without a row count as
 * missing. A repeated cell is a parse error.
 */
#pragma once

#include "rtc/tensor.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtc {

static_assert(std::endian::native == std::endian::little, "dense-binary I/O assumes a little-endian host");

inline constexpr std::array<char, 12> kDenseMagic{'R', 'T', 'C', 'T', 'E', 'N', 'S', 'O', 'R', '3', '\0', '\1'};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FileFormat { DenseBinary, LongCsv };

inline FileFormat parse_file_format(const std::string& s) {
  if (s == "dense-binary" || s == "bin") return FileFormat::DenseBinary;
  if (s == "long-csv" || s == "csv") return FileFormat::LongCsv;
  throw std::invalid_argument("unknown file format '" + s + "' (expected dense-binary or long-csv)");
}

inline std::string to_string(FileFormat f) { return f == FileFormat::DenseBinary ? "dense-binary" : "long-csv"; }

// Tensor plus which cells carry data. Missing cells hold 0.
struct MaskedTensor {
  Tensor3 values;
  ObservationMask mask;
};

// Writes values; cells where `mask` is false are written as NaN.
inline void write_dense(std::ostream& os, const Tensor3& t, const ObservationMask* mask = nullptr) {
  if (mask) require_same_dims(t.dims(), mask->dims(), "write_dense");
  os.write(kDenseMagic.data(), kDenseMagic.size());
  const std::array<std::uint64_t, 3> dims{t.dims().n1, t.dims().n2, t.dims().n3};
  os.write(reinterpret_cast<const char*>(dims.data()), sizeof(dims));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double v = (mask && !(*mask)[k]) ? nan : t[k];
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  if (!os) throw std::runtime_error("write_dense: stream error");
}

inline MaskedTensor read_dense(std::istream& is) {
  std::array<char, 12> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kDenseMagic) throw ParseError("dense-binary: bad magic");
  std::array<std::uint64_t, 3> n{};
  is.read(reinterpret_cast<char*>(n.data()), sizeof(n));
  if (!is) throw ParseError("dense-binary: truncated header");
  const Dims d{n[0], n[1], n[2]};
  check_dims(d);
  MaskedTensor out{Tensor3(d), ObservationMask(d, true)};
  for (std::size_t k = 0; k < d.size(); ++k) {
    double v = 0.0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw ParseError("dense-binary: expected " + std::to_string(d.size()) + " values, got " + std::to_string(k));
    if (std::isnan(v)) out.mask.set(k, false);
    else if (!std::isfinite(v)) throw NonFiniteError("dense-binary: infinite value at offset " + std::to_string(k));
    else out.values[k] = v;
  }
  if (is.peek() != std::char_traits<char>::eof()) throw ParseError("dense-binary: trailing bytes after data");
  return out;
}

inline void write_long_csv(std::ostream& os, const Tensor3& t, const ObservationMask* mask = nullptr) {
  if (mask) require_same_dims(t.dims(), mask->dims(), "write_long_csv");
  const auto [n1, n2, n3] = t.dims();
  os << "location,time,day,value\n";
  char buf[64];
  for (std::size_t k = 0; k < n3; ++k)
    for (std::size_t j = 0; j < n2; ++j)
      for (std::size_t i = 0; i < n1; ++i) {
        os << i << ',' << j << ',' << k << ',';
        if (mask && !(*mask)(i, j, k)) {
          os << "nan\n";
          continue;
        }
        // shortest round-trip representation
        const auto res = std::to_chars(buf, buf + sizeof buf, t(i, j, k));
        os.write(buf, res.ptr - buf) << '\n';
      }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::size_t parse_index(const std::string& s, std::size_t line_no) {
  std::size_t v = 0;
  const auto t = trim(s);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw ParseError("long-csv line " + std::to_string(line_no) + ": bad index '" + s + "'");
  return v;
}

inline bool is_nan_token(const std::string& t) { return t.empty() || t == "nan" || t == "NaN" || t == "NAN"; }

}  // namespace detail

// Dims must be declared: a long-csv file does not carry its shape.
inline MaskedTensor read_long_csv(std::istream& is, const Dims& dims) {
  check_dims(dims);
  MaskedTensor out{Tensor3(dims), ObservationMask(dims, false)};
  std::vector<std::uint8_t> seen(dims.size(), 0);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) throw ParseError("long-csv: empty file");
  ++line_no;
  if (detail::trim(line) != "location,time,day,value")
    throw ParseError("long-csv: expected header 'location,time,day,value', got '" + detail::trim(line) + "'");
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 4)
      throw ParseError("long-csv line " + std::to_string(line_no) + ": expected 4 fields, got " + std::to_string(f.size()));
    const std::size_t i = detail::parse_index(f[0], line_no);
    const std::size_t j = detail::parse_index(f[1], line_no);
    const std::size_t k = detail::parse_index(f[2], line_no);
    if (i >= dims.n1 || j >= dims.n2 || k >= dims.n3)
      throw ShapeError("long-csv line " + std::to_string(line_no) + ": cell (" + std::to_string(i) + "," +
                       std::to_string(j) + "," + std::to_string(k) + ") outside declared dims " + dims.str());
    const std::size_t off = i + dims.n1 * (j + dims.n2 * k);
    if (seen[off]) throw ParseError("long-csv line " + std::to_string(line_no) + ": duplicate cell");
    seen[off] = 1;
    const auto v = detail::trim(f[3]);
    if (detail::is_nan_token(v)) continue;
    double x = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
      throw ParseError("long-csv line " + std::to_string(line_no) + ": bad value '" + v + "'");
    if (!std::isfinite(x)) throw NonFiniteError("long-csv line " + std::to_string(line_no) + ": non-finite value");
    out.values(i, j, k) = x;
    out.mask.set(i, j, k, true);
  }
  return out;
}

struct DatasetDescriptor {
  std::string name;
  std::string path;
  FileFormat format = FileFormat::DenseBinary;
  std::optional<Dims> dims;  // required for long-csv; checked against the header for dense-binary
  std::string units;         // metadata only
};

struct ValidationReport {
  double min = 0.0;
  double max = 0.0;
  double missing_rate = 0.0;
  std::size_t cells = 0;
};

struct Dataset {
  Tensor3 x0;
  ObservationMask native_mask;
  ValidationReport report;
};

inline ValidationReport validate_dataset(const Tensor3& x, const ObservationMask& mask) {
  ValidationReport r;
  r.cells = x.size();
  r.missing_rate = 1.0 - mask.observation_rate();
  bool first = true;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!mask[k]) continue;
    if (first) r.min = r.max = x[k];
    r.min = std::min(r.min, x[k]);
    r.max = std::max(r.max, x[k]);
    first = false;
  }
  return r;
}

inline Dataset ingest(const DatasetDescriptor& desc) {
  std::ifstream in(desc.path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file '" + desc.path + "'");
  MaskedTensor mt = [&] {
    if (desc.format == FileFormat::LongCsv) {
      if (!desc.dims) throw std::invalid_argument("long-csv dataset '" + desc.name + "' needs declared dims");
      return read_long_csv(in, *desc.dims);
    }
    return read_dense(in);
  }();
  if (desc.dims && !(mt.values.dims() == *desc.dims))
    throw ShapeError("dataset '" + desc.name + "': declared dims " + desc.dims->str() + " but file holds " +
                     mt.values.dims().str());
  Dataset ds{std::move(mt.values), std::move(mt.mask), {}};
  ds.report = validate_dataset(ds.x0, ds.native_mask);
  return ds;
}

inline void save_tensor(const std::string& path, FileFormat format, const Tensor3& t,
                        const ObservationMask* mask = nullptr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  if (format == FileFormat::DenseBinary) write_dense(out, t, mask);
  else write_long_csv(out, t, mask);
}

}  // namespace rtc
