#pragma once

// MMFE: binary container for one FeatureMatrix.
//
// All integers and floats are little-endian.
//
//   offset size  field
//   0      4     magic "MMFE"
//   4      2     version (u16) = 1
//   6      1     modality code (u8)
//   7      1     dtype code (u8), 0 = f32
//   8      8     row_count (u64)
//   16     4     dim (u32)
//   20     8     id_table_bytes (u64)
//   28     ...   id table: row_count x (u16 length + UTF-8 bytes)
//   ...    ...   payload: row_count * dim f32, row-major
//
// The file length must equal 28 + id_table_bytes + 4 * row_count * dim.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mmrec/core.hpp"

namespace mmrec {

inline constexpr std::array<char, 4> kMmfeMagic{'M', 'M', 'F', 'E'};
inline constexpr std::uint16_t kMmfeVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 0;
inline constexpr std::size_t kMmfeHeaderBytes = 28;

struct FeatureFileHeader {
  std::array<char, 4> magic = kMmfeMagic;
  std::uint16_t version = kMmfeVersion;
  std::uint8_t modality_code = 0;
  std::uint8_t dtype_code = kDtypeF32;
  std::uint64_t row_count = 0;
  std::uint32_t dim = 0;
  std::uint64_t id_table_bytes = 0;
};

namespace detail {

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t b = 0; b < sizeof(U); ++b)
    out.push_back(static_cast<char>((value >> (8 * b)) & 0xFF));
}

template <typename U>
U get_le(const unsigned char* p) {
  U value = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b)
    value |= static_cast<U>(p[b]) << (8 * b);
  return value;
}

inline void write_file_atomically(const std::filesystem::path& path,
                                  const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "rename to " + path.string() + ": " + ec.message());
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed: " + path.string());
  return bytes;
}

}  // namespace detail

inline std::string encode_features(const FeatureMatrix& m) {
  m.validate();
  if (m.dim > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorCode::InvalidValue, "dim exceeds u32");
  std::uint64_t id_bytes = 0;
  for (const auto& id : m.row_ids) {
    if (id.size() > std::numeric_limits<std::uint16_t>::max())
      throw Error(ErrorCode::InvalidValue, "row id longer than 65535 bytes");
    id_bytes += 2 + id.size();
  }
  std::string out;
  out.reserve(kMmfeHeaderBytes + id_bytes + m.values.size() * 4);
  out.append(kMmfeMagic.data(), kMmfeMagic.size());
  detail::put_le<std::uint16_t>(out, kMmfeVersion);
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(m.modality));
  detail::put_le<std::uint8_t>(out, kDtypeF32);
  detail::put_le<std::uint64_t>(out, m.rows());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim));
  detail::put_le<std::uint64_t>(out, id_bytes);
  for (const auto& id : m.row_ids) {
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out += id;
  }
  for (float v : m.values) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline FeatureFileHeader decode_header(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() >= 4 && !std::equal(kMmfeMagic.begin(), kMmfeMagic.end(), bytes.begin()))
    throw Error(ErrorCode::BadMagic, "");
  if (bytes.size() < kMmfeHeaderBytes)
    throw Error(ErrorCode::TruncatedFile, "header incomplete");
  FeatureFileHeader h;
  h.version = detail::get_le<std::uint16_t>(p + 4);
  h.modality_code = p[6];
  h.dtype_code = p[7];
  h.row_count = detail::get_le<std::uint64_t>(p + 8);
  h.dim = detail::get_le<std::uint32_t>(p + 16);
  h.id_table_bytes = detail::get_le<std::uint64_t>(p + 20);
  if (h.version != kMmfeVersion)
    throw Error(ErrorCode::BadVersion, std::to_string(h.version));
  if (h.dtype_code != kDtypeF32)
    throw Error(ErrorCode::BadDtype, std::to_string(h.dtype_code));
  if (!modality_from_code(h.modality_code))
    throw Error(ErrorCode::Malformed, "modality code " + std::to_string(h.modality_code));
  if (h.dim == 0) throw Error(ErrorCode::Malformed, "dim is zero");
  return h;
}

inline FeatureMatrix decode_features(const std::string& bytes) {
  const FeatureFileHeader h = decode_header(bytes);
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  if (h.row_count > kMax / 4 / h.dim || h.id_table_bytes > kMax / 2)
    throw Error(ErrorCode::Malformed, "declared sizes overflow");
  const std::uint64_t payload = h.row_count * h.dim * 4;
  if (payload > kMax - kMmfeHeaderBytes - h.id_table_bytes)
    throw Error(ErrorCode::Malformed, "declared sizes overflow");
  const std::uint64_t expected = kMmfeHeaderBytes + h.id_table_bytes + payload;
  if (bytes.size() < expected)
    throw Error(ErrorCode::TruncatedFile, "expected " + std::to_string(expected) +
                                              " bytes, got " + std::to_string(bytes.size()));
  if (bytes.size() > expected)
    throw Error(ErrorCode::SizeMismatch, "expected " + std::to_string(expected) +
                                             " bytes, got " + std::to_string(bytes.size()));

  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  FeatureMatrix m;
  m.modality = *modality_from_code(h.modality_code);
  m.dim = h.dim;
  m.row_ids.reserve(h.row_count);
  std::size_t pos = kMmfeHeaderBytes;
  const std::size_t id_end = kMmfeHeaderBytes + h.id_table_bytes;
  for (std::uint64_t r = 0; r < h.row_count; ++r) {
    if (pos + 2 > id_end) throw Error(ErrorCode::Malformed, "id table overrun");
    const std::size_t len = detail::get_le<std::uint16_t>(p + pos);
    pos += 2;
    if (pos + len > id_end) throw Error(ErrorCode::Malformed, "id table overrun");
    m.row_ids.emplace_back(bytes.data() + pos, len);
    pos += len;
  }
  if (pos != id_end) throw Error(ErrorCode::Malformed, "id table size mismatch");
  m.values.resize(h.row_count * h.dim);
  for (auto& v : m.values) {
    v = std::bit_cast<float>(detail::get_le<std::uint32_t>(p + pos));
    pos += 4;
  }
  m.validate();
  return m;
}

inline void write_features(const FeatureMatrix& m, const std::filesystem::path& path) {
  detail::write_file_atomically(path, encode_features(m));
}

inline FeatureMatrix read_features(const std::filesystem::path& path) {
  return decode_features(detail::read_file_bytes(path));
}

inline FeatureFileHeader read_feature_header(const std::filesystem::path& path) {
  return decode_header(detail::read_file_bytes(path));
}

// Plain-text debugging format: "id<TAB>v1<TAB>...<TAB>vd" per row. Values are
// printed with 9 significant digits, which round-trips f32 exactly.

inline void write_features_tsv(const FeatureMatrix& m, const std::filesystem::path& path) {
  m.validate();
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += m.row_ids[r];
    for (float v : m.row(r)) {
      std::snprintf(buf, sizeof buf, "\t%.9g", static_cast<double>(v));
      out += buf;
    }
    out += '\n';
  }
  detail::write_file_atomically(path, out);
}

inline FeatureMatrix read_features_tsv(const std::filesystem::path& path,
                                       Modality modality) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  FeatureMatrix m;
  m.modality = modality;
  m.dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, cell;
    std::getline(fields, id, '\t');
    std::size_t count = 0;
    while (std::getline(fields, cell, '\t')) {
      m.values.push_back(std::strtof(cell.c_str(), nullptr));
      ++count;
    }
    if (m.dim == 0) m.dim = count;
    if (count == 0 || count != m.dim)
      throw Error(ErrorCode::Malformed, path.string() + " line " + std::to_string(line_no));
    m.row_ids.push_back(std::move(id));
  }
  if (m.dim == 0) m.dim = 1;
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------

enum class Preprocess { None, ZScore, MinMax, L2Row };

inline Preprocess parse_preprocess(std::string_view name) {
  if (name == "none") return Preprocess::None;
  if (name == "zscore") return Preprocess::ZScore;
  if (name == "minmax") return Preprocess::MinMax;
  if (name == "l2row") return Preprocess::L2Row;
  throw Error(ErrorCode::Config, "unknown preprocess method '" + std::string(name) + "'");
}

/// Column statistics are computed in f64. zscore uses the sample standard
/// deviation (n - 1). Columns with zero spread (or a single row for zscore)
/// map to all zeros; zero rows stay zero under l2row.
inline FeatureMatrix preprocess(const FeatureMatrix& m, Preprocess method) {
  FeatureMatrix out = m;
  const std::size_t n = m.rows();
  if (method == Preprocess::None || n == 0) return out;

  if (method == Preprocess::L2Row) {
    for (std::size_t r = 0; r < n; ++r) {
      double sq = 0.0;
      for (float v : m.row(r)) sq += static_cast<double>(v) * v;
      const double norm = std::sqrt(sq);
      auto dst = out.row(r);
      for (std::size_t c = 0; c < m.dim; ++c)
        dst[c] = norm > 0.0 ? static_cast<float>(m.row(r)[c] / norm) : 0.0f;
    }
    return out;
  }

  for (std::size_t c = 0; c < m.dim; ++c) {
    auto at = [&](std::size_t r) { return static_cast<double>(m.values[r * m.dim + c]); };
    auto set = [&](std::size_t r, double v) { out.values[r * m.dim + c] = static_cast<float>(v); };
    bool constant = true;
    for (std::size_t r = 1; r < n && constant; ++r) constant = at(r) == at(0);
    if (constant) {
      for (std::size_t r = 0; r < n; ++r) set(r, 0.0);
    } else if (method == Preprocess::ZScore) {
      double mean = 0.0;
      for (std::size_t r = 0; r < n; ++r) mean += at(r);
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t r = 0; r < n; ++r) ss += (at(r) - mean) * (at(r) - mean);
      const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
      for (std::size_t r = 0; r < n; ++r) set(r, sd > 0.0 ? (at(r) - mean) / sd : 0.0);
    } else {
      double lo = at(0), hi = at(0);
      for (std::size_t r = 1; r < n; ++r) {
        lo = std::min(lo, at(r));
        hi = std::max(hi, at(r));
      }
      const double span = hi - lo;
      for (std::size_t r = 0; r < n; ++r) set(r, span > 0.0 ? (at(r) - lo) / span : 0.0);
    }
  }
  return out;
}

}  // namespace mmrec
