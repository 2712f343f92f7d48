#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vpart/core.hpp"

namespace vpart {

enum class DataFormat { csv, binary };

struct CsvOptions {
  bool header = false;     // first line is a header row (skipped on read, written on save)
  bool id_column = false;  // column 0 holds point ids
};

namespace detail {

inline constexpr std::array<char, 4> kBinaryMagic{'N', 'D', 'P', 'T'};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_le(std::string_view bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), end};
}

template <class T>
T parse_field(std::string_view field, std::size_t line, std::size_t column) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw Error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                ": cannot parse '" + std::string(field) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value))
      throw Error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                  ": non-finite value");
  }
  return value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binary: "NDPT", u32 count, u32 dims, count*dims f64, all little-endian.

inline std::string encode_binary(const Dataset& ds) {
  if (ds.size() > std::numeric_limits<std::uint32_t>::max() ||
      ds.dims() > std::numeric_limits<std::uint32_t>::max())
    throw Error("dataset too large for the binary format");
  std::string buf(detail::kBinaryMagic.begin(), detail::kBinaryMagic.end());
  buf.reserve(12 + ds.values().size() * 8);
  detail::put_u32(buf, static_cast<std::uint32_t>(ds.size()));
  detail::put_u32(buf, static_cast<std::uint32_t>(ds.dims()));
  for (double v : ds.values()) detail::put_u64(buf, std::bit_cast<std::uint64_t>(v));
  return buf;
}

inline Dataset decode_binary(std::string_view bytes) {
  if (bytes.size() < 12) throw Error("binary dataset truncated: header needs 12 bytes, file has " +
                                     std::to_string(bytes.size()));
  if (std::memcmp(bytes.data(), detail::kBinaryMagic.data(), 4) != 0)
    throw Error("binary dataset: bad magic at offset 0");
  const auto count = detail::get_le(bytes, 4, 4);
  const auto dims = detail::get_le(bytes, 8, 4);
  if (count == 0) throw Error("binary dataset: zero points (offset 4)");
  if (dims == 0) throw Error("binary dataset: zero dims (offset 8)");
  const std::uint64_t expected = 12 + count * dims * 8;
  if (bytes.size() != expected)
    throw Error("binary dataset: expected " + std::to_string(expected) + " bytes, got " +
                std::to_string(bytes.size()));
  std::vector<double> coords(count * dims);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const std::size_t offset = 12 + i * 8;
    coords[i] = std::bit_cast<double>(detail::get_le(bytes, offset, 8));
    if (!std::isfinite(coords[i]))
      throw Error("binary dataset: non-finite value at offset " + std::to_string(offset));
  }
  return Dataset(dims, std::move(coords));
}

// ---------------------------------------------------------------------------
// CSV: one point per row, comma separated.

inline std::string encode_csv(const Dataset& ds, const CsvOptions& opts = {}) {
  std::string out;
  if (opts.header) {
    if (opts.id_column) out += "id,";
    for (std::size_t j = 0; j < ds.dims(); ++j) {
      if (j) out += ',';
      out += "x" + std::to_string(j);
    }
    out += '\n';
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (opts.id_column) out += std::to_string(ds.id(i)) + ",";
    const auto row = ds.coords(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += detail::format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

inline Dataset decode_csv(std::string_view text, const CsvOptions& opts = {}) {
  std::vector<double> coords;
  std::vector<PointId> ids;
  std::size_t dims = 0;
  std::size_t line_no = 0;
  bool skipped_header = !opts.header;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    if (line.empty()) throw Error("line " + std::to_string(line_no) + ": empty row");

    std::size_t fields = 0;
    std::size_t start = 0;
    const std::size_t before = coords.size();
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view field =
          line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (opts.id_column && fields == 0)
        ids.push_back(detail::parse_field<PointId>(field, line_no, fields + 1));
      else
        coords.push_back(detail::parse_field<double>(field, line_no, fields + 1));
      ++fields;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    const std::size_t width = coords.size() - before;
    if (opts.id_column && width == 0)
      throw Error("line " + std::to_string(line_no) + ": id column without coordinates");
    if (dims == 0) {
      dims = width;
    } else if (width != dims) {
      throw Error("line " + std::to_string(line_no) + ": expected " + std::to_string(dims) +
                  " coordinates, found " + std::to_string(width));
    }
  }
  if (dims == 0) throw Error("CSV dataset contains no points");
  return Dataset(dims, std::move(coords), std::move(ids));
}

// ---------------------------------------------------------------------------
// Files

inline bool looks_binary(std::string_view bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), detail::kBinaryMagic.data(), 4) == 0;
}

/// Format detected from the magic bytes.
inline Dataset load_dataset(const std::string& path, const CsvOptions& csv = {}) {
  const std::string bytes = detail::read_file(path);
  if (bytes.empty()) throw Error("'" + path + "' is empty");
  try {
    return looks_binary(bytes) ? decode_binary(bytes) : decode_csv(bytes, csv);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline Dataset load_dataset(const std::string& path, DataFormat format, const CsvOptions& csv = {}) {
  const std::string bytes = detail::read_file(path);
  if (bytes.empty()) throw Error("'" + path + "' is empty");
  try {
    return format == DataFormat::binary ? decode_binary(bytes) : decode_csv(bytes, csv);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline void save_dataset(const Dataset& ds, const std::string& path, DataFormat format,
                         const CsvOptions& csv = {}) {
  detail::write_file(path, format == DataFormat::binary ? encode_binary(ds) : encode_csv(ds, csv));
}

// ---------------------------------------------------------------------------
// Assignment CSV: point-id,partition-id,affected-flag (0/1), no header.

inline std::string encode_assignment_csv(const Dataset& ds, const PartitionAssignment& a) {
  a.validate(ds.size());
  std::string out;
  for (std::size_t i = 0; i < ds.size(); ++i)
    out += std::to_string(ds.id(i)) + "," + std::to_string(a.labels[i]) + "," +
           (a.affected[i] ? "1" : "0") + "\n";
  return out;
}

/// Rows are matched to `ds` by point id. The partition count is the largest
/// label + 1 unless `partition_count` is given.
inline PartitionAssignment decode_assignment_csv(const Dataset& ds, std::string_view text,
                                                 std::size_t partition_count = 0) {
  std::unordered_map<PointId, std::size_t> row_of;
  row_of.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) row_of.emplace(ds.id(i), i);

  PartitionAssignment a;
  a.labels.assign(ds.size(), 0);
  a.affected.assign(ds.size(), false);
  std::vector<bool> seen(ds.size(), false);
  std::size_t max_label = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos)
      throw Error("assignment line " + std::to_string(line_no) + ": expected 3 fields");
    const auto id = detail::parse_field<PointId>(line.substr(0, c1), line_no, 1);
    const auto label = detail::parse_field<std::size_t>(line.substr(c1 + 1, c2 - c1 - 1), line_no, 2);
    const auto flag = detail::parse_field<int>(line.substr(c2 + 1), line_no, 3);
    const auto it = row_of.find(id);
    if (it == row_of.end())
      throw Error("assignment line " + std::to_string(line_no) + ": unknown point id " +
                  std::to_string(id));
    if (seen[it->second])
      throw Error("assignment line " + std::to_string(line_no) + ": duplicate point id " +
                  std::to_string(id));
    seen[it->second] = true;
    a.labels[it->second] = label;
    a.affected[it->second] = flag != 0;
    max_label = std::max(max_label, label);
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw Error("assignment is missing point id " + std::to_string(ds.id(i)));
  a.partition_count = partition_count ? partition_count : max_label + 1;
  a.validate(ds.size());
  return a;
}

}  // namespace vpart
