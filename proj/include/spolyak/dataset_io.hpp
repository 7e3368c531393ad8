#pragma once

// Dataset persistence.
//
// CSV: header `x0,...,x{d-1},y`, then one row per sample with the d features
// followed by the response, written with 17 significant digits (exact
// round-trip). Readers also accept files without the header.
//
// Binary container (little-endian):
//   offset 0   char[8]  magic "SPLYDSET"
//          8   u32      format version (1)
//         12   u32      family (0 = linear, 1 = logistic)
//         16   u64      n
//         24   u64      d
//         32   u64      seed
//         40   f64[n*d] X, row-major
//              f64[n]   y

#include <spolyak/objectives.hpp>
#include <spolyak/types.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

namespace spolyak {

inline void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (Index j = 0; j < data.d(); ++j) out << 'x' << j << ',';
  out << "y\n";
  out << std::setprecision(17);
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.d(); ++j) out << data.X(i, j) << ',';
    out << data.y[i] << '\n';
  }
}

inline Dataset read_dataset_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && !line.empty() && line[0] == 'x') continue;  // header
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw invalid_argument("dataset CSV line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw invalid_argument("dataset CSV line " + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().size() < 2)
    throw invalid_argument("dataset CSV needs at least one row with a feature and a response");
  const auto n = static_cast<Index>(rows.size());
  const auto d = static_cast<Index>(rows.front().size()) - 1;
  Dataset data;
  data.X.resize(n, d);
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) data.X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    data.y[i] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
  }
  data.validate();
  return data;
}

struct BinaryDataset {
  Dataset data;
  Family family = Family::Linear;
  std::uint64_t seed = 0;
};

namespace detail {

inline constexpr char kDatasetMagic[8] = {'S', 'P', 'L', 'Y', 'D', 'S', 'E', 'T'};
inline constexpr std::uint32_t kDatasetVersion = 1;

template <class T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw invalid_argument("dataset binary: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline void write_dataset_binary(std::ostream& out, const Dataset& data, Family family,
                                 std::uint64_t seed) {
  out.write(detail::kDatasetMagic, sizeof(detail::kDatasetMagic));
  detail::put_le<std::uint32_t>(out, detail::kDatasetVersion);
  detail::put_le<std::uint32_t>(out, family == Family::Linear ? 0u : 1u);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(data.n()));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(data.d()));
  detail::put_le<std::uint64_t>(out, seed);
  for (Index i = 0; i < data.n(); ++i)
    for (Index j = 0; j < data.d(); ++j) detail::put_le<double>(out, data.X(i, j));
  for (Index i = 0; i < data.n(); ++i) detail::put_le<double>(out, data.y[i]);
}

inline BinaryDataset read_dataset_binary(std::istream& in) {
  char magic[sizeof(detail::kDatasetMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, detail::kDatasetMagic, sizeof(magic)) != 0)
    throw invalid_argument("dataset binary: bad magic");
  const auto version = detail::get_le<std::uint32_t>(in);
  if (version != detail::kDatasetVersion)
    throw invalid_argument("dataset binary: unsupported version " + std::to_string(version));
  const auto family_code = detail::get_le<std::uint32_t>(in);
  if (family_code > 1) throw invalid_argument("dataset binary: unknown family code");
  const auto n = detail::get_le<std::uint64_t>(in);
  const auto d = detail::get_le<std::uint64_t>(in);
  BinaryDataset out;
  out.family = family_code == 0 ? Family::Linear : Family::Logistic;
  out.seed = detail::get_le<std::uint64_t>(in);
  if (n == 0 || d == 0 || n > (1ULL << 32) || d > (1ULL << 32))
    throw invalid_argument("dataset binary: implausible dimensions");
  out.data.X.resize(static_cast<Index>(n), static_cast<Index>(d));
  out.data.y.resize(static_cast<Index>(n));
  for (Index i = 0; i < static_cast<Index>(n); ++i)
    for (Index j = 0; j < static_cast<Index>(d); ++j) out.data.X(i, j) = detail::get_le<double>(in);
  for (Index i = 0; i < static_cast<Index>(n); ++i) out.data.y[i] = detail::get_le<double>(in);
  out.data.validate();
  return out;
}

}  // namespace spolyak
