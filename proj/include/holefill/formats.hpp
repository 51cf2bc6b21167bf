#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "holefill/lattice.hpp"

namespace holefill {

enum class DType : std::uint32_t { f64 = 1, c128 = 2 };

/// In-memory form of the "HFAR" binary array: magic, u32 version, u32 dtype,
/// u32 ndims, u64 dims[ndims], row-major little-endian payload.
struct ArrayFile {
  static constexpr std::uint32_t kVersion = 1;

  DType dtype = DType::f64;
  std::vector<std::uint64_t> dims;
  std::vector<double> real;
  std::vector<std::complex<double>> complex;

  std::uint64_t count() const;
  static ArrayFile from_real(std::vector<std::uint64_t> dims, std::vector<double> values);
  static ArrayFile from_complex(std::vector<std::uint64_t> dims, std::vector<std::complex<double>> values);
};

std::vector<std::uint8_t> encode_array(const ArrayFile& a);
ArrayFile decode_array(const std::vector<std::uint8_t>& bytes);

void write_array(const std::filesystem::path& path, const ArrayFile& a);
ArrayFile read_array(const std::filesystem::path& path);

/// Grid-shaped array of a real field on J.
ArrayFile grid_array(const Geometry& g, const std::vector<double>& values);

nlohmann::json to_json(const Geometry& g);
Geometry geometry_from_json(const nlohmann::json& j);

/// Box-shaped sets serialize as {"box": [[lo, hi], ...]}, others as
/// run-length pairs over the row-major mask.
nlohmann::json to_json(const IndexSet& s);
IndexSet index_set_from_json(const Geometry& g, const nlohmann::json& j);

/// Hex FNV-1a of a byte string.
std::string content_hash(const std::string& bytes);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace holefill
