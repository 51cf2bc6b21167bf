#include "holefill/formats.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "holefill/error.hpp"

namespace holefill {

namespace {

constexpr char kMagic[4] = {'H', 'F', 'A', 'R'};

static_assert(std::endian::native == std::endian::little, "HFAR encoding assumes a little-endian host");

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

template <class T>
T take(const std::vector<std::uint8_t>& in, std::size_t& at) {
  if (at + sizeof(T) > in.size()) throw ConfigError("truncated array file");
  T v;
  std::memcpy(&v, in.data() + at, sizeof(T));
  at += sizeof(T);
  return v;
}

}  // namespace

std::uint64_t ArrayFile::count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

ArrayFile ArrayFile::from_real(std::vector<std::uint64_t> dims, std::vector<double> values) {
  ArrayFile a;
  a.dtype = DType::f64;
  a.dims = std::move(dims);
  a.real = std::move(values);
  if (a.real.size() != a.count()) throw GeometryError("array payload does not match its dims");
  return a;
}

ArrayFile ArrayFile::from_complex(std::vector<std::uint64_t> dims, std::vector<std::complex<double>> values) {
  ArrayFile a;
  a.dtype = DType::c128;
  a.dims = std::move(dims);
  a.complex = std::move(values);
  if (a.complex.size() != a.count()) throw GeometryError("array payload does not match its dims");
  return a;
}

std::vector<std::uint8_t> encode_array(const ArrayFile& a) {
  const std::uint64_t n = a.count();
  if ((a.dtype == DType::f64 && a.real.size() != n) || (a.dtype == DType::c128 && a.complex.size() != n))
    throw GeometryError("array payload does not match its dims");
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put(out, ArrayFile::kVersion);
  put(out, static_cast<std::uint32_t>(a.dtype));
  put(out, static_cast<std::uint32_t>(a.dims.size()));
  for (auto d : a.dims) put(out, d);
  if (a.dtype == DType::f64) {
    for (double v : a.real) put(out, v);
  } else {
    for (const auto& v : a.complex) {
      put(out, v.real());
      put(out, v.imag());
    }
  }
  return out;
}

ArrayFile decode_array(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw ConfigError("not an HFAR array file");
  std::size_t at = 4;
  const auto version = take<std::uint32_t>(bytes, at);
  if (version != ArrayFile::kVersion) throw ConfigError("unsupported HFAR version " + std::to_string(version));
  const auto dtype = take<std::uint32_t>(bytes, at);
  if (dtype != 1 && dtype != 2) throw ConfigError("unknown HFAR dtype " + std::to_string(dtype));
  const auto ndims = take<std::uint32_t>(bytes, at);
  ArrayFile a;
  a.dtype = static_cast<DType>(dtype);
  for (std::uint32_t i = 0; i < ndims; ++i) a.dims.push_back(take<std::uint64_t>(bytes, at));
  const std::uint64_t n = a.count();
  const std::uint64_t width = a.dtype == DType::f64 ? 8 : 16;
  if (bytes.size() - at != n * width) throw ConfigError("HFAR payload length does not match dims");
  if (a.dtype == DType::f64) {
    a.real.resize(n);
    std::memcpy(a.real.data(), bytes.data() + at, n * 8);
  } else {
    a.complex.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double re = take<double>(bytes, at);
      const double im = take<double>(bytes, at);
      a.complex[i] = {re, im};
    }
  }
  return a;
}

void write_array(const std::filesystem::path& path, const ArrayFile& a) {
  const auto bytes = encode_array(a);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ArrayFile read_array(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_array(bytes);
}

ArrayFile grid_array(const Geometry& g, const std::vector<double>& values) {
  return ArrayFile::from_real(std::vector<std::uint64_t>(g.d, static_cast<std::uint64_t>(g.side())), values);
}

nlohmann::json to_json(const Geometry& g) {
  return {{"d", g.d}, {"N", g.N}, {"m", g.m}, {"beta", g.beta}, {"k0", g.k0}, {"w", g.w()}};
}

Geometry geometry_from_json(const nlohmann::json& j) {
  Geometry g;
  g.d = j.at("d").get<int>();
  g.N = j.at("N").get<int>();
  g.m = j.at("m").get<int>();
  g.beta = j.at("beta").get<double>();
  g.k0 = j.at("k0").get<double>();
  g.validate_hole();
  return g;
}

nlohmann::json to_json(const IndexSet& s) {
  nlohmann::json j;
  j["size"] = s.size();
  if (s.bbox()) {
    auto box = nlohmann::json::array();
    for (const auto& r : *s.bbox()) box.push_back({r.lo, r.hi});
    j["box"] = box;
    return j;
  }
  // Alternating run lengths starting with a run of zeros.
  auto runs = nlohmann::json::array();
  std::uint8_t current = 0;
  std::size_t len = 0;
  for (auto b : s.mask()) {
    const std::uint8_t v = b ? 1 : 0;
    if (v == current) {
      ++len;
    } else {
      runs.push_back(len);
      current = v;
      len = 1;
    }
  }
  runs.push_back(len);
  j["runs"] = runs;
  return j;
}

IndexSet index_set_from_json(const Geometry& g, const nlohmann::json& j) {
  if (j.contains("box")) {
    Box b;
    for (const auto& r : j.at("box")) b.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
    if (static_cast<int>(b.size()) != g.d) throw ConfigError("index-set box rank does not match the grid");
    return IndexSet::box(g, b);
  }
  if (!j.contains("runs")) throw ConfigError("index set needs 'box' or 'runs'");
  std::vector<std::uint8_t> mask;
  mask.reserve(g.points());
  std::uint8_t v = 0;
  for (const auto& r : j.at("runs")) {
    mask.insert(mask.end(), r.get<std::size_t>(), v);
    v ^= 1;
  }
  if (mask.size() != g.points()) throw ConfigError("index-set runs do not cover the grid");
  return IndexSet(g, std::move(mask));
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

}  // namespace holefill
