#include "holefill/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "holefill/error.hpp"

namespace holefill {

namespace {

// Guards floor(1 + m k0) against k0 values like 2.0000000000000004 / 1.9999999999999998.
constexpr double kFloorGuard = 1e-9;

std::vector<std::size_t> member_positions(std::span<const std::uint8_t> mask) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (mask[p]) out.push_back(p);
  return out;
}

}  // namespace

int Geometry::w() const { return static_cast<int>(std::floor(1.0 + m * k0 + kFloorGuard)); }

std::size_t Geometry::points() const {
  std::size_t n = 1;
  for (int a = 0; a < d; ++a) n *= static_cast<std::size_t>(side());
  return n;
}

void Geometry::validate_hole() const {
  std::ostringstream msg;
  if (d < 1) msg << "dimension d must be >= 1 (got " << d << ")";
  else if (N < 1) msg << "N must be >= 1 (got " << N << ")";
  else if (m < 1) msg << "oversampling m must be >= 1 (got " << m << ")";
  else if (!(k0 >= 0.0)) msg << "k0 must be >= 0 (got " << k0 << ")";
  else if (w() < 1) msg << "hole half-extent w must be >= 1";
  else if (2 * w() - 1 >= side())
    msg << "hole of width " << 2 * w() - 1 << " does not fit strictly inside a grid of side " << side();
  const auto s = msg.str();
  if (!s.empty()) throw GeometryError(s);
}

void Geometry::validate() const {
  validate_hole();
  if (!(beta > 1.0 && beta <= 2.0)) {
    std::ostringstream msg;
    msg << "beta must lie in (1, 2] (got " << beta << ")";
    throw GeometryError(msg.str());
  }
  if (static_cast<int>(std::floor(beta * N)) > half() - 1) {
    std::ostringstream msg;
    msg << "floor(beta N) = " << static_cast<int>(std::floor(beta * N)) << " exceeds mN - 1 = " << half() - 1;
    throw GeometryError(msg.str());
  }
}

Geometry Geometry::with_hole(int d, int N, int m, double beta, int w) {
  Geometry g{d, N, m, beta, static_cast<double>(w - 1) / m};
  if (g.w() != w) throw GeometryError("cannot represent requested hole half-extent");
  return g;
}

std::size_t to_position(const Geometry& g, std::span<const int> logical) {
  std::size_t pos = 0;
  for (int a = 0; a < g.d; ++a) pos = pos * g.side() + static_cast<std::size_t>(logical[a] + g.offset());
  return pos;
}

void to_logical(const Geometry& g, std::size_t pos, std::span<int> logical) {
  const auto side = static_cast<std::size_t>(g.side());
  for (int a = g.d - 1; a >= 0; --a) {
    logical[a] = static_cast<int>(pos % side) - g.offset();
    pos /= side;
  }
}

IndexSet::IndexSet() {
  static const auto none = std::make_shared<const Data>();
  data_ = none;
}

IndexSet::IndexSet(const Geometry& g, std::vector<std::uint8_t> mask) {
  if (mask.size() != g.points()) throw GeometryError("mask size does not match the grid");
  auto data = std::make_shared<Data>();
  data->geometry = g;
  for (auto& b : mask) b = b ? 1 : 0;
  data->positions = member_positions(mask);
  if (!data->positions.empty()) {
    Box bounds(g.d, Range{g.half(), 1 - g.half()});
    std::vector<int> idx(g.d);
    for (auto p : data->positions) {
      to_logical(g, p, idx);
      for (int a = 0; a < g.d; ++a) {
        bounds[a].lo = std::min(bounds[a].lo, idx[a]);
        bounds[a].hi = std::max(bounds[a].hi, idx[a]);
      }
    }
    std::size_t volume = 1;
    for (const auto& r : bounds) volume *= static_cast<std::size_t>(r.length());
    if (volume == data->positions.size()) data->bbox = bounds;
    data->bounds = std::move(bounds);
  }
  data->mask = std::move(mask);
  data_ = std::move(data);
}

IndexSet IndexSet::box(const Geometry& g, const Box& b) {
  if (static_cast<int>(b.size()) != g.d) throw GeometryError("box rank does not match geometry");
  for (const auto& r : b)
    if (r.lo < 1 - g.half() || r.hi > g.half() || r.lo > r.hi)
      throw GeometryError("box range lies outside the grid or is empty");
  std::vector<std::uint8_t> mask(g.points(), 0);
  std::vector<int> idx(g.d);
  for (std::size_t p = 0; p < mask.size(); ++p) {
    to_logical(g, p, idx);
    bool in = true;
    for (int a = 0; a < g.d && in; ++a) in = b[a].contains(idx[a]);
    mask[p] = in;
  }
  return IndexSet(g, std::move(mask));
}

IndexSet IndexSet::full(const Geometry& g) { return IndexSet(g, std::vector<std::uint8_t>(g.points(), 1)); }

IndexSet IndexSet::empty(const Geometry& g) { return IndexSet(g, std::vector<std::uint8_t>(g.points(), 0)); }

Box IndexSet::bounds() const {
  if (!data_->bounds) throw GeometryError("empty index set has no bounds");
  return *data_->bounds;
}

IndexSet IndexSet::complement() const {
  std::vector<std::uint8_t> mask(data_->mask.size());
  std::transform(data_->mask.begin(), data_->mask.end(), mask.begin(), [](std::uint8_t b) { return b ? 0 : 1; });
  return IndexSet(geometry(), std::move(mask));
}

bool IndexSet::subset_of(const IndexSet& other) const {
  if (mask().size() != other.mask().size()) throw GeometryError("index sets live on different grids");
  return std::all_of(positions().begin(), positions().end(), [&](std::size_t p) { return other.contains(p); });
}

bool IndexSet::disjoint(const IndexSet& other) const {
  if (mask().size() != other.mask().size()) throw GeometryError("index sets live on different grids");
  return std::none_of(positions().begin(), positions().end(), [&](std::size_t p) { return other.contains(p); });
}

std::uint64_t IndexSet::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  mix(static_cast<std::uint64_t>(geometry().d));
  mix(static_cast<std::uint64_t>(geometry().side()));
  for (auto b : data_->mask) mix(b);
  return h;
}

bool IndexSet::operator==(const IndexSet& other) const {
  if (data_ == other.data_) return true;
  if (!data_ || !other.data_) return false;
  return geometry().d == other.geometry().d && geometry().side() == other.geometry().side() &&
         data_->mask == other.data_->mask;
}

IndexSet beamstop_window(const Geometry& g) {
  g.validate_hole();
  const int w = g.w();
  return IndexSet::box(g, Box(g.d, Range{1 - w, w - 1}));
}

int autocorrelation_half_extent(double beta, int N, AcConvention c) {
  const double x = beta * N;
  if (c == AcConvention::closed) return static_cast<int>(std::floor(x + kFloorGuard));
  return static_cast<int>(std::ceil(x - kFloorGuard)) - 1;
}

IndexSet autocorrelation_box(const Geometry& g, AcConvention c) {
  g.validate();
  const int h = autocorrelation_half_extent(g.beta, g.N, c);
  if (h > g.half() - 1) throw GeometryError("S_AC box does not fit strictly inside J");
  return IndexSet::box(g, Box(g.d, Range{-h, h}));
}

IndexSet autocorrelation_support(const IndexSet& S) {
  const auto& g = S.geometry();
  if (S.is_empty()) throw GeometryError("autocorrelation support of an empty set");
  const Box b = S.bounds();
  for (const auto& r : b)
    if (r.hi - r.lo > g.half() - 1) throw GeometryError("difference set exceeds the grid J");
  if (S.bbox()) {
    Box out;
    for (const auto& r : b) out.push_back(Range{r.lo - r.hi, r.hi - r.lo});
    return IndexSet::box(g, out);
  }
  std::vector<std::uint8_t> mask(g.points(), 0);
  const auto pos = S.positions();
  std::vector<std::vector<int>> coords(pos.size(), std::vector<int>(g.d));
  for (std::size_t i = 0; i < pos.size(); ++i) to_logical(g, pos[i], coords[i]);
  std::vector<int> diff(g.d);
  for (const auto& p : coords)
    for (const auto& q : coords) {
      for (int a = 0; a < g.d; ++a) diff[a] = p[a] - q[a];
      mask[to_position(g, diff)] = 1;
    }
  return IndexSet(g, std::move(mask));
}

IndexSet constraint_region(const Geometry& g, const IndexSet& s_ac) {
  if (s_ac.mask().size() != g.points()) throw GeometryError("S_AC lives on a different grid");
  IndexSet R = s_ac.complement();
  const std::size_t hole = beamstop_window(g).size();
  if (R.size() <= hole) {
    std::ostringstream msg;
    msg << "constraint region has " << R.size() << " points but the hole has " << hole
        << "; the recovery system is underdetermined";
    throw GeometryError(msg.str());
  }
  return R;
}

bool slab_injectivity_check(const IndexSet& W, const IndexSet& R) {
  if (W.is_empty() || R.is_empty()) return false;
  const auto& g = W.geometry();
  const int M = g.side();
  const Box wb = W.bounds();
  for (int a = 0; a < g.d; ++a) {
    const int u = wb[a].hi - wb[a].lo;
    // count[c] = number of R points on the hyperplane x_a = c
    std::vector<std::size_t> count(M, 0);
    std::vector<int> idx(g.d);
    for (auto p : R.positions()) {
      to_logical(g, p, idx);
      ++count[idx[a] + g.offset()];
    }
    const std::size_t plane = g.points() / M;
    std::vector<bool> full(M);
    for (int c = 0; c < M; ++c) full[c] = count[c] == plane;
    int best = 0;
    int run = 0;
    for (int c = 0; c < 2 * M; ++c) {
      run = full[c % M] ? run + 1 : 0;
      best = std::max(best, std::min(run, M));
    }
    if (best - 1 > u) return true;
  }
  return false;
}

int depth_from_boundary(const Geometry& g, std::size_t pos) {
  std::vector<int> idx(g.d);
  to_logical(g, pos, idx);
  int r = 0;
  for (int a = 0; a < g.d; ++a) r = std::max(r, std::abs(idx[a]));
  return (g.w() - 1) - r;
}

}  // namespace holefill
