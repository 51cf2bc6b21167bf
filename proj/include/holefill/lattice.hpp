#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace holefill {

/// Inclusive integer range [lo, hi] along one axis.
struct Range {
  int lo = 0;
  int hi = -1;

  int length() const { return hi - lo + 1; }
  bool contains(int j) const { return j >= lo && j <= hi; }
  bool operator==(const Range&) const = default;
};

using Box = std::vector<Range>;

/// Lattice parameters. Samples of the image live in [1-N:N]^d, the
/// oversampled grid J is [1-mN:mN]^d, and the hole is [1-w:w-1]^d.
struct Geometry {
  int d = 2;
  int N = 32;
  int m = 3;
  double beta = 1.5;
  double k0 = 2.0;

  /// Hole half-extent floor(1 + m k0).
  int w() const;
  int half() const { return m * N; }
  int side() const { return 2 * m * N; }
  /// Array position of logical index 0 along each axis.
  int offset() const { return m * N - 1; }
  std::size_t points() const;

  /// Checks every invariant, including floor(beta N) <= mN - 1.
  void validate() const;
  /// Checks only grid and hole invariants.
  void validate_hole() const;

  /// Geometry whose hole half-extent is exactly `w`.
  static Geometry with_hole(int d, int N, int m, double beta, int w);

  bool operator==(const Geometry&) const = default;
};

/// Row-major position of a logical multi-index (axis 0 slowest).
std::size_t to_position(const Geometry& g, std::span<const int> logical);
/// Logical multi-index of an array position.
void to_logical(const Geometry& g, std::size_t pos, std::span<int> logical);

/// A subset of J stored as a byte mask. Immutable; copies share storage.
class IndexSet {
 public:
  /// Empty set on no grid; mask() is empty and every query is well-defined.
  IndexSet();
  IndexSet(const Geometry& g, std::vector<std::uint8_t> mask);

  static IndexSet box(const Geometry& g, const Box& b);
  static IndexSet full(const Geometry& g);
  static IndexSet empty(const Geometry& g);

  const Geometry& geometry() const { return data_->geometry; }
  std::span<const std::uint8_t> mask() const { return data_->mask; }
  std::size_t size() const { return data_->positions.size(); }
  bool is_empty() const { return size() == 0; }
  /// Array positions of the members, ascending.
  std::span<const std::size_t> positions() const { return data_->positions; }
  /// Present exactly when the set is a nonempty axis-aligned box.
  const std::optional<Box>& bbox() const { return data_->bbox; }
  /// Tight bounding box; throws on the empty set.
  Box bounds() const;
  bool contains(std::size_t pos) const { return data_->mask[pos] != 0; }

  IndexSet complement() const;
  bool subset_of(const IndexSet& other) const;
  bool disjoint(const IndexSet& other) const;
  /// FNV-1a over the grid shape and mask bytes.
  std::uint64_t hash() const;

  bool operator==(const IndexSet& other) const;

 private:
  struct Data {
    Geometry geometry;
    std::vector<std::uint8_t> mask;
    std::vector<std::size_t> positions;
    std::optional<Box> bbox;
    std::optional<Box> bounds;
  };
  std::shared_ptr<const Data> data_;
};

/// Beamstop window W = [1-w : w-1]^d.
IndexSet beamstop_window(const Geometry& g);

/// Box conventions for S_AC built from beta alone.
enum class AcConvention {
  closed,  ///< [-floor(beta N) : floor(beta N)]^d
  open,    ///< { j : |j| < beta N }^d
};

/// Half-extent h of the S_AC box [-h:h]^d for the given convention.
int autocorrelation_half_extent(double beta, int N, AcConvention c);
IndexSet autocorrelation_box(const Geometry& g, AcConvention c = AcConvention::closed);

/// Difference set S - S.
IndexSet autocorrelation_support(const IndexSet& S);

/// R = J \ S_AC; throws when |R| <= |W|.
IndexSet constraint_region(const Geometry& g, const IndexSet& s_ac);

/// Sufficient condition for F*_{R,W} to have trivial null space: along some
/// axis, W lies in a slab of width u+1 while R contains v+1 consecutive full
/// hyperplanes (cyclically) with v > u.
bool slab_injectivity_check(const IndexSet& W, const IndexSet& R);

/// Chebyshev depth of a hole point from the hole boundary: (w-1) - max|k_a|.
int depth_from_boundary(const Geometry& g, std::size_t pos);

}  // namespace holefill
