#ifndef TOPOAUG_TOPOLOGY_HPP
#define TOPOAUG_TOPOLOGY_HPP

// Digital topology on binary voxel masks.
//
// Voxels off the grid are background everywhere in this file. The foreground
// and background always use dual adjacencies, (26, 6) or (6, 26); with
// foreground 26 the mask is read as the union of closed unit cubes, with
// foreground 6 as the complex spanned by voxel centres.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "topoaug/error.hpp"
#include "topoaug/volume.hpp"

namespace topoaug {

enum class Connectivity : int { Six = 6, TwentySix = 26 };

/// A foreground adjacency together with its dual background adjacency.
class ConnectivityPair {
public:
  constexpr ConnectivityPair() = default;
  constexpr explicit ConnectivityPair(Connectivity foreground) : fg_(foreground) {}

  static constexpr ConnectivityPair fg26() { return ConnectivityPair(Connectivity::TwentySix); }
  static constexpr ConnectivityPair fg6() { return ConnectivityPair(Connectivity::Six); }

  constexpr Connectivity foreground() const { return fg_; }
  constexpr Connectivity background() const {
    return fg_ == Connectivity::TwentySix ? Connectivity::Six : Connectivity::TwentySix;
  }
  constexpr ConnectivityPair dual() const { return ConnectivityPair(background()); }

  friend constexpr bool operator==(ConnectivityPair, ConnectivityPair) = default;

private:
  Connectivity fg_ = Connectivity::TwentySix;
};

inline std::string to_string(ConnectivityPair c) {
  return c.foreground() == Connectivity::TwentySix ? "26/6" : "6/26";
}

struct TopologySignature {
  int b0 = 0; ///< connected components
  int b1 = 0; ///< tunnels / handles
  int b2 = 0; ///< cavities
  int euler = 0;

  friend constexpr bool operator==(const TopologySignature &,
                                   const TopologySignature &) = default;

  std::string to_string() const {
    return "(" + std::to_string(b0) + "," + std::to_string(b1) + "," + std::to_string(b2) +
           ")";
  }
};

namespace detail {

inline constexpr std::array<Index3, 6> kOffsets6{
    {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};

inline constexpr std::array<Index3, 26> make_offsets26() {
  std::array<Index3, 26> out{};
  int n = 0;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx != 0 || dy != 0 || dz != 0) {
          out[n++] = {dx, dy, dz};
        }
      }
    }
  }
  return out;
}
inline constexpr std::array<Index3, 26> kOffsets26 = make_offsets26();

/// Offsets already visited by a raster scan (x fastest) for the given
/// adjacency; 3 for 6-adjacency, 13 for 26-adjacency.
inline std::vector<Index3> backward_offsets(Connectivity c) {
  std::vector<Index3> out;
  if (c == Connectivity::Six) {
    return {{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}};
  }
  for (const Index3 &o : kOffsets26) {
    if (o.z < 0 || (o.z == 0 && o.y < 0) || (o.z == 0 && o.y == 0 && o.x < 0)) {
      out.push_back(o);
    }
  }
  return out;
}

// 3x3x3 neighbourhood bit layout: bit k = (dx+1) + 3(dy+1) + 9(dz+1); the
// centre is bit 13.
inline constexpr int kCentre = 13;

inline constexpr int cube_bit(int dx, int dy, int dz) {
  return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1);
}

struct LocalTables {
  std::array<std::uint32_t, 27> adj6{};
  std::array<std::uint32_t, 27> adj26{};
  std::uint32_t n6 = 0;
  std::uint32_t n18 = 0;
  std::uint32_t n26 = 0;
};

inline constexpr LocalTables make_local_tables() {
  LocalTables t{};
  for (int k = 0; k < 27; ++k) {
    const int kx = k % 3 - 1, ky = (k / 3) % 3 - 1, kz = k / 9 - 1;
    const int l1 = (kx < 0 ? -kx : kx) + (ky < 0 ? -ky : ky) + (kz < 0 ? -kz : kz);
    if (k != kCentre) {
      t.n26 |= 1u << k;
      if (l1 <= 2) {
        t.n18 |= 1u << k;
      }
      if (l1 == 1) {
        t.n6 |= 1u << k;
      }
    }
    for (int j = 0; j < 27; ++j) {
      if (j == k || j == kCentre) {
        continue;
      }
      const int dx = j % 3 - 1 - kx, dy = (j / 3) % 3 - 1 - ky, dz = j / 9 - 1 - kz;
      const int ax = dx < 0 ? -dx : dx, ay = dy < 0 ? -dy : dy, az = dz < 0 ? -dz : dz;
      if (ax <= 1 && ay <= 1 && az <= 1) {
        t.adj26[k] |= 1u << j;
        if (ax + ay + az == 1) {
          t.adj6[k] |= 1u << j;
        }
      }
    }
  }
  return t;
}
inline constexpr LocalTables kLocal = make_local_tables();

/// Number of components of `set` under adjacency table `adj`; when
/// `must_touch` is non-zero only components intersecting it are counted.
inline int count_local_components(std::uint32_t set, const std::array<std::uint32_t, 27> &adj,
                                  std::uint32_t must_touch) {
  int count = 0;
  std::uint32_t remaining = set;
  while (remaining != 0) {
    const int seed = std::countr_zero(remaining);
    std::uint32_t comp = 1u << seed;
    std::uint32_t frontier = comp;
    while (frontier != 0) {
      const int b = std::countr_zero(frontier);
      frontier &= frontier - 1;
      const std::uint32_t nb = adj[b] & remaining & ~comp;
      comp |= nb;
      frontier |= nb;
    }
    remaining &= ~comp;
    if (must_touch == 0 || (comp & must_touch) != 0) {
      ++count;
    }
  }
  return count;
}

/// 27-bit occupancy of the 3x3x3 block centred on (x, y, z).
inline std::uint32_t neighbourhood_bits(const BinaryMask &m, int x, int y, int z) {
  std::uint32_t bits = 0;
  const Dims &d = m.dims();
  if (x > 0 && y > 0 && z > 0 && x + 1 < d.nx && y + 1 < d.ny && z + 1 < d.nz) {
    const std::size_t sy = static_cast<std::size_t>(d.nx);
    const std::size_t sz = sy * static_cast<std::size_t>(d.ny);
    const std::size_t base = m.index(x - 1, y - 1, z - 1);
    const std::uint8_t *p = m.data().data();
    int k = 0;
    for (int dz = 0; dz < 3; ++dz) {
      for (int dy = 0; dy < 3; ++dy) {
        const std::uint8_t *row = p + base + dz * sz + dy * sy;
        bits |= static_cast<std::uint32_t>(row[0] != 0) << k;
        bits |= static_cast<std::uint32_t>(row[1] != 0) << (k + 1);
        bits |= static_cast<std::uint32_t>(row[2] != 0) << (k + 2);
        k += 3;
      }
    }
    return bits;
  }
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (m.get_or(x + dx, y + dy, z + dz, 0) != 0) {
          bits |= 1u << cube_bit(dx, dy, dz);
        }
      }
    }
  }
  return bits;
}

/// Topological numbers of the centre of a 3x3x3 configuration:
/// (foreground count, background count).
inline std::pair<int, int> topological_numbers(std::uint32_t bits, ConnectivityPair conn) {
  const std::uint32_t fg = bits & kLocal.n26;
  const std::uint32_t bg = ~bits & kLocal.n26;
  if (conn.foreground() == Connectivity::TwentySix) {
    return {count_local_components(fg, kLocal.adj26, 0),
            count_local_components(bg & kLocal.n18, kLocal.adj6, kLocal.n6)};
  }
  return {count_local_components(fg & kLocal.n18, kLocal.adj6, kLocal.n6),
          count_local_components(bg, kLocal.adj26, 0)};
}

inline bool simple_config(std::uint32_t bits, ConnectivityPair conn) {
  const auto [t_fg, t_bg] = topological_numbers(bits, conn);
  return t_fg == 1 && t_bg == 1;
}

inline bool simple_at(const BinaryMask &m, int x, int y, int z, ConnectivityPair conn) {
  return simple_config(neighbourhood_bits(m, x, y, z), conn);
}

class DisjointSet {
public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return parent_.back();
  }
  std::uint32_t find(std::uint32_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) {
      return;
    }
    // smaller id becomes root so relabelling follows first appearance
    if (a < b) {
      parent_[b] = a;
    } else {
      parent_[a] = b;
    }
  }

private:
  std::vector<std::uint32_t> parent_;
};

/// Two-pass union-find labelling of voxels where `in(i)` holds.
template <typename Pred>
std::pair<ComponentMap, std::uint32_t> label_components(Dims dims, Spacing spacing, Pred in,
                                                        Connectivity c) {
  ComponentMap labels(dims, spacing, 0);
  DisjointSet sets;
  sets.make(); // id 0 is background
  const auto back = backward_offsets(c);
  for (int z = 0; z < dims.nz; ++z) {
    for (int y = 0; y < dims.ny; ++y) {
      for (int x = 0; x < dims.nx; ++x) {
        const std::size_t i = labels.index(x, y, z);
        if (!in(i)) {
          continue;
        }
        std::uint32_t current = 0;
        for (const Index3 &o : back) {
          const int ax = x + o.x, ay = y + o.y, az = z + o.z;
          if (!labels.contains(ax, ay, az)) {
            continue;
          }
          const std::uint32_t nb = labels.at(ax, ay, az);
          if (nb == 0) {
            continue;
          }
          if (current == 0) {
            current = nb;
          } else if (nb != current) {
            sets.unite(current, nb);
          }
        }
        labels[i] = current != 0 ? current : sets.make();
      }
    }
  }
  std::vector<std::uint32_t> remap;
  std::uint32_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) {
      continue;
    }
    const std::uint32_t root = sets.find(labels[i]);
    if (remap.size() <= root) {
      remap.resize(root + 1, 0);
    }
    if (remap[root] == 0) {
      remap[root] = ++count;
    }
    labels[i] = remap[root];
  }
  return {std::move(labels), count};
}

} // namespace detail

struct Components {
  ComponentMap labels; ///< 0 for unset voxels, otherwise 1..count
  std::uint32_t count = 0;
};

/// Component ids are dense and numbered in raster order of first appearance.
inline Components connected_components(const BinaryMask &mask, Connectivity c) {
  auto [labels, count] = detail::label_components(
      mask.dims(), mask.spacing(), [&](std::size_t i) { return mask[i] != 0; }, c);
  return {std::move(labels), count};
}

inline Components connected_components(const BinaryMask &mask, ConnectivityPair conn = {}) {
  return connected_components(mask, conn.foreground());
}

/// Euler characteristic by cell counting, V - E + F - C. Foreground 26 counts
/// the cells of the union of closed voxel cubes; foreground 6 counts the
/// complex on voxel centres (edges between face neighbours, squares for full
/// 2x2 blocks, cubes for full 2x2x2 blocks). The two agree on well-composed
/// masks.
inline long long euler_characteristic(const BinaryMask &mask, ConnectivityPair conn = {}) {
  const Dims d = mask.dims();
  auto occ = [&](int x, int y, int z) -> bool { return mask.get_or(x, y, z, 0) != 0; };
  long long v = 0, e = 0, f = 0, c = 0;
  if (conn.foreground() == Connectivity::TwentySix) {
    for (int k = 0; k <= d.nz; ++k) {
      for (int j = 0; j <= d.ny; ++j) {
        for (int i = 0; i <= d.nx; ++i) {
          // lattice point (i, j, k) is the min corner of voxel (i, j, k)
          const bool a000 = occ(i - 1, j - 1, k - 1), a100 = occ(i, j - 1, k - 1);
          const bool a010 = occ(i - 1, j, k - 1), a110 = occ(i, j, k - 1);
          const bool a001 = occ(i - 1, j - 1, k), a101 = occ(i, j - 1, k);
          const bool a011 = occ(i - 1, j, k), a111 = occ(i, j, k);
          v += (a000 || a100 || a010 || a110 || a001 || a101 || a011 || a111);
          // edges leaving the point along +x, +y, +z
          e += (a100 || a110 || a101 || a111);
          e += (a010 || a110 || a011 || a111);
          e += (a001 || a101 || a011 || a111);
          // faces with min corner at the point, normals x, y, z
          f += (a011 || a111);
          f += (a101 || a111);
          f += (a110 || a111);
          c += a111;
        }
      }
    }
  } else {
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          if (!occ(x, y, z)) {
            continue;
          }
          ++v;
          const bool px = occ(x + 1, y, z), py = occ(x, y + 1, z), pz = occ(x, y, z + 1);
          e += px + py + pz;
          const bool pxy = occ(x + 1, y + 1, z), pxz = occ(x + 1, y, z + 1);
          const bool pyz = occ(x, y + 1, z + 1), pxyz = occ(x + 1, y + 1, z + 1);
          f += (px && py && pxy) + (px && pz && pxz) + (py && pz && pyz);
          c += (px && py && pz && pxy && pxz && pyz && pxyz);
        }
      }
    }
  }
  return v - e + f - c;
}

/// b0 counts foreground components, b2 the bounded background components
/// (cavities) and b1 follows from the Euler identity.
inline TopologySignature betti_numbers(const BinaryMask &mask, ConnectivityPair conn = {}) {
  const BoundingBox box = bounding_box(mask);
  if (!box.found) {
    return {};
  }
  const Index3 lo{box.lo.x - 1, box.lo.y - 1, box.lo.z - 1};
  const Dims pd{box.hi.x - box.lo.x + 3, box.hi.y - box.lo.y + 3, box.hi.z - box.lo.z + 3};
  const BinaryMask padded = crop(mask, lo, pd, std::uint8_t{0});

  TopologySignature s;
  s.b0 = static_cast<int>(connected_components(padded, conn.foreground()).count);
  const auto background = detail::label_components(
      pd, padded.spacing(), [&](std::size_t i) { return padded[i] == 0; }, conn.background());
  s.b2 = static_cast<int>(background.second) - 1;
  s.euler = static_cast<int>(euler_characteristic(padded, conn));
  s.b1 = s.b0 + s.b2 - s.euler;
  if (s.b1 < 0) {
    throw InvariantError("betti_numbers: negative b1; cell counting and component "
                         "counting disagree");
  }
  return s;
}

/// Whether flipping `voxel` leaves the topology of foreground and background
/// unchanged: exactly one foreground and one background component in the
/// voxel's neighbourhood are adjacent to it.
inline bool is_simple(const BinaryMask &mask, Index3 voxel, ConnectivityPair conn = {}) {
  if (!mask.contains(voxel)) {
    throw DataError("is_simple: voxel outside the grid");
  }
  return detail::simple_at(mask, voxel.x, voxel.y, voxel.z, conn);
}

// ---------------------------------------------------------------------------
// Well-composedness

struct CriticalConfig {
  enum class Kind { DiagonalSquare, AntipodalCube };
  Kind kind = Kind::DiagonalSquare;
  Index3 origin{};     ///< minimum corner of the 2x2 / 2x2x2 block
  int normal_axis = 0; ///< squares only: 0 = x, 1 = y, 2 = z
  friend bool operator==(const CriticalConfig &, const CriticalConfig &) = default;
};

struct WellComposedReport {
  bool well_composed = true;
  std::vector<CriticalConfig> offending;
};

namespace detail {

inline constexpr std::array<std::array<Index3, 4>, 3> kSquares{{
    {{{0, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 1, 1}}}, // normal x
    {{{0, 0, 0}, {1, 0, 0}, {0, 0, 1}, {1, 0, 1}}}, // normal y
    {{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}}, // normal z
}};

// corner i and 7 - i are antipodal
inline constexpr std::array<Index3, 8> kCubeCorners{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0},
                                                     {1, 1, 0}, {0, 0, 1}, {1, 0, 1},
                                                     {0, 1, 1}, {1, 1, 1}}};

// Square corners 0..3 in order (a, b, c, d): diagonals are (a, d) and (b, c).
inline bool critical_square(const BinaryMask &m, Index3 o, int axis) {
  const auto &q = kSquares[axis];
  const bool a = m.at(o + q[0]) != 0, b = m.at(o + q[1]) != 0;
  const bool c = m.at(o + q[2]) != 0, d = m.at(o + q[3]) != 0;
  return a == d && b == c && a != b;
}

/// Exactly one antipodal pair set, or exactly one antipodal pair unset.
inline bool critical_cube(const BinaryMask &m, Index3 o) {
  std::array<bool, 8> v{};
  int set = 0;
  for (int i = 0; i < 8; ++i) {
    v[i] = m.at(o + kCubeCorners[i]) != 0;
    set += v[i];
  }
  if (set != 2 && set != 6) {
    return false;
  }
  const bool odd = set == 2;
  for (int i = 0; i < 4; ++i) {
    if (v[i] == odd && v[7 - i] == odd) {
      return true;
    }
  }
  return false;
}

} // namespace detail

/// Critical configurations: 2x2 squares whose set voxels are exactly one
/// diagonal pair, and 2x2x2 blocks with exactly one antipodal pair set (or,
/// in the complement, exactly one antipodal pair unset). Blocks that leave the
/// grid cannot be critical since off-grid voxels are background.
inline WellComposedReport is_well_composed(const BinaryMask &mask) {
  WellComposedReport r;
  const Dims d = mask.dims();
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const Index3 o{x, y, z};
        const bool fx = x + 1 < d.nx, fy = y + 1 < d.ny, fz = z + 1 < d.nz;
        if (fy && fz && detail::critical_square(mask, o, 0)) {
          r.offending.push_back({CriticalConfig::Kind::DiagonalSquare, o, 0});
        }
        if (fx && fz && detail::critical_square(mask, o, 1)) {
          r.offending.push_back({CriticalConfig::Kind::DiagonalSquare, o, 1});
        }
        if (fx && fy && detail::critical_square(mask, o, 2)) {
          r.offending.push_back({CriticalConfig::Kind::DiagonalSquare, o, 2});
        }
        if (fx && fy && fz && detail::critical_cube(mask, o)) {
          r.offending.push_back({CriticalConfig::Kind::AntipodalCube, o, 0});
        }
      }
    }
  }
  r.well_composed = r.offending.empty();
  return r;
}

/// Adds foreground until no critical configuration is left. Each critical
/// block is resolved by setting its unset voxel with the smallest storage
/// index (lexicographic in (z, y, x)); scans repeat until a scan adds nothing.
inline BinaryMask make_well_composed(const BinaryMask &mask) {
  BinaryMask out = mask;
  const Dims d = out.dims();
  std::size_t budget = out.size();

  auto add_first_unset = [&](Index3 o, const Index3 *corners, int n) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (int i = 0; i < n; ++i) {
      const std::size_t idx = out.index(o + corners[i]);
      if (!out[idx]) {
        best = std::min(best, idx);
      }
    }
    if (budget == 0) {
      throw InvariantError("make_well_composed: repair did not terminate");
    }
    --budget;
    out[best] = 1;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          const Index3 o{x, y, z};
          const bool fx = x + 1 < d.nx, fy = y + 1 < d.ny, fz = z + 1 < d.nz;
          const bool axis_ok[3] = {fy && fz, fx && fz, fx && fy};
          for (int a = 0; a < 3; ++a) {
            if (axis_ok[a] && detail::critical_square(out, o, a)) {
              add_first_unset(o, detail::kSquares[a].data(), 4);
              changed = true;
            }
          }
          if (fx && fy && fz && detail::critical_cube(out, o)) {
            add_first_unset(o, detail::kCubeCorners.data(), 8);
            changed = true;
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distances, erosion and dilation

/// Chamfer (3,4,5) distance from each set voxel to the nearest unset voxel;
/// 0 on unset voxels. One voxel step is 3 units. Off-grid voxels count as
/// unset unless `offgrid_is_unset` is false, in which case they are ignored.
inline DistanceMap inner_distance(const BinaryMask &mask, bool offgrid_is_unset = true) {
  constexpr std::int32_t kInf = std::numeric_limits<std::int32_t>::max() / 2;
  DistanceMap dist(mask.dims(), mask.spacing(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    dist[i] = mask[i] ? kInf : 0;
  }
  auto weight = [](const Index3 &o) {
    const int n = std::abs(o.x) + std::abs(o.y) + std::abs(o.z);
    return n == 1 ? 3 : (n == 2 ? 4 : 5);
  };
  const auto fwd = detail::backward_offsets(Connectivity::TwentySix);
  const Dims d = mask.dims();
  auto relax = [&](int x, int y, int z, int sign) {
    std::int32_t &cur = dist.at(x, y, z);
    if (cur == 0) {
      return;
    }
    for (const Index3 &o0 : fwd) {
      const Index3 o{sign * o0.x, sign * o0.y, sign * o0.z};
      if (!offgrid_is_unset && !dist.contains(x + o.x, y + o.y, z + o.z)) {
        continue;
      }
      const std::int32_t nb = dist.get_or(x + o.x, y + o.y, z + o.z, 0);
      cur = std::min(cur, nb + weight(o));
    }
  };
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        relax(x, y, z, 1);
      }
    }
  }
  for (int z = d.nz - 1; z >= 0; --z) {
    for (int y = d.ny - 1; y >= 0; --y) {
      for (int x = d.nx - 1; x >= 0; --x) {
        relax(x, y, z, -1);
      }
    }
  }
  return dist;
}

/// Set voxel with at least one unset (or off-grid) face neighbour.
inline bool is_border_voxel(const BinaryMask &m, int x, int y, int z) {
  if (!m.at(x, y, z)) {
    return false;
  }
  for (const Index3 &o : detail::kOffsets6) {
    if (!m.get_or(x + o.x, y + o.y, z + o.z, 0)) {
      return true;
    }
  }
  return false;
}

namespace detail {

/// True if any in-grid 2x2 square or 2x2x2 block touching p is critical.
inline bool critical_near(const BinaryMask &m, int x, int y, int z) {
  const Dims d = m.dims();
  for (int oz = z - 1; oz <= z; ++oz) {
    for (int oy = y - 1; oy <= y; ++oy) {
      for (int ox = x - 1; ox <= x; ++ox) {
        const bool ix = ox >= 0 && ox + 1 < d.nx, iy = oy >= 0 && oy + 1 < d.ny,
                   iz = oz >= 0 && oz + 1 < d.nz;
        const Index3 o{ox, oy, oz};
        if (ox == x && iy && iz && critical_square(m, o, 0)) return true;
        if (oy == y && ix && iz && critical_square(m, o, 1)) return true;
        if (oz == z && ix && iy && critical_square(m, o, 2)) return true;
        if (ix && iy && iz && critical_cube(m, o)) return true;
      }
    }
  }
  return false;
}

} // namespace detail

/// Removes simple voxels until none is left. Each pass visits the border
/// voxels present at its start, ordered by inner distance of the input and
/// then storage index, and re-tests simplicity before every removal. A
/// well-composed input stays well-composed: removals that would create a
/// critical configuration are skipped.
inline BinaryMask topological_erosion(const BinaryMask &mask, ConnectivityPair conn = {}) {
  BinaryMask out = mask;
  const bool keep_wc = is_well_composed(mask).well_composed;
  const DistanceMap dist = inner_distance(mask);
  const Dims d = out.dims();
  std::vector<std::size_t> border;
  for (;;) {
    border.clear();
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          if (is_border_voxel(out, x, y, z)) {
            border.push_back(out.index(x, y, z));
          }
        }
      }
    }
    std::stable_sort(border.begin(), border.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    std::size_t removed = 0;
    for (std::size_t i : border) {
      const Index3 p = out.coord(i);
      if (!detail::simple_at(out, p.x, p.y, p.z, conn)) {
        continue;
      }
      out[i] = 0;
      if (keep_wc && detail::critical_near(out, p.x, p.y, p.z)) {
        out[i] = 1;
        continue;
      }
      ++removed;
    }
    if (removed == 0) {
      return out;
    }
  }
}

/// One pass of topology-preserving growth: every unset voxel of `allowed`
/// adjacent to the mask at the start of the pass is added, in storage order,
/// if it is simple at that moment.
inline BinaryMask topological_dilation(const BinaryMask &mask, const BinaryMask &allowed,
                                       ConnectivityPair conn = {}) {
  require_same_grid(mask, allowed, "topological_dilation");
  BinaryMask out = mask;
  const Dims d = out.dims();
  std::vector<std::size_t> candidates;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const std::size_t i = out.index(x, y, z);
        if (out[i] || !allowed[i]) {
          continue;
        }
        const std::uint32_t bits = detail::neighbourhood_bits(out, x, y, z);
        const std::uint32_t touch = conn.foreground() == Connectivity::TwentySix
                                        ? detail::kLocal.n26
                                        : detail::kLocal.n6;
        if (bits & touch) {
          candidates.push_back(i);
        }
      }
    }
  }
  for (std::size_t i : candidates) {
    const Index3 p = out.coord(i);
    if (detail::simple_at(out, p.x, p.y, p.z, conn)) {
      out[i] = 1;
    }
  }
  return out;
}

} // namespace topoaug

#endif
