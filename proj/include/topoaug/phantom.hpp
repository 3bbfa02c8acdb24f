#ifndef TOPOAUG_PHANTOM_HPP
#define TOPOAUG_PHANTOM_HPP

// Synthetic CMR-like phantoms with known blood pool topology.
//
// Labels: 0 background, 1 myocardium, 2.. blood pool sub-classes. The
// myocardium is a Chebyshev shell of `wall_thickness_vox` around the blood
// pool; the two-chamber kinds also carry a flat septum of that thickness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "topoaug/error.hpp"
#include "topoaug/topology.hpp"
#include "topoaug/volume.hpp"

namespace topoaug {

enum class PhantomKind {
  Ball,
  Shell,
  Torus,
  TwoChamberOneChannel,
  TwoChamberTwoChannel,
  ChamberGraph,
};

inline const std::vector<std::pair<PhantomKind, std::string>> &phantom_kind_names() {
  static const std::vector<std::pair<PhantomKind, std::string>> names{
      {PhantomKind::Ball, "ball"},
      {PhantomKind::Shell, "shell"},
      {PhantomKind::Torus, "torus"},
      {PhantomKind::TwoChamberOneChannel, "two-chamber-one-channel"},
      {PhantomKind::TwoChamberTwoChannel, "two-chamber-two-channel"},
      {PhantomKind::ChamberGraph, "n-chamber-graph"},
  };
  return names;
}

inline std::string to_string(PhantomKind k) {
  for (const auto &[kind, name] : phantom_kind_names()) {
    if (kind == k) {
      return name;
    }
  }
  return "unknown";
}

inline PhantomKind parse_phantom_kind(const std::string &s) {
  for (const auto &[kind, name] : phantom_kind_names()) {
    if (name == s) {
      return kind;
    }
  }
  throw DataError("unknown phantom kind '" + s + "'");
}

struct PhantomSpec {
  PhantomKind kind = PhantomKind::Ball;
  Dims dims{64, 64, 64};
  Spacing spacing{};
  int wall_thickness_vox = 2;
  int channel_radius_vox = 3;
  std::uint64_t seed = 0;
  /// n-chamber-graph only. An empty edge list means a ring through all chambers.
  int chambers = 3;
  std::vector<std::pair<int, int>> edges;
};

struct Phantom {
  ScalarVolume image;
  LabelVolume labels;
  LabelSchema schema;
  TopologySignature expected;
};

namespace detail {

// Max filter over a (2r+1)^3 cube, done per axis.
inline BinaryMask chebyshev_dilate(const BinaryMask &m, int r) {
  BinaryMask cur = m;
  const Dims d = m.dims();
  const int n[3] = {d.nx, d.ny, d.nz};
  for (int axis = 0; axis < 3; ++axis) {
    BinaryMask next(d, m.spacing(), 0);
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          int p[3] = {x, y, z};
          const int c = p[axis];
          bool hit = false;
          for (int k = std::max(0, c - r); k <= std::min(n[axis] - 1, c + r) && !hit; ++k) {
            p[axis] = k;
            hit = cur.at(p[0], p[1], p[2]) != 0;
          }
          next.at(x, y, z) = hit ? 1 : 0;
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

inline ScalarVolume box_blur(const ScalarVolume &v) {
  ScalarVolume cur = v;
  const Dims d = v.dims();
  const int n[3] = {d.nx, d.ny, d.nz};
  for (int axis = 0; axis < 3; ++axis) {
    ScalarVolume next(d, v.spacing(), 0.0);
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          int p[3] = {x, y, z};
          const int c = p[axis];
          double s = 0.0;
          int cnt = 0;
          for (int k = std::max(0, c - 1); k <= std::min(n[axis] - 1, c + 1); ++k) {
            p[axis] = k;
            s += cur.at(p[0], p[1], p[2]);
            ++cnt;
          }
          next.at(x, y, z) = s / cnt;
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

struct P3 {
  double x, y, z;
};

inline double dist2_point_segment(P3 p, P3 a, P3 b, double &t) {
  const double ux = b.x - a.x, uy = b.y - a.y, uz = b.z - a.z;
  const double len2 = ux * ux + uy * uy + uz * uz;
  t = len2 > 0 ? ((p.x - a.x) * ux + (p.y - a.y) * uy + (p.z - a.z) * uz) / len2 : 0.0;
  const double cx = a.x + t * ux - p.x, cy = a.y + t * uy - p.y, cz = a.z + t * uz - p.z;
  return cx * cx + cy * cy + cz * cz;
}

// Chords (a,b) and (c,d) of a circle with distinct endpoints cross iff the
// endpoints interleave.
inline bool chords_cross(int a, int b, int c, int d) {
  if (a == c || a == d || b == c || b == d) {
    return false;
  }
  auto inside = [](int lo, int hi, int v) { return lo < v && v < hi; };
  const int lo = std::min(a, b), hi = std::max(a, b);
  return inside(lo, hi, c) != inside(lo, hi, d);
}

inline bool graph_connected(int n, const std::vector<std::pair<int, int>> &edges) {
  std::vector<int> parent(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    parent[static_cast<std::size_t>(i)] = i;
  }
  auto find = [&](int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  };
  int comps = n;
  for (auto [a, b] : edges) {
    const int ra = find(a), rb = find(b);
    if (ra != rb) {
      parent[static_cast<std::size_t>(ra)] = rb;
      --comps;
    }
  }
  return comps == 1;
}

} // namespace detail

inline Phantom generate_phantom(const PhantomSpec &spec) {
  const Dims d = spec.dims;
  if (!d.valid()) {
    throw DimensionError("phantom: invalid dims");
  }
  if (spec.wall_thickness_vox < 1 || spec.channel_radius_vox < 1) {
    throw DataError("phantom: wall thickness and channel radius must be >= 1");
  }
  const int w = spec.wall_thickness_vox;
  const double m = std::min({d.nx, d.ny, d.nz});
  const detail::P3 c{static_cast<double>(d.nx / 2), static_cast<double>(d.ny / 2),
                     static_cast<double>(d.nz / 2)};
  LabelVolume labels(d, spec.spacing, 0);
  LabelSchema schema;
  TopologySignature expected{1, 0, 0, 1};
  auto each = [&](auto fn) {
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          fn(x, y, z, x - c.x, y - c.y, z - c.z);
        }
      }
    }
  };

  switch (spec.kind) {
  case PhantomKind::Ball: {
    schema.bloodpool_sublabels = {2};
    const double r = 0.3 * m;
    each([&](int x, int y, int z, double dx, double dy, double dz) {
      if (dx * dx + dy * dy + dz * dz <= r * r) {
        labels.at(x, y, z) = 2;
      }
    });
    break;
  }
  case PhantomKind::Shell: {
    // two hemispherical caps meeting along the equator
    schema.bloodpool_sublabels = {2, 3};
    const double ro = 0.3 * m, ri = ro - std::max(3.0, 0.1 * m);
    each([&](int x, int y, int z, double dx, double dy, double dz) {
      const double r2 = dx * dx + dy * dy + dz * dz;
      if (r2 <= ro * ro && r2 > ri * ri) {
        labels.at(x, y, z) = dz < 0 ? 2 : 3;
      }
    });
    expected = {1, 0, 1, 2};
    break;
  }
  case PhantomKind::Torus: {
    // two half tori meeting at two discs
    schema.bloodpool_sublabels = {2, 3};
    const double major = 0.25 * m, minor = 0.1 * m;
    each([&](int x, int y, int z, double dx, double dy, double dz) {
      const double q = std::sqrt(dx * dx + dy * dy) - major;
      if (q * q + dz * dz <= minor * minor) {
        labels.at(x, y, z) = dx < 0 ? 2 : 3;
      }
    });
    expected = {1, 1, 0, 0};
    break;
  }
  case PhantomKind::TwoChamberOneChannel:
  case PhantomKind::TwoChamberTwoChannel: {
    // cylinder along x cut by a septum slab, channels are plugs through it
    schema.bloodpool_sublabels = {2, 3};
    const double radius = 0.25 * m, half_len = 0.3 * m;
    const int rc = spec.channel_radius_vox;
    if (rc + 1 >= radius / 2) {
      throw DataError("phantom: geometry does not fit (channel radius too large)");
    }
    const int s0 = static_cast<int>(c.x) - w / 2, s1 = s0 + w - 1;
    std::vector<detail::P3> plugs{{0, radius / 2, 0}};
    if (spec.kind == PhantomKind::TwoChamberTwoChannel) {
      plugs.push_back({0, -radius / 2, 0});
      expected = {1, 1, 0, 0};
    }
    each([&](int x, int y, int z, double dx, double dy, double dz) {
      if (dy * dy + dz * dz > radius * radius || std::abs(dx) > half_len) {
        return;
      }
      if (x < s0) {
        labels.at(x, y, z) = 2;
      } else if (x > s1) {
        labels.at(x, y, z) = 3;
      } else {
        for (const auto &p : plugs) {
          if ((dy - p.y) * (dy - p.y) + dz * dz <= rc * rc) {
            labels.at(x, y, z) = 2;
          }
        }
      }
    });
    break;
  }
  case PhantomKind::ChamberGraph: {
    const int n = spec.chambers;
    if (n < 1) {
      throw DataError("phantom: n-chamber-graph needs at least one chamber");
    }
    std::vector<std::pair<int, int>> edges = spec.edges;
    if (edges.empty() && n > 1) {
      for (int i = 0; i + 1 < n; ++i) {
        edges.emplace_back(i, i + 1);
      }
      if (n > 2) {
        edges.emplace_back(n - 1, 0);
      }
    }
    for (auto [a, b] : edges) {
      if (a < 0 || b < 0 || a >= n || b >= n || a == b) {
        throw DataError("phantom: edge endpoints must be distinct chamber indices");
      }
    }
    if (!detail::graph_connected(n, edges)) {
      throw DataError("phantom: chamber graph must be connected");
    }
    if (2 + n + static_cast<int>(edges.size()) > 255) {
      throw DataError("phantom: too many chambers and channels for uint8 labels");
    }
    for (int i = 0; i < n + static_cast<int>(edges.size()); ++i) {
      schema.bloodpool_sublabels.push_back(static_cast<Label>(2 + i));
    }
    const double ring = n == 1 ? 0.0 : 0.25 * m;
    const double rs = n <= 2 ? 0.15 * m
                             : std::min(0.15 * m, ring * std::sin(3.14159265358979323846 / n) - w - 2);
    const double rc = spec.channel_radius_vox;
    std::vector<detail::P3> centres;
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * 3.14159265358979323846 * i / n;
      centres.push_back({c.x + ring * std::cos(a), c.y + ring * std::sin(a), c.z});
    }
    // z levels keep parallel and crossing channels apart
    std::vector<int> level(edges.size(), 0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      for (int lv = 0;; ++lv) {
        const int cand = lv % 2 == 0 ? lv / 2 : -(lv + 1) / 2;
        bool clash = false;
        for (std::size_t f = 0; f < e && !clash; ++f) {
          if (level[f] != cand) {
            continue;
          }
          const auto [a, b] = edges[e];
          const auto [p, q] = edges[f];
          const bool parallel = (a == p && b == q) || (a == q && b == p);
          clash = parallel || detail::chords_cross(a, b, p, q);
        }
        if (!clash) {
          level[e] = cand;
          break;
        }
      }
    }
    const double step = 2.0 * rc + 2.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (std::abs(level[e]) * step + rc > rs - 1.0) {
        throw DataError("phantom: geometry does not fit (too many parallel channels)");
      }
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      detail::P3 a = centres[static_cast<std::size_t>(edges[e].first)];
      detail::P3 b = centres[static_cast<std::size_t>(edges[e].second)];
      a.z += level[e] * step;
      b.z += level[e] * step;
      const Label l = static_cast<Label>(2 + n + static_cast<int>(e));
      auto in_chamber = [&](int x, int y, int z) {
        for (const auto &p : centres) {
          const double dx = x - p.x, dy = y - p.y, dz = z - p.z;
          if (dx * dx + dy * dy + dz * dz <= rs * rs) {
            return true;
          }
        }
        return false;
      };
      each([&](int x, int y, int z, double, double, double) {
        double t = 0;
        if (detail::dist2_point_segment({double(x), double(y), double(z)}, a, b, t) <= rc * rc &&
            t >= 0.0 && t <= 1.0 && !in_chamber(x, y, z)) {
          if (labels.at(x, y, z) != 0) {
            throw DataError("phantom: geometry does not fit (channels overlap)");
          }
          labels.at(x, y, z) = l;
        }
      });
    }
    for (int i = 0; i < n; ++i) {
      const detail::P3 p = centres[static_cast<std::size_t>(i)];
      each([&](int x, int y, int z, double, double, double) {
        const double dx = x - p.x, dy = y - p.y, dz = z - p.z;
        if (dx * dx + dy * dy + dz * dz <= rs * rs) {
          labels.at(x, y, z) = static_cast<Label>(2 + i);
        }
      });
    }
    const int b1 = static_cast<int>(edges.size()) - n + 1;
    expected = {1, b1, 0, 1 - b1};
    break;
  }
  }

  const BinaryMask pool = bloodpool_mask(labels, schema);
  const BinaryMask shell = detail::chebyshev_dilate(pool, w);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (shell[i] && !pool[i]) {
      labels[i] = schema.myocardium;
    }
  }
  const BoundingBox box = bounding_box(shell);
  if (!box.found || box.lo.x < 2 || box.lo.y < 2 || box.lo.z < 2 || box.hi.x > d.nx - 3 ||
      box.hi.y > d.ny - 3 || box.hi.z > d.nz - 3) {
    throw DataError("phantom: geometry does not fit the volume with a 2-voxel margin");
  }
  for (Label l : schema.bloodpool_sublabels) {
    if (count_label(labels, l) == 0) {
      throw DataError("phantom: geometry does not fit (sub-label " + std::to_string(l) +
                      " is empty)");
    }
  }
  const TopologySignature actual = betti_numbers(pool);
  if (actual != expected) {
    throw DataError("phantom: generated blood pool has signature " + actual.to_string() +
                    ", expected " + expected.to_string());
  }

  ScalarVolume image(d, spec.spacing, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    image[i] = schema.is_bloodpool(labels[i]) ? 1.0 : (labels[i] == schema.myocardium ? 0.35 : 0.05);
  }
  image = detail::box_blur(image);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 0.03);
  for (double &v : image.data()) {
    v += noise(rng);
  }
  return {std::move(image), std::move(labels), std::move(schema), expected};
}

} // namespace topoaug

#endif
