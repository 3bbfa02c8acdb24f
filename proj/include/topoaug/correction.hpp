#ifndef TOPOAUG_CORRECTION_HPP
#define TOPOAUG_CORRECTION_HPP

// Fast-marching topology correction of a single level set.
//
// A region starts at a template and is grown through a scalar map in order of
// decreasing value, accepting a voxel only while it is simple for the current
// region. The result therefore has exactly the template's topology. Shrinking
// works the same way from the other side.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

#include "topoaug/error.hpp"
#include "topoaug/topology.hpp"
#include "topoaug/volume.hpp"

namespace topoaug {

enum class CorrectionDirection { Grow, Shrink, Auto };

struct CorrectionParams {
  double threshold = 0.5;
  CorrectionDirection direction = CorrectionDirection::Grow;
  ConnectivityPair conn{};

  void validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) {
      throw DataError("correction threshold must lie strictly inside (0, 1)");
    }
  }
};

struct CorrectionDiff {
  std::size_t added = 0;
  std::size_t removed = 0;
  /// (added + removed) / popcount(before). An empty `before` gives 0 when
  /// nothing changed and +inf otherwise.
  double fraction_changed = 0.0;
};

inline CorrectionDiff correction_diff(const BinaryMask &before, const BinaryMask &after) {
  require_same_grid(before, after, "correction_diff");
  CorrectionDiff d;
  std::size_t base = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const bool b = before[i] != 0, a = after[i] != 0;
    base += b;
    d.added += a && !b;
    d.removed += b && !a;
  }
  const std::size_t changed = d.added + d.removed;
  if (base == 0) {
    d.fraction_changed = changed == 0 ? 0.0 : INFINITY;
  } else {
    d.fraction_changed = static_cast<double>(changed) / static_cast<double>(base);
  }
  return d;
}

namespace detail {

struct Candidate {
  double priority;
  std::size_t index;
};

// Highest priority first; ties go to the smaller storage index.
struct HighFirst {
  bool operator()(const Candidate &a, const Candidate &b) const {
    if (a.priority != b.priority) {
      return a.priority < b.priority;
    }
    return a.index > b.index;
  }
};

// Lowest priority first; ties go to the smaller storage index.
struct LowFirst {
  bool operator()(const Candidate &a, const Candidate &b) const {
    if (a.priority != b.priority) {
      return a.priority > b.priority;
    }
    return a.index > b.index;
  }
};

template <typename Visit>
void for_each_neighbour(const BinaryMask &m, std::size_t i, Connectivity c, Visit visit) {
  const Index3 p = m.coord(i);
  if (c == Connectivity::Six) {
    for (const Index3 &o : kOffsets6) {
      if (m.contains(p + o)) {
        visit(m.index(p + o));
      }
    }
  } else {
    for (const Index3 &o : kOffsets26) {
      if (m.contains(p + o)) {
        visit(m.index(p + o));
      }
    }
  }
}

/// Priority-ordered epochs: a candidate that is not simple when popped is
/// deferred to the next epoch; the loop ends after an epoch that accepted
/// nothing. `eligible(i)` decides which voxels may ever change state; an
/// accepted voxel is set to `target_value`.
template <typename Order, typename Eligible, typename Seed, typename Adjacent>
void march(BinaryMask &region, const ScalarVolume &scalar, ConnectivityPair conn,
           Eligible eligible, Seed seed_candidates, Adjacent adjacency, bool target_value) {
  std::priority_queue<Candidate, std::vector<Candidate>, Order> heap;
  std::vector<std::uint8_t> queued(region.size(), 0);
  auto offer = [&](std::size_t j) {
    if (!queued[j] && (region[j] != 0) != target_value && eligible(j)) {
      queued[j] = 1;
      heap.push({scalar[j], j});
    }
  };
  seed_candidates(offer);

  std::vector<std::size_t> deferred;
  for (;;) {
    std::size_t accepted = 0;
    deferred.clear();
    while (!heap.empty()) {
      const Candidate c = heap.top();
      heap.pop();
      if ((region[c.index] != 0) == target_value) {
        continue;
      }
      const Index3 p = region.coord(c.index);
      if (simple_at(region, p.x, p.y, p.z, conn)) {
        region[c.index] = target_value ? 1 : 0;
        queued[c.index] = 0;
        ++accepted;
        for_each_neighbour(region, c.index, adjacency, offer);
      } else {
        deferred.push_back(c.index);
      }
    }
    if (accepted == 0 || deferred.empty()) {
      return;
    }
    for (std::size_t j : deferred) {
      heap.push({scalar[j], j});
    }
  }
}

/// Adds simple voxels whose scalar passes `passes(value)`.
template <typename Passes>
BinaryMask grow_region(const ScalarVolume &scalar, BinaryMask region, ConnectivityPair conn,
                       Passes passes) {
  const Connectivity adj = conn.foreground();
  march<HighFirst>(
      region, scalar, conn, [&](std::size_t j) { return passes(scalar[j]); },
      [&](auto offer) {
        for (std::size_t i = 0; i < region.size(); ++i) {
          if (region[i]) {
            for_each_neighbour(region, i, adj, offer);
          }
        }
      },
      adj, true);
  return region;
}

/// Removes simple voxels outside `keep` whose scalar is below `threshold`.
inline BinaryMask shrink_region(const ScalarVolume &scalar, BinaryMask region,
                                const BinaryMask &keep, ConnectivityPair conn,
                                double threshold) {
  const Connectivity adj = conn.background();
  auto eligible = [&](std::size_t j) { return !keep[j] && scalar[j] < threshold; };
  march<LowFirst>(
      region, scalar, conn, eligible,
      [&](auto offer) {
        for (std::size_t i = 0; i < region.size(); ++i) {
          if (!region[i]) {
            continue;
          }
          bool exposed = false;
          for_each_neighbour(region, i, adj, [&](std::size_t j) { exposed |= !region[j]; });
          const Index3 p = region.coord(i);
          const Dims &d = region.dims();
          exposed |= p.x == 0 || p.y == 0 || p.z == 0 || p.x + 1 == d.nx ||
                     p.y + 1 == d.ny || p.z + 1 == d.nz;
          if (exposed) {
            offer(i);
          }
        }
      },
      adj, false);
  return region;
}

} // namespace detail

/// Forces the `threshold` level set of `scalar` to carry the topology of
/// `templ`. Template voxels are always part of the output.
///
/// Grow starts at the template and accepts voxels with scalar >= threshold.
/// Shrink starts from everything reachable with scalar > 0 and peels voxels
/// below the threshold, lowest first, so cavities and handles the template
/// lacks end up filled rather than cut. Auto runs both and keeps the result
/// closer to the plain thresholded set (grow on ties).
inline BinaryMask fast_marching_correct(const ScalarVolume &scalar, const BinaryMask &templ,
                                        const CorrectionParams &params) {
  params.validate();
  require_same_grid(scalar, templ, "fast_marching_correct");
  if (popcount(templ) == 0) {
    throw DataError("fast_marching_correct: empty template");
  }
  const double t = params.threshold;
  auto grow = [&] {
    return detail::grow_region(scalar, templ, params.conn, [t](double v) { return v >= t; });
  };
  auto shrink = [&] {
    BinaryMask full =
        detail::grow_region(scalar, templ, params.conn, [](double v) { return v > 0.0; });
    return detail::shrink_region(scalar, std::move(full), templ, params.conn, t);
  };

  BinaryMask out;
  switch (params.direction) {
  case CorrectionDirection::Grow:
    out = grow();
    break;
  case CorrectionDirection::Shrink:
    out = shrink();
    break;
  case CorrectionDirection::Auto: {
    const BinaryMask reference = threshold_at_least(scalar, t);
    BinaryMask g = grow();
    BinaryMask s = shrink();
    const auto dg = correction_diff(reference, g);
    const auto ds = correction_diff(reference, s);
    out = (ds.added + ds.removed < dg.added + dg.removed) ? std::move(s) : std::move(g);
    break;
  }
  }

  if (betti_numbers(out, params.conn) != betti_numbers(templ, params.conn)) {
    throw InvariantError("fast_marching_correct: output topology differs from template");
  }
  return out;
}

/// Corrects a mask to the topology of a ball. The scalar map is a logistic of
/// the signed chamfer distance to the mask boundary and the template is the
/// deepest voxel; correction runs in auto mode inside the mask's bounding box
/// grown by two voxels and clipped to the grid.
inline BinaryMask correct_to_ball(const BinaryMask &mask, ConnectivityPair conn = {}) {
  const BoundingBox box = bounding_box(mask);
  if (!box.found) {
    throw DataError("correct_to_ball: empty mask");
  }
  constexpr int kMargin = 2;
  // the box stays on the grid so nothing the correction adds can be lost
  const Dims &d = mask.dims();
  const Index3 lo{std::max(box.lo.x - kMargin, 0), std::max(box.lo.y - kMargin, 0),
                  std::max(box.lo.z - kMargin, 0)};
  const Index3 hi{std::min(box.hi.x + kMargin, d.nx - 1), std::min(box.hi.y + kMargin, d.ny - 1),
                  std::min(box.hi.z + kMargin, d.nz - 1)};
  const Dims cd{hi.x - lo.x + 1, hi.y - lo.y + 1, hi.z - lo.z + 1};
  const BinaryMask local = crop(mask, lo, cd, std::uint8_t{0});

  BinaryMask outside(cd, local.spacing(), 0);
  for (std::size_t i = 0; i < local.size(); ++i) {
    outside[i] = local[i] ? 0 : 1;
  }
  const DistanceMap din = inner_distance(local);
  const DistanceMap dout = inner_distance(outside, false);

  ScalarVolume level(cd, local.spacing(), 0.0);
  std::size_t seed = 0;
  for (std::size_t i = 0; i < local.size(); ++i) {
    const double signed_dist = static_cast<double>(din[i] - dout[i]) / 3.0;
    level[i] = 1.0 / (1.0 + std::exp(-signed_dist));
    if (din[i] > din[seed]) {
      seed = i;
    }
  }
  BinaryMask templ(cd, local.spacing(), 0);
  templ[seed] = 1;

  CorrectionParams params;
  params.direction = CorrectionDirection::Auto;
  params.conn = conn;
  const BinaryMask corrected = fast_marching_correct(level, templ, params);

  BinaryMask out(mask.dims(), mask.spacing(), 0);
  paste(out, corrected, lo);
  const TopologySignature ball{1, 0, 0, 1};
  if (betti_numbers(out, conn) != ball) {
    throw InvariantError("correct_to_ball: result is not a ball");
  }
  return out;
}

} // namespace topoaug

#endif
