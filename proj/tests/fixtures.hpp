#ifndef TOPOAUG_TESTS_FIXTURES_HPP
#define TOPOAUG_TESTS_FIXTURES_HPP

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "topoaug/phantom.hpp"

namespace fixture {

using namespace topoaug;

/// Prediction built from a two-chamber phantom: `holes` septum patches are
/// relabelled as blood pool (each adds a handle) and `bumps` three-voxel
/// stubs are grown out of the chamber walls (topologically simple).
struct PlantedPrediction {
  LabelVolume pred;
  std::size_t bp_added = 0;      ///< voxels turned into blood pool
  std::size_t myo_removed = 0;   ///< of those, voxels that were myocardium
};

inline PlantedPrediction plant_defects(const Phantom &p, int holes, int bumps) {
  static const std::pair<int, int> kHoles[] = {{-8, 0}, {0, 0}, {-8, -8}, {0, -8}, {0, 8}, {-8, 8}};
  static const std::pair<int, int> kBumpSites[] = {{-12, 1}, {-6, 1}, {6, 1}, {12, 1},
                                                   {-12, -1}, {-6, -1}, {6, -1}, {12, -1}};
  if (holes > 6 || bumps > 8) {
    throw std::invalid_argument("plant_defects: too many defects");
  }
  const Dims d = p.labels.dims();
  if (d.nx != 64 || d.ny != 64 || d.nz != 64) {
    throw std::invalid_argument("plant_defects: expects a 64^3 phantom");
  }
  const int c = 32;
  const Label bp = p.schema.bloodpool_sublabels[0];
  PlantedPrediction out{p.labels, 0, 0};
  auto paint = [&](int x, int y, int z) {
    Label &v = out.pred.at(x, y, z);
    if (p.schema.is_bloodpool(v)) return;
    out.myo_removed += v == p.schema.myocardium;
    ++out.bp_added;
    v = bp;
  };
  int septum = -1;
  for (int x = 0; x < d.nx && septum < 0; ++x)
    if (p.labels.at(x, c, c) == p.schema.myocardium && p.labels.at(x - 1, c, c) != 0) septum = x;
  for (int k = 0; k < holes; ++k) {
    const auto [dy, dz] = kHoles[k];
    for (int z = -1; z <= 1; ++z)
      for (int y = -1; y <= 1; ++y) paint(septum, c + dy + y, c + dz + z);
  }
  for (int k = 0; k < bumps; ++k) {
    const auto [dx, side] = kBumpSites[k];
    const int x = c + dx;
    int z = side > 0 ? d.nz - 1 : 0;
    while (!p.schema.is_bloodpool(p.labels.at(x, c, z))) z -= side;
    for (int s = 1; s <= 3; ++s) paint(x, c, z + side * s);
  }
  return out;
}

inline BinaryMask ball(Dims d, double r) {
  BinaryMask m(d);
  const double cx = (d.nx - 1) / 2.0, cy = (d.ny - 1) / 2.0, cz = (d.nz - 1) / 2.0;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        m.at(x, y, z) = (x - cx) * (x - cx) + (y - cy) * (y - cy) + (z - cz) * (z - cz) <= r * r;
  return m;
}

inline BinaryMask solid_torus(Dims d, double major, double minor) {
  BinaryMask m(d);
  const double cx = (d.nx - 1) / 2.0, cy = (d.ny - 1) / 2.0, cz = (d.nz - 1) / 2.0;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const double q = std::hypot(x - cx, y - cy) - major;
        m.at(x, y, z) = q * q + (z - cz) * (z - cz) <= minor * minor;
      }
  return m;
}

/// Probability map of a two chamber phantom whose septum sits on the
/// threshold, with values spread over [0.45, 0.55].
inline ScalarVolume blurred_septum(const Phantom &p, std::uint64_t seed) {
  const BinaryMask pool = bloodpool_mask(p.labels, p.schema);
  ScalarVolume s = to_scalar(pool);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.45, 0.55);
  const Dims d = p.labels.dims();
  const int cx = d.nx / 2;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = cx - 2; x <= cx + 2; ++x) {
        if (p.labels.at(x, y, z) != p.schema.myocardium) continue;
        // only voxels between the chambers
        const bool left = pool.get_or(x - 3, y, z, 0), right = pool.get_or(x + 3, y, z, 0);
        if (left || right) s.at(x, y, z) = u(rng);
      }
  return s;
}

inline Phantom septum_phantom() {
  PhantomSpec spec;
  spec.kind = PhantomKind::TwoChamberOneChannel;
  spec.wall_thickness_vox = 1;
  return generate_phantom(spec);
}

} // namespace fixture

#endif
