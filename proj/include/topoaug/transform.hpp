#ifndef TOPOAUG_TRANSFORM_HPP
#define TOPOAUG_TRANSFORM_HPP

// Spatial transforms for augmentation and the two resamplers.
//
// A SpatialTransform is stored as a pull-back map: for every output voxel it
// gives the input position to sample, so resampling never scatters. Affine
// parts act about the volume centre as translate * rotate * scale and work in
// mm; the optional displacement field is a coarse control grid of mm vectors
// interpolated trilinearly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "topoaug/error.hpp"
#include "topoaug/volume.hpp"

namespace topoaug {

using Vec3 = std::array<double, 3>;
using Mat4 = std::array<std::array<double, 4>, 4>;

inline constexpr Mat4 identity4() {
  return {{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
}

inline Mat4 multiply(const Mat4 &a, const Mat4 &b) {
  Mat4 out{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) {
        s += a[i][k] * b[k][j];
      }
      out[i][j] = s;
    }
  }
  return out;
}

inline double det3(const Mat4 &m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// Inverse of an affine 4x4 (last row 0 0 0 1). Caller checks det3 first.
inline Mat4 invert_affine(const Mat4 &m) {
  const double d = det3(m);
  Mat4 inv = identity4();
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
  for (int i = 0; i < 3; ++i) {
    inv[i][3] = -(inv[i][0] * m[0][3] + inv[i][1] * m[1][3] + inv[i][2] * m[2][3]);
  }
  return inv;
}

/// What was sampled, kept with every augmented sample.
struct TransformParams {
  Vec3 rotation_deg{0, 0, 0};
  Vec3 scale{1, 1, 1};
  Vec3 translation_mm{0, 0, 0};
  double max_displacement_mm = 0.0; ///< largest control vector norm, 0 = none
  int orthogonal_code = -1;         ///< 0..47 for lattice symmetries, else -1
  friend bool operator==(const TransformParams &, const TransformParams &) = default;
};

/// Control grid of displacement vectors (mm) on voxel positions k * spacing.
class DisplacementField {
public:
  DisplacementField(Dims control_dims, double spacing_vox, std::vector<Vec3> vectors_mm)
      : dims_(control_dims), spacing_(spacing_vox), vectors_(std::move(vectors_mm)) {
    if (!dims_.valid() || spacing_vox <= 0.0 || vectors_.size() != dims_.count()) {
      throw DataError("displacement field: inconsistent control grid");
    }
  }

  /// Control grid covering a volume of `dims` with the given spacing.
  static Dims control_dims_for(Dims dims, double spacing_vox) {
    auto n = [&](int len) {
      return static_cast<int>(std::floor((len - 1) / spacing_vox)) + 2;
    };
    return {n(dims.nx), n(dims.ny), n(dims.nz)};
  }

  const Dims &control_dims() const { return dims_; }
  double spacing_vox() const { return spacing_; }
  const std::vector<Vec3> &vectors() const { return vectors_; }

  /// Displacement at a (continuous) voxel position.
  Vec3 at(double x, double y, double z) const {
    const double u[3] = {x / spacing_, y / spacing_, z / spacing_};
    const int n[3] = {dims_.nx, dims_.ny, dims_.nz};
    int i0[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
      const double c = std::clamp(u[a], 0.0, static_cast<double>(n[a] - 1));
      i0[a] = std::min(static_cast<int>(std::floor(c)), n[a] - 2 < 0 ? 0 : n[a] - 2);
      f[a] = c - i0[a];
      if (n[a] == 1) {
        i0[a] = 0;
        f[a] = 0.0;
      }
    }
    Vec3 out{0, 0, 0};
    for (int corner = 0; corner < 8; ++corner) {
      const int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
      const double w = (dx ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dz ? f[2] : 1 - f[2]);
      if (w == 0.0) {
        continue;
      }
      const int cx = std::min(i0[0] + dx, n[0] - 1), cy = std::min(i0[1] + dy, n[1] - 1),
                cz = std::min(i0[2] + dz, n[2] - 1);
      const Vec3 &v = vectors_[static_cast<std::size_t>(cx) +
                               static_cast<std::size_t>(n[0]) *
                                   (static_cast<std::size_t>(cy) +
                                    static_cast<std::size_t>(n[1]) * static_cast<std::size_t>(cz))];
      for (int a = 0; a < 3; ++a) {
        out[a] += w * v[a];
      }
    }
    return out;
  }

  friend bool operator==(const DisplacementField &, const DisplacementField &) = default;

private:
  Dims dims_;
  double spacing_;
  std::vector<Vec3> vectors_;
};

class SpatialTransform {
public:
  SpatialTransform() = default;

  /// `forward` maps input mm to output mm; the stored map is its inverse.
  static SpatialTransform from_forward(const Mat4 &forward,
                                       std::optional<DisplacementField> field = std::nullopt,
                                       TransformParams params = {}) {
    SpatialTransform t;
    t.invertible_ = std::abs(det3(forward)) > 1e-9;
    t.pullback_ = t.invertible_ ? invert_affine(forward) : forward;
    t.field_ = std::move(field);
    t.params_ = params;
    return t;
  }

  static SpatialTransform identity() { return from_forward(identity4()); }

  bool invertible() const { return invertible_; }
  const Mat4 &pullback() const { return pullback_; }
  const std::optional<DisplacementField> &displacement() const { return field_; }
  const TransformParams &params() const { return params_; }

  /// Continuous input voxel position sampled for output voxel `p`. Positions
  /// within 1e-9 of a lattice point are snapped onto it.
  Vec3 source_position(int x, int y, int z, const Spacing &s) const {
    Vec3 mm{x * s.sx, y * s.sy, z * s.sz};
    if (field_) {
      const Vec3 d = field_->at(x, y, z);
      for (int a = 0; a < 3; ++a) {
        mm[a] += d[a];
      }
    }
    const double sp[3] = {s.sx, s.sy, s.sz};
    Vec3 q{};
    for (int a = 0; a < 3; ++a) {
      const double v =
          pullback_[a][0] * mm[0] + pullback_[a][1] * mm[1] + pullback_[a][2] * mm[2] +
          pullback_[a][3];
      q[a] = v / sp[a];
      const double r = std::round(q[a]);
      if (std::abs(q[a] - r) < 1e-9) {
        q[a] = r;
      }
    }
    return q;
  }

  friend bool operator==(const SpatialTransform &, const SpatialTransform &) = default;

private:
  Mat4 pullback_ = identity4();
  std::optional<DisplacementField> field_;
  TransformParams params_{};
  bool invertible_ = true;
};

inline Vec3 volume_centre_mm(Dims d, Spacing s) {
  return {0.5 * (d.nx - 1) * s.sx, 0.5 * (d.ny - 1) * s.sy, 0.5 * (d.nz - 1) * s.sz};
}

/// Forward affine c + translation + R * S * (x - c), R = Rz * Ry * Rx.
inline Mat4 centred_affine(const TransformParams &p, Dims d, Spacing s) {
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  const double ax = p.rotation_deg[0] * kDeg, ay = p.rotation_deg[1] * kDeg,
               az = p.rotation_deg[2] * kDeg;
  Mat4 rx = identity4(), ry = identity4(), rz = identity4(), sc = identity4();
  rx[1][1] = std::cos(ax);
  rx[1][2] = -std::sin(ax);
  rx[2][1] = std::sin(ax);
  rx[2][2] = std::cos(ax);
  ry[0][0] = std::cos(ay);
  ry[0][2] = std::sin(ay);
  ry[2][0] = -std::sin(ay);
  ry[2][2] = std::cos(ay);
  rz[0][0] = std::cos(az);
  rz[0][1] = -std::sin(az);
  rz[1][0] = std::sin(az);
  rz[1][1] = std::cos(az);
  for (int a = 0; a < 3; ++a) {
    sc[a][a] = p.scale[a];
  }
  const Vec3 c = volume_centre_mm(d, s);
  Mat4 to_origin = identity4(), back = identity4();
  for (int a = 0; a < 3; ++a) {
    to_origin[a][3] = -c[a];
    back[a][3] = c[a] + p.translation_mm[a];
  }
  return multiply(back, multiply(rz, multiply(ry, multiply(rx, multiply(sc, to_origin)))));
}

inline SpatialTransform make_transform(const TransformParams &p, Dims d, Spacing s,
                                       std::optional<DisplacementField> field = std::nullopt) {
  return SpatialTransform::from_forward(centred_affine(p, d, s), std::move(field), p);
}

/// Lattice symmetry `code` in 0..47 (axis permutation index * 8 + sign bits)
/// about the volume centre. Exact on cubic grids.
inline SpatialTransform orthogonal_transform(int code, Dims d, Spacing s) {
  if (code < 0 || code >= 48) {
    throw DataError("orthogonal transform code must be in 0..47");
  }
  static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                       {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  const int *perm = kPerms[code / 8];
  const int signs = code % 8;
  Mat4 m = identity4();
  for (int a = 0; a < 3; ++a) {
    m[a][a] = 0.0;
  }
  for (int a = 0; a < 3; ++a) {
    m[a][perm[a]] = (signs >> a) & 1 ? -1.0 : 1.0;
  }
  const Vec3 c = volume_centre_mm(d, s);
  Mat4 to_origin = identity4(), back = identity4();
  for (int a = 0; a < 3; ++a) {
    to_origin[a][3] = -c[a];
    back[a][3] = c[a];
  }
  TransformParams p;
  p.orthogonal_code = code;
  return SpatialTransform::from_forward(multiply(back, multiply(m, to_origin)), std::nullopt, p);
}

struct AugmentationSpec {
  Vec3 rotation_range_deg{10, 10, 10}; ///< symmetric bound per axis
  std::array<std::pair<double, double>, 3> scale_range{{{0.9, 1.1}, {0.9, 1.1}, {0.9, 1.1}}};
  Vec3 translation_range_mm{0, 0, 0}; ///< symmetric bound per axis
  struct Deformation {
    double grid_spacing_vox = 16.0;
    double max_displacement_vox = 3.0;
    friend bool operator==(const Deformation &, const Deformation &) = default;
  } deformation;
  struct Intensity {
    double noise_sigma = 0.05;
    std::pair<double, double> bias_range{0.95, 1.05};
    friend bool operator==(const Intensity &, const Intensity &) = default;
  } intensity;
  /// Normalise each source image to zero mean and unit variance first.
  bool normalize = true;
  std::uint64_t seed = 0;

  /// Every range collapsed: sampling always yields the identity and intensity
  /// is untouched.
  static AugmentationSpec identity(std::uint64_t seed = 0) {
    AugmentationSpec s;
    s.rotation_range_deg = {0, 0, 0};
    s.scale_range = {{{1, 1}, {1, 1}, {1, 1}}};
    s.translation_range_mm = {0, 0, 0};
    s.deformation.max_displacement_vox = 0.0;
    s.intensity.noise_sigma = 0.0;
    s.intensity.bias_range = {1.0, 1.0};
    s.normalize = false;
    s.seed = seed;
    return s;
  }

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (rotation_range_deg[a] < 0 || translation_range_mm[a] < 0) {
        throw DataError("augmentation spec: rotation/translation bounds must be >= 0");
      }
      if (!(scale_range[a].first <= scale_range[a].second) || scale_range[a].first <= 0) {
        throw DataError("augmentation spec: scale range must be positive and ordered");
      }
    }
    if (deformation.grid_spacing_vox <= 0 || deformation.max_displacement_vox < 0) {
      throw DataError("augmentation spec: bad deformation settings");
    }
    if (intensity.noise_sigma < 0 || !(intensity.bias_range.first <= intensity.bias_range.second)) {
      throw DataError("augmentation spec: bad intensity settings");
    }
  }

  friend bool operator==(const AugmentationSpec &, const AugmentationSpec &) = default;
};

/// Independent random streams per (seed, sample index, purpose).
enum class RngStream : std::uint32_t { Transform = 1, Intensity = 2, Orthogonal = 3 };

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index, RngStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

inline double uniform_in(std::mt19937_64 &rng, double lo, double hi) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return lo + (hi - lo) * u;
}

inline SpatialTransform sample_transform(const AugmentationSpec &spec, std::uint64_t index,
                                         Dims d, Spacing s) {
  spec.validate();
  std::mt19937_64 rng = make_rng(spec.seed, index, RngStream::Transform);
  TransformParams p;
  for (int a = 0; a < 3; ++a) {
    p.rotation_deg[a] = uniform_in(rng, -spec.rotation_range_deg[a], spec.rotation_range_deg[a]);
  }
  for (int a = 0; a < 3; ++a) {
    p.scale[a] = uniform_in(rng, spec.scale_range[a].first, spec.scale_range[a].second);
  }
  for (int a = 0; a < 3; ++a) {
    p.translation_mm[a] =
        uniform_in(rng, -spec.translation_range_mm[a], spec.translation_range_mm[a]);
  }
  std::optional<DisplacementField> field;
  if (spec.deformation.max_displacement_vox > 0.0) {
    const Dims cd = DisplacementField::control_dims_for(d, spec.deformation.grid_spacing_vox);
    std::vector<Vec3> vectors(cd.count());
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sp[3] = {s.sx, s.sy, s.sz};
    for (Vec3 &v : vectors) {
      // uniform direction, magnitude uniform in [0, max]
      Vec3 dir{normal(rng), normal(rng), normal(rng)};
      const double len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
      const double mag = uniform_in(rng, 0.0, spec.deformation.max_displacement_vox);
      for (int a = 0; a < 3; ++a) {
        v[a] = len > 0 ? dir[a] / len * mag * sp[a] : 0.0;
      }
      const double norm_mm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
      p.max_displacement_mm = std::max(p.max_displacement_mm, norm_mm);
    }
    field.emplace(cd, spec.deformation.grid_spacing_vox, std::move(vectors));
  }
  return make_transform(p, d, s, std::move(field));
}

/// Uniform draw from the 48 lattice symmetries (rotations and their
/// compositions with a lateral flip).
inline SpatialTransform sample_orthogonal(const AugmentationSpec &spec, std::uint64_t index,
                                          Dims d, Spacing s) {
  std::mt19937_64 rng = make_rng(spec.seed, index, RngStream::Orthogonal);
  const int code = std::uniform_int_distribution<int>(0, 47)(rng);
  return orthogonal_transform(code, d, s);
}

inline void require_invertible(const SpatialTransform &t, const char *what) {
  if (!t.invertible()) {
    throw DataError(std::string(what) + ": transform is not invertible");
  }
}

/// Output keeps the input grid. Samples outside the input read as 0.
inline ScalarVolume resample_trilinear(const ScalarVolume &vol, const SpatialTransform &t) {
  require_invertible(t, "resample_trilinear");
  const Dims d = vol.dims();
  ScalarVolume out(d, vol.spacing(), 0.0);
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const Vec3 q = t.source_position(x, y, z, vol.spacing());
        const double fx = std::floor(q[0]), fy = std::floor(q[1]), fz = std::floor(q[2]);
        const int ix = static_cast<int>(fx), iy = static_cast<int>(fy), iz = static_cast<int>(fz);
        if (ix < -1 || iy < -1 || iz < -1 || ix >= d.nx || iy >= d.ny || iz >= d.nz) {
          continue;
        }
        const double wx = q[0] - fx, wy = q[1] - fy, wz = q[2] - fz;
        double acc = 0.0;
        for (int corner = 0; corner < 8; ++corner) {
          const int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
          const double w =
              (dx ? wx : 1 - wx) * (dy ? wy : 1 - wy) * (dz ? wz : 1 - wz);
          if (w != 0.0) {
            acc += w * vol.get_or(ix + dx, iy + dy, iz + dz, 0.0);
          }
        }
        out.at(x, y, z) = acc;
      }
    }
  }
  return out;
}

/// Output keeps the input grid; samples outside the input read as `background`.
template <typename T, typename Tag>
Volume<T, Tag> resample_nearest(const Volume<T, Tag> &vol, const SpatialTransform &t,
                                T background = T{}) {
  require_invertible(t, "resample_nearest");
  const Dims d = vol.dims();
  Volume<T, Tag> out(d, vol.spacing(), background);
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const Vec3 q = t.source_position(x, y, z, vol.spacing());
        out.at(x, y, z) = vol.get_or(static_cast<int>(std::floor(q[0] + 0.5)),
                                     static_cast<int>(std::floor(q[1] + 0.5)),
                                     static_cast<int>(std::floor(q[2] + 0.5)), background);
      }
    }
  }
  return out;
}

/// bias * v + N(0, sigma), with bias uniform in the spec's range.
inline ScalarVolume perturb_intensity(const ScalarVolume &vol, const AugmentationSpec &spec,
                                      std::uint64_t index) {
  std::mt19937_64 rng = make_rng(spec.seed, index, RngStream::Intensity);
  const double bias =
      uniform_in(rng, spec.intensity.bias_range.first, spec.intensity.bias_range.second);
  ScalarVolume out = vol;
  const double sigma = spec.intensity.noise_sigma;
  std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = bias * vol[i] + (sigma > 0 ? noise(rng) : 0.0);
  }
  return out;
}

/// Zero mean, unit (population) variance.
inline ScalarVolume normalize(const ScalarVolume &vol) {
  const double n = static_cast<double>(vol.size());
  double mean = 0.0;
  for (double v : vol.data()) {
    mean += v;
  }
  mean /= n;
  double var = 0.0;
  for (double v : vol.data()) {
    var += (v - mean) * (v - mean);
  }
  var /= n;
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw DataError("normalize: volume is constant");
  }
  const double sd = std::sqrt(var);
  ScalarVolume out = vol;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (vol[i] - mean) / sd;
  }
  return out;
}

} // namespace topoaug

#endif
