#ifndef TOPOAUG_VOLUME_HPP
#define TOPOAUG_VOLUME_HPP

// Dense 3D voxel containers shared by every module.
//
// All volumes use x-fastest storage: index = x + nx * (y + ny * z).
// Topology operations treat the grid combinatorially; spacing only matters
// to spatial transforms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "topoaug/error.hpp"

namespace topoaug {

/// Class label storage. Schemas are limited to values 0..255.
using Label = std::uint8_t;

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  constexpr std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  constexpr bool valid() const { return nx > 0 && ny > 0 && nz > 0; }
  friend constexpr bool operator==(const Dims &, const Dims &) = default;
};

/// Voxel size in mm.
struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  constexpr bool valid() const { return sx > 0.0 && sy > 0.0 && sz > 0.0; }
  friend constexpr bool operator==(const Spacing &, const Spacing &) = default;
};

struct Index3 {
  int x = 0;
  int y = 0;
  int z = 0;
  friend constexpr bool operator==(const Index3 &, const Index3 &) = default;
  friend constexpr Index3 operator+(Index3 a, Index3 b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
};

struct MaskTag {};
struct LabelTag {};
struct ScalarTag {};
struct ComponentTag {};
struct DistanceTag {};

/// Value-semantic dense grid. The tag keeps masks, label maps and scalar
/// images from being mixed up even when their element types coincide.
template <typename T, typename Tag>
class Volume {
public:
  using value_type = T;

  Volume() = default;

  explicit Volume(Dims dims, Spacing spacing = {}, T fill = T{})
      : dims_(dims), spacing_(spacing) {
    check_geometry();
    data_.assign(dims.count(), fill);
  }

  Volume(Dims dims, Spacing spacing, std::vector<T> data)
      : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    check_geometry();
    if (data_.size() != dims_.count()) {
      throw DimensionError("volume data length " + std::to_string(data_.size()) +
                           " does not match dims " + std::to_string(dims_.count()));
    }
  }

  const Dims &dims() const { return dims_; }
  const Spacing &spacing() const { return spacing_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(z));
  }
  std::size_t index(Index3 p) const { return index(p.x, p.y, p.z); }

  Index3 coord(std::size_t i) const {
    const auto nx = static_cast<std::size_t>(dims_.nx);
    const auto ny = static_cast<std::size_t>(dims_.ny);
    return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny),
            static_cast<int>(i / (nx * ny))};
  }

  bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
  }
  bool contains(Index3 p) const { return contains(p.x, p.y, p.z); }

  const T &operator[](std::size_t i) const { return data_[i]; }
  T &operator[](std::size_t i) { return data_[i]; }

  const T &at(int x, int y, int z) const { return data_[index(x, y, z)]; }
  T &at(int x, int y, int z) { return data_[index(x, y, z)]; }
  const T &at(Index3 p) const { return data_[index(p)]; }
  T &at(Index3 p) { return data_[index(p)]; }

  /// Value at (x, y, z), or `outside` when the coordinate is off the grid.
  T get_or(int x, int y, int z, T outside) const {
    return contains(x, y, z) ? data_[index(x, y, z)] : outside;
  }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }
  const std::vector<T> &values() const { return data_; }

  bool same_grid(const Dims &d, const Spacing &s) const {
    return dims_ == d && spacing_ == s;
  }
  template <typename U, typename UTag>
  bool same_grid(const Volume<U, UTag> &other) const {
    return same_grid(other.dims(), other.spacing());
  }

  friend bool operator==(const Volume &, const Volume &) = default;

private:
  void check_geometry() const {
    if (!dims_.valid()) {
      throw DimensionError("volume dims must be positive");
    }
    if (!spacing_.valid()) {
      throw DimensionError("volume spacing must be strictly positive");
    }
  }

  Dims dims_{};
  Spacing spacing_{};
  std::vector<T> data_;
};

/// One byte per voxel, 0 or 1.
using BinaryMask = Volume<std::uint8_t, MaskTag>;
using LabelVolume = Volume<Label, LabelTag>;
using ScalarVolume = Volume<double, ScalarTag>;
using ComponentMap = Volume<std::uint32_t, ComponentTag>;
using DistanceMap = Volume<std::int32_t, DistanceTag>;

template <typename T, typename Tag, typename U, typename UTag>
void require_same_grid(const Volume<T, Tag> &a, const Volume<U, UTag> &b,
                       const char *what) {
  if (!a.same_grid(b)) {
    throw DimensionError(std::string(what) + ": volumes do not share dims/spacing");
  }
}

inline std::size_t popcount(const BinaryMask &m) {
  return static_cast<std::size_t>(std::count_if(
      m.data().begin(), m.data().end(), [](std::uint8_t v) { return v != 0; }));
}

inline BinaryMask mask_union(const BinaryMask &a, const BinaryMask &b) {
  require_same_grid(a, b, "mask_union");
  BinaryMask out = a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(a[i] | b[i]);
  }
  return out;
}

inline BinaryMask mask_difference(const BinaryMask &a, const BinaryMask &b) {
  require_same_grid(a, b, "mask_difference");
  BinaryMask out = a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(a[i] && !b[i]);
  }
  return out;
}

inline bool is_subset(const BinaryMask &a, const BinaryMask &b) {
  require_same_grid(a, b, "is_subset");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && !b[i]) {
      return false;
    }
  }
  return true;
}

inline bool is_probability_map(const ScalarVolume &v) {
  return std::all_of(v.data().begin(), v.data().end(),
                     [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; });
}

inline bool all_finite(const ScalarVolume &v) {
  return std::all_of(v.data().begin(), v.data().end(),
                     [](double x) { return std::isfinite(x); });
}

inline ScalarVolume to_scalar(const BinaryMask &m) {
  ScalarVolume out(m.dims(), m.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out[i] = m[i] ? 1.0 : 0.0;
  }
  return out;
}

inline BinaryMask threshold_at_least(const ScalarVolume &v, double t) {
  BinaryMask out(v.dims(), v.spacing());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] >= t ? 1 : 0;
  }
  return out;
}

/// Role of each label in a cardiac segmentation.
struct LabelSchema {
  Label background = 0;
  Label myocardium = 1;
  /// Blood pool sub-classes (chambers, vessels). Their union is the blood pool.
  std::vector<Label> bloodpool_sublabels;
  std::map<Label, std::string> display_names;

  std::vector<Label> all_labels() const {
    std::vector<Label> out;
    out.reserve(bloodpool_sublabels.size() + 2);
    out.push_back(background);
    out.push_back(myocardium);
    for (Label l : bloodpool_sublabels) {
      out.push_back(l);
    }
    return out;
  }

  bool contains(Label l) const {
    const auto all = all_labels();
    return std::find(all.begin(), all.end(), l) != all.end();
  }

  bool is_bloodpool(Label l) const {
    return std::find(bloodpool_sublabels.begin(), bloodpool_sublabels.end(), l) !=
           bloodpool_sublabels.end();
  }

  void validate() const {
    if (bloodpool_sublabels.empty()) {
      throw SchemaError("schema needs at least one blood pool sub-label");
    }
    auto all = all_labels();
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
      throw SchemaError("schema labels must be pairwise distinct");
    }
  }

  friend bool operator==(const LabelSchema &, const LabelSchema &) = default;
};

/// Throws SchemaError if a voxel carries a label the schema does not know.
inline void require_schema_labels(const LabelVolume &vol, const LabelSchema &schema) {
  std::array<bool, 256> known{};
  for (Label l : schema.all_labels()) {
    known[l] = true;
  }
  for (Label v : vol.data()) {
    if (!known[v]) {
      throw SchemaError("label " + std::to_string(v) + " is not in the schema");
    }
  }
}

inline BinaryMask extract_mask(const LabelVolume &vol, std::span<const Label> labels,
                               const LabelSchema &schema) {
  std::array<bool, 256> selected{};
  for (Label l : labels) {
    if (!schema.contains(l)) {
      throw SchemaError("extract_mask: label " + std::to_string(l) +
                        " is not in the schema");
    }
    selected[l] = true;
  }
  BinaryMask out(vol.dims(), vol.spacing());
  for (std::size_t i = 0; i < vol.size(); ++i) {
    out[i] = selected[vol[i]] ? 1 : 0;
  }
  return out;
}

inline BinaryMask extract_mask(const LabelVolume &vol, std::initializer_list<Label> labels,
                               const LabelSchema &schema) {
  return extract_mask(vol, std::span<const Label>(labels.begin(), labels.size()), schema);
}

inline BinaryMask bloodpool_mask(const LabelVolume &vol, const LabelSchema &schema) {
  return extract_mask(vol, schema.bloodpool_sublabels, schema);
}

/// Paints masks onto a background volume in order; later entries win overlaps.
inline LabelVolume compose_labels(std::span<const std::pair<BinaryMask, Label>> masks,
                                  Label background = 0) {
  if (masks.empty()) {
    throw DimensionError("compose_labels: no masks given");
  }
  const auto &first = masks.front().first;
  LabelVolume out(first.dims(), first.spacing(), background);
  for (const auto &[mask, label] : masks) {
    require_same_grid(mask, first, "compose_labels");
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) {
        out[i] = label;
      }
    }
  }
  return out;
}

inline std::size_t count_label(const LabelVolume &vol, Label l) {
  return static_cast<std::size_t>(std::count(vol.data().begin(), vol.data().end(), l));
}

/// Axis-aligned box [lo, hi] (inclusive) of set voxels; `found` is false for
/// an empty mask.
struct BoundingBox {
  Index3 lo{};
  Index3 hi{};
  bool found = false;
};

inline BoundingBox bounding_box(const BinaryMask &m) {
  BoundingBox b;
  b.lo = {m.dims().nx, m.dims().ny, m.dims().nz};
  b.hi = {-1, -1, -1};
  for (int z = 0; z < m.dims().nz; ++z) {
    for (int y = 0; y < m.dims().ny; ++y) {
      for (int x = 0; x < m.dims().nx; ++x) {
        if (m.at(x, y, z)) {
          b.found = true;
          b.lo = {std::min(b.lo.x, x), std::min(b.lo.y, y), std::min(b.lo.z, z)};
          b.hi = {std::max(b.hi.x, x), std::max(b.hi.y, y), std::max(b.hi.z, z)};
        }
      }
    }
  }
  return b;
}

/// Copies the box [lo, lo + dims) out of `src`; voxels outside `src` read as
/// `outside`.
template <typename T, typename Tag>
Volume<T, Tag> crop(const Volume<T, Tag> &src, Index3 lo, Dims dims, T outside = T{}) {
  Volume<T, Tag> out(dims, src.spacing(), outside);
  for (int z = 0; z < dims.nz; ++z) {
    for (int y = 0; y < dims.ny; ++y) {
      for (int x = 0; x < dims.nx; ++x) {
        out.at(x, y, z) = src.get_or(lo.x + x, lo.y + y, lo.z + z, outside);
      }
    }
  }
  return out;
}

/// Writes `patch` into `dst` with its origin at `lo`, skipping voxels that fall
/// off `dst`.
template <typename T, typename Tag>
void paste(Volume<T, Tag> &dst, const Volume<T, Tag> &patch, Index3 lo) {
  const Dims d = patch.dims();
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        if (dst.contains(lo.x + x, lo.y + y, lo.z + z)) {
          dst.at(lo.x + x, lo.y + y, lo.z + z) = patch.at(x, y, z);
        }
      }
    }
  }
}

} // namespace topoaug

#endif
