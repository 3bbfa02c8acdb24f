#ifndef TOPOAUG_PIPELINE_HPP
#define TOPOAUG_PIPELINE_HPP

// Topology-preserving augmentation of (image, labels) pairs.
//
// Image, labels, blood pool and template are moved with one transform. The
// blood pool is resampled trilinearly into a probability map and corrected
// against the moved template, so its Betti numbers are those of the template
// in every sample. The myocardium is moved by nearest neighbour.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "topoaug/cct.hpp"
#include "topoaug/correction.hpp"
#include "topoaug/error.hpp"
#include "topoaug/topology.hpp"
#include "topoaug/transform.hpp"
#include "topoaug/volume.hpp"

namespace topoaug {

/// How the template reached the output grid.
enum class TemplateRecovery { None, Dilation, Warp };

inline std::string to_string(TemplateRecovery r) {
  switch (r) {
  case TemplateRecovery::None:
    return "none";
  case TemplateRecovery::Dilation:
    return "dilation";
  case TemplateRecovery::Warp:
    return "warp";
  }
  return "unknown";
}

struct PipelineOptions {
  CorrectionParams correction{};
  /// Topology-preserving dilation passes tried when nearest neighbour
  /// resampling breaks the template.
  int max_template_dilations = 1;
  /// Fall back to warp_homotopic when the dilations did not help; otherwise
  /// such samples fail.
  bool allow_template_warp = true;
  /// Perturb the resampled image with this spec's intensity settings.
  std::optional<AugmentationSpec> intensity;
  std::uint64_t sample_index = 0;
};

struct AugmentedSample {
  ScalarVolume image;
  LabelVolume labels;
  TransformParams transform;
  /// Signature the blood pool must carry (template in preserving mode,
  /// source blood pool otherwise).
  TopologySignature template_signature;
  TopologySignature signature; ///< blood pool of `labels`
  double changed_fraction = 0.0;
  int template_dilations = 0;
  TemplateRecovery template_recovery = TemplateRecovery::None;
  bool signature_preserved() const { return signature == template_signature; }
};

/// Moves `mask` along t by flipping simple voxels only, so the result has the
/// topology of `mask`. The sampling map is split into equal steps from the
/// identity to `t`, each moving no voxel by more than `max_step_vox`; after
/// each step the mask is pulled toward that step's nearest neighbour image
/// until no simple voxel of the difference is left.
inline BinaryMask warp_homotopic(const BinaryMask &mask, const SpatialTransform &t,
                                 ConnectivityPair conn = {}, double max_step_vox = 0.5) {
  require_invertible(t, "warp_homotopic");
  const Dims d = mask.dims();
  std::vector<Vec3> target(mask.size());
  double reach = 0.0;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const Vec3 q = t.source_position(x, y, z, mask.spacing());
        target[mask.index(x, y, z)] = q;
        reach = std::max({reach, std::abs(q[0] - x), std::abs(q[1] - y), std::abs(q[2] - z)});
      }
    }
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(reach / max_step_vox)));
  BinaryMask cur = mask;
  BinaryMask goal(d, mask.spacing(), 0);
  std::vector<std::size_t> diff, left;
  for (int s = 1; s <= steps; ++s) {
    const double f = static_cast<double>(s) / steps;
    for (std::size_t i = 0; i < goal.size(); ++i) {
      const Index3 p = goal.coord(i);
      const Vec3 &q = target[i];
      goal[i] = mask.get_or(static_cast<int>(std::floor(p.x + f * (q[0] - p.x) + 0.5)),
                            static_cast<int>(std::floor(p.y + f * (q[1] - p.y) + 0.5)),
                            static_cast<int>(std::floor(p.z + f * (q[2] - p.z) + 0.5)), 0);
    }
    diff.clear();
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (cur[i] != goal[i]) {
        diff.push_back(i);
      }
    }
    for (;;) {
      left.clear();
      for (std::size_t i : diff) {
        const Index3 p = cur.coord(i);
        if (detail::simple_at(cur, p.x, p.y, p.z, conn)) {
          cur[i] = goal[i];
        } else {
          left.push_back(i);
        }
      }
      if (left.size() == diff.size()) {
        break;
      }
      diff.swap(left);
    }
  }
  return cur;
}

namespace detail {

inline ScalarVolume transform_image(const ScalarVolume &image, const SpatialTransform &t,
                                    const PipelineOptions &opts) {
  ScalarVolume out = resample_trilinear(image, t);
  if (opts.intensity) {
    out = perturb_intensity(out, *opts.intensity, opts.sample_index);
  }
  return out;
}

// Sub-labels for corrected blood pool voxels: the resampled label where it is
// a blood pool label, otherwise that of the nearest such voxel through the
// pool (breadth first, 26-adjacency, storage order).
inline void assign_sublabels(LabelVolume &out, const LabelVolume &nearest,
                             const BinaryMask &pool, const LabelSchema &schema) {
  std::deque<std::size_t> queue;
  std::vector<std::uint8_t> done(out.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (pool[i] && schema.is_bloodpool(nearest[i])) {
      out[i] = nearest[i];
      done[i] = 1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    for_each_neighbour(pool, i, Connectivity::TwentySix, [&](std::size_t j) {
      if (pool[j] && !done[j]) {
        done[j] = 1;
        out[j] = out[i];
        queue.push_back(j);
      }
    });
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (pool[i] && !done[i]) {
      out[i] = schema.bloodpool_sublabels.front();
    }
  }
}

} // namespace detail

inline AugmentedSample augment_preserving(const ScalarVolume &image, const LabelVolume &labels,
                                          const LabelSchema &schema, const CctTemplate &templ,
                                          const SpatialTransform &t,
                                          const PipelineOptions &opts = {}) {
  schema.validate();
  require_same_grid(image, labels, "augment_preserving");
  require_same_grid(labels, templ.mask, "augment_preserving");
  require_schema_labels(labels, schema);
  require_invertible(t, "augment_preserving");
  const ConnectivityPair conn = opts.correction.conn;

  AugmentedSample s;
  s.transform = t.params();
  s.template_signature = templ.signature;
  s.image = detail::transform_image(image, t, opts);

  const BinaryMask pool = bloodpool_mask(labels, schema);
  BinaryMask tmask = templ.mask;
  const BinaryMask allowed = mask_union(pool, tmask);
  BinaryMask moved;
  for (int attempt = 0;; ++attempt) {
    moved = resample_nearest(tmask, t, std::uint8_t{0});
    if (popcount(moved) > 0 && betti_numbers(moved, conn) == templ.signature) {
      s.template_dilations = attempt;
      s.template_recovery = attempt == 0 ? TemplateRecovery::None : TemplateRecovery::Dilation;
      break;
    }
    if (attempt == opts.max_template_dilations) {
      if (!opts.allow_template_warp) {
        throw InvariantError("augment_preserving: transform destroys the template topology");
      }
      moved = warp_homotopic(templ.mask, t, conn);
      if (popcount(moved) == 0 || betti_numbers(moved, conn) != templ.signature) {
        throw InvariantError("augment_preserving: template warp lost the template topology");
      }
      s.template_dilations = attempt;
      s.template_recovery = TemplateRecovery::Warp;
      break;
    }
    tmask = topological_dilation(tmask, allowed, conn);
  }

  const ScalarVolume prob = resample_trilinear(to_scalar(pool), t);
  const BinaryMask corrected = fast_marching_correct(prob, moved, opts.correction);
  s.changed_fraction =
      correction_diff(threshold_at_least(prob, opts.correction.threshold), corrected)
          .fraction_changed;

  const LabelVolume nearest = resample_nearest(labels, t, schema.background);
  s.labels = LabelVolume(labels.dims(), labels.spacing(), schema.background);
  for (std::size_t i = 0; i < nearest.size(); ++i) {
    if (corrected[i]) {
      continue;
    }
    const Label l = nearest[i];
    if (l == schema.myocardium) {
      s.labels[i] = schema.myocardium;
    } else if (schema.is_bloodpool(l)) {
      // blood pool dropped by the correction joins an adjacent wall
      bool wall = false;
      detail::for_each_neighbour(corrected, i, Connectivity::Six,
                                 [&](std::size_t j) { wall |= nearest[j] == schema.myocardium; });
      s.labels[i] = wall ? schema.myocardium : schema.background;
    }
  }
  detail::assign_sublabels(s.labels, nearest, corrected, schema);

  s.signature = betti_numbers(bloodpool_mask(s.labels, schema), conn);
  if (s.signature != templ.signature) {
    throw InvariantError("augment_preserving: blood pool signature " + s.signature.to_string() +
                         " differs from template " + templ.signature.to_string());
  }
  return s;
}

/// Nearest neighbour resampling of all labels; the signature is recorded
/// against the source blood pool but not enforced.
inline AugmentedSample augment_naive(const ScalarVolume &image, const LabelVolume &labels,
                                     const LabelSchema &schema, const SpatialTransform &t,
                                     const PipelineOptions &opts = {}) {
  schema.validate();
  require_same_grid(image, labels, "augment_naive");
  require_invertible(t, "augment_naive");
  const ConnectivityPair conn = opts.correction.conn;
  AugmentedSample s;
  s.transform = t.params();
  s.template_signature = betti_numbers(bloodpool_mask(labels, schema), conn);
  s.image = detail::transform_image(image, t, opts);
  s.labels = resample_nearest(labels, t, schema.background);
  s.signature = betti_numbers(bloodpool_mask(s.labels, schema), conn);
  return s;
}

enum class AugmentMode { Preserving, Naive, Orthogonal };

inline std::string to_string(AugmentMode m) {
  switch (m) {
  case AugmentMode::Preserving:
    return "preserving";
  case AugmentMode::Naive:
    return "naive";
  case AugmentMode::Orthogonal:
    return "orthogonal";
  }
  return "unknown";
}

inline AugmentMode parse_augment_mode(const std::string &s) {
  for (AugmentMode m : {AugmentMode::Preserving, AugmentMode::Naive, AugmentMode::Orthogonal}) {
    if (to_string(m) == s) {
      return m;
    }
  }
  throw DataError("unknown augmentation mode '" + s + "'");
}

struct CaseInput {
  std::string name;
  ScalarVolume image;
  LabelVolume labels;
  LabelSchema schema;
  CctTemplate templ; ///< required in preserving mode only
};

struct ManifestRecord {
  std::size_t index = 0;
  std::size_t case_index = 0;
  std::string case_name;
  AugmentMode mode = AugmentMode::Preserving;
  TransformParams transform;
  TopologySignature source_signature;
  TopologySignature signature;
  double changed_fraction = 0.0;
  int template_dilations = 0;
  TemplateRecovery template_recovery = TemplateRecovery::None;
  bool ok = false;
  std::string error;
  bool signature_preserved() const { return ok && signature == source_signature; }
};

/// Receives samples in index order; `sample` is null for failed records.
using SampleSink = std::function<void(const ManifestRecord &, const AugmentedSample *sample)>;

/// Generates `count` samples; sample i uses case i mod cases.size() and the
/// transform drawn for index i. Work is spread over `jobs` threads but the
/// sink sees samples in index order, so output does not depend on `jobs`.
/// Failed samples are reported, not dropped.
inline std::vector<ManifestRecord> augment_batch(const std::vector<CaseInput> &cases,
                                                 const AugmentationSpec &spec, std::size_t count,
                                                 AugmentMode mode, PipelineOptions opts = {},
                                                 unsigned jobs = 1, const SampleSink &sink = {}) {
  if (count == 0) {
    throw DataError("augment_batch: count must be >= 1");
  }
  if (cases.empty()) {
    throw DataError("augment_batch: no input cases");
  }
  spec.validate();
  opts.intensity = spec;

  std::vector<ScalarVolume> images;
  images.reserve(cases.size());
  for (const CaseInput &c : cases) {
    images.push_back(spec.normalize ? normalize(c.image) : c.image);
  }

  std::vector<ManifestRecord> records(count);
  std::map<std::size_t, std::optional<AugmentedSample>> pending;
  std::size_t next_emit = 0;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::exception_ptr sink_error;

  auto run_one = [&](std::size_t i) {
    const CaseInput &c = cases[i % cases.size()];
    ManifestRecord rec;
    rec.index = i;
    rec.case_index = i % cases.size();
    rec.case_name = c.name;
    rec.mode = mode;
    std::optional<AugmentedSample> sample;
    try {
      const Dims d = c.labels.dims();
      const Spacing sp = c.labels.spacing();
      const SpatialTransform t = mode == AugmentMode::Orthogonal ? sample_orthogonal(spec, i, d, sp)
                                                                 : sample_transform(spec, i, d, sp);
      rec.transform = t.params();
      PipelineOptions o = opts;
      o.sample_index = i;
      const ScalarVolume &img = images[rec.case_index];
      sample = mode == AugmentMode::Preserving
                   ? augment_preserving(img, c.labels, c.schema, c.templ, t, o)
                   : augment_naive(img, c.labels, c.schema, t, o);
      rec.source_signature = sample->template_signature;
      rec.signature = sample->signature;
      rec.changed_fraction = sample->changed_fraction;
      rec.template_dilations = sample->template_dilations;
      rec.template_recovery = sample->template_recovery;
      rec.ok = true;
    } catch (const std::exception &e) {
      rec.ok = false;
      rec.error = e.what();
      sample.reset();
    }
    std::lock_guard<std::mutex> lock(mu);
    records[i] = rec;
    pending.emplace(i, std::move(sample));
    while (!pending.empty() && pending.begin()->first == next_emit) {
      auto node = pending.extract(pending.begin());
      if (sink && !sink_error) {
        const AugmentedSample *p = node.mapped() ? &*node.mapped() : nullptr;
        try {
          sink(records[next_emit], p);
        } catch (...) {
          sink_error = std::current_exception();
        }
      }
      ++next_emit;
    }
  };

  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      run_one(i);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < n; ++k) {
      pool.emplace_back(worker);
    }
    for (std::thread &th : pool) {
      th.join();
    }
  }
  if (sink_error) {
    std::rethrow_exception(sink_error);
  }
  return records;
}

} // namespace topoaug

#endif
