#ifndef TOPOAUG_CCT_HPP
#define TOPOAUG_CCT_HPP

// Cardiac contiguous topology templates.
//
// Each blood pool sub-class is reduced to a ball, the corrected sub-classes
// are recombined and made well-composed, and the result is eroded to a thin
// object whose topology is only that of the contacts between sub-classes.

#include <cstddef>
#include <string>

#include "topoaug/correction.hpp"
#include "topoaug/error.hpp"
#include "topoaug/topology.hpp"
#include "topoaug/volume.hpp"

namespace topoaug {

struct CctTemplate {
  BinaryMask mask;
  TopologySignature signature;
  LabelSchema schema;
  ConnectivityPair conn{};
  /// Voxels changed by the per-sub-class ball corrections.
  std::size_t ball_corrected_voxels = 0;
  /// Voxels added to make the recombined pool well-composed.
  std::size_t well_composed_added = 0;
  /// Template voxels with all six face neighbours set; zero for a template
  /// that is one voxel wide everywhere. Reported, not enforced.
  std::size_t interior_voxels = 0;
};

struct CorrectedBloodPool {
  BinaryMask pool;
  std::size_t ball_corrected_voxels = 0;
  std::size_t well_composed_added = 0;
};

/// Union of the ball-corrected sub-classes, made well-composed.
inline CorrectedBloodPool corrected_bloodpool(const LabelVolume &labels,
                                              const LabelSchema &schema,
                                              ConnectivityPair conn = {}) {
  schema.validate();
  require_schema_labels(labels, schema);
  CorrectedBloodPool out;
  BinaryMask pool(labels.dims(), labels.spacing(), 0);
  for (Label l : schema.bloodpool_sublabels) {
    const BinaryMask sub = extract_mask(labels, {l}, schema);
    if (popcount(sub) == 0) {
      throw DataError("blood pool sub-label " + std::to_string(l) + " is empty");
    }
    const BinaryMask ball = correct_to_ball(sub, conn);
    const CorrectionDiff d = correction_diff(sub, ball);
    out.ball_corrected_voxels += d.added + d.removed;
    pool = mask_union(pool, ball);
  }
  out.pool = make_well_composed(pool);
  out.well_composed_added = popcount(out.pool) - popcount(pool);
  return out;
}

inline std::size_t interior_voxel_count(const BinaryMask &m) {
  const Dims d = m.dims();
  std::size_t n = 0;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        if (!m.at(x, y, z)) {
          continue;
        }
        bool inner = true;
        for (const Index3 &o : detail::kOffsets6) {
          inner = inner && m.get_or(x + o.x, y + o.y, z + o.z, 0) != 0;
        }
        n += inner;
      }
    }
  }
  return n;
}

inline CctTemplate derive_cct_template(const LabelVolume &labels, const LabelSchema &schema,
                                       ConnectivityPair conn = {}) {
  CorrectedBloodPool support = corrected_bloodpool(labels, schema, conn);
  const TopologySignature pool_signature = betti_numbers(support.pool, conn);
  CctTemplate t;
  t.mask = topological_erosion(support.pool, conn);
  t.signature = betti_numbers(t.mask, conn);
  if (t.signature != pool_signature) {
    throw InvariantError("derive_cct_template: erosion changed the blood pool topology (" +
                         pool_signature.to_string() + " -> " + t.signature.to_string() + ")");
  }
  if (!is_well_composed(t.mask).well_composed) {
    throw InvariantError("derive_cct_template: template is not well-composed");
  }
  t.schema = schema;
  t.conn = conn;
  t.ball_corrected_voxels = support.ball_corrected_voxels;
  t.well_composed_added = support.well_composed_added;
  t.interior_voxels = interior_voxel_count(t.mask);
  return t;
}

struct TemplateValidation {
  bool ok = false;
  bool contained = false;       ///< template inside the corrected blood pool
  bool signature_match = false; ///< template signature equals the pool's
  std::size_t voxels_outside = 0;
  TopologySignature expected;   ///< signature of the labels' corrected pool
  TopologySignature actual;     ///< the template's recorded signature
};

inline TemplateValidation validate_template_against(const LabelVolume &labels,
                                                    const CctTemplate &templ,
                                                    const LabelSchema &schema) {
  require_same_grid(labels, templ.mask, "validate_template_against");
  const CorrectedBloodPool support = corrected_bloodpool(labels, schema, templ.conn);
  TemplateValidation v;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    v.voxels_outside += templ.mask[i] && !support.pool[i];
  }
  v.contained = v.voxels_outside == 0;
  v.expected = betti_numbers(support.pool, templ.conn);
  v.actual = templ.signature;
  v.signature_match =
      v.expected == v.actual && betti_numbers(templ.mask, templ.conn) == templ.signature;
  v.ok = v.contained && v.signature_match;
  return v;
}

} // namespace topoaug

#endif
