#ifndef TOPOAUG_METRIC_HPP
#define TOPOAUG_METRIC_HPP

// Overlap and topology-aware scoring of a predicted segmentation.

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "topoaug/error.hpp"
#include "topoaug/topology.hpp"
#include "topoaug/volume.hpp"

namespace topoaug {

/// 2|A∩B| / (|A| + |B|), 1.0 when both are empty.
inline double dice(const BinaryMask &a, const BinaryMask &b) {
  require_same_grid(a, b, "dice");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) {
    return 1.0;
  }
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

struct ErrorCluster {
  std::size_t voxel_count = 0;
  std::array<double, 3> centroid{0, 0, 0}; ///< voxel coordinates
  bool relevant = false;
  /// Betti numbers of truth with the cluster toggled, minus those of truth.
  std::array<int, 3> signature_delta{0, 0, 0};
};

struct ClusterCounts {
  std::size_t fp_total = 0;
  std::size_t fp_relevant = 0;
  std::size_t fn_total = 0;
  std::size_t fn_relevant = 0;
};

struct ErrorClusterReport {
  std::vector<ErrorCluster> fp_clusters;
  std::vector<ErrorCluster> fn_clusters;
  ClusterCounts counts;
  std::map<std::string, double> dsc_per_class;
  TopologySignature truth_signature;
  TopologySignature pred_signature;
};

namespace detail {

inline std::vector<ErrorCluster> score_clusters(const BinaryMask &truth,
                                                const TopologySignature &base,
                                                const BinaryMask &errors, bool set_value,
                                                ConnectivityPair conn,
                                                Connectivity cluster_conn) {
  const Components comps = connected_components(errors, cluster_conn);
  std::vector<ErrorCluster> out(comps.count);
  std::vector<std::vector<std::size_t>> members(comps.count);
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (const std::uint32_t id = comps.labels[i]) {
      members[id - 1].push_back(i);
    }
  }
  BinaryMask toggled = truth;
  for (std::uint32_t k = 0; k < comps.count; ++k) {
    ErrorCluster &c = out[k];
    c.voxel_count = members[k].size();
    for (std::size_t i : members[k]) {
      const Index3 p = truth.coord(i);
      c.centroid[0] += p.x;
      c.centroid[1] += p.y;
      c.centroid[2] += p.z;
      toggled[i] = set_value ? 1 : 0;
    }
    for (double &v : c.centroid) {
      v /= static_cast<double>(c.voxel_count);
    }
    const TopologySignature after = betti_numbers(toggled, conn);
    c.signature_delta = {after.b0 - base.b0, after.b1 - base.b1, after.b2 - base.b2};
    c.relevant = after != base;
    for (std::size_t i : members[k]) {
      toggled[i] = truth[i];
    }
  }
  return out;
}

} // namespace detail

/// FP = pred \ truth and FN = truth \ pred, each split into clusters. A
/// cluster is relevant when toggling all of it on truth changes the Betti
/// numbers of truth (and so of its complement).
inline ErrorClusterReport topo_error_clusters(const BinaryMask &truth, const BinaryMask &pred,
                                              ConnectivityPair conn = {},
                                              Connectivity cluster_conn = Connectivity::TwentySix) {
  require_same_grid(truth, pred, "topo_error_clusters");
  ErrorClusterReport r;
  r.truth_signature = betti_numbers(truth, conn);
  r.pred_signature = betti_numbers(pred, conn);
  r.fp_clusters = detail::score_clusters(truth, r.truth_signature, mask_difference(pred, truth),
                                         true, conn, cluster_conn);
  r.fn_clusters = detail::score_clusters(truth, r.truth_signature, mask_difference(truth, pred),
                                         false, conn, cluster_conn);
  r.counts.fp_total = r.fp_clusters.size();
  r.counts.fn_total = r.fn_clusters.size();
  for (const auto &c : r.fp_clusters) {
    r.counts.fp_relevant += c.relevant;
  }
  for (const auto &c : r.fn_clusters) {
    r.counts.fn_relevant += c.relevant;
  }
  return r;
}

inline std::string class_key(const LabelSchema &schema, Label l) {
  const auto it = schema.display_names.find(l);
  return it != schema.display_names.end() ? it->second : "label_" + std::to_string(l);
}

/// DSC for the blood pool, the myocardium and every blood pool sub-class,
/// plus error clusters on the binary blood pool.
inline ErrorClusterReport evaluate(const LabelVolume &truth, const LabelVolume &pred,
                                   const LabelSchema &schema, ConnectivityPair conn = {}) {
  schema.validate();
  require_same_grid(truth, pred, "evaluate");
  require_schema_labels(truth, schema);
  require_schema_labels(pred, schema);
  const BinaryMask bt = bloodpool_mask(truth, schema), bp = bloodpool_mask(pred, schema);
  ErrorClusterReport r = topo_error_clusters(bt, bp, conn);
  r.dsc_per_class["bloodpool"] = dice(bt, bp);
  r.dsc_per_class["myocardium"] = dice(extract_mask(truth, {schema.myocardium}, schema),
                                       extract_mask(pred, {schema.myocardium}, schema));
  for (Label l : schema.bloodpool_sublabels) {
    r.dsc_per_class[class_key(schema, l)] =
        dice(extract_mask(truth, {l}, schema), extract_mask(pred, {l}, schema));
  }
  return r;
}

} // namespace topoaug

#endif
