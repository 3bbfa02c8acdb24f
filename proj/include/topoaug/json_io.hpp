#ifndef TOPOAUG_JSON_IO_HPP
#define TOPOAUG_JSON_IO_HPP

// JSON forms of schemas, augmentation configs, template sidecars, manifest
// records and evaluation reports.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "topoaug/cct.hpp"
#include "topoaug/error.hpp"
#include "topoaug/metric.hpp"
#include "topoaug/nifti.hpp"
#include "topoaug/pipeline.hpp"
#include "topoaug/transform.hpp"

namespace topoaug {

using Json = nlohmann::json;

inline Json read_json_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path.string() + "'");
  }
  try {
    return Json::parse(in);
  } catch (const Json::parse_error &e) {
    throw DataError("'" + path.string() + "': invalid JSON: " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path &path, const Json &j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw DataError("cannot write '" + path.string() + "'");
  }
  out << j.dump(2) << '\n';
}

namespace detail {

inline void reject_unknown_keys(const Json &j, const std::set<std::string> &known,
                                const std::string &what) {
  if (!j.is_object()) {
    throw SchemaError(what + ": expected a JSON object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw SchemaError(what + ": unknown key '" + it.key() + "'");
    }
  }
}

template <typename T>
T get_as(const Json &j, const std::string &what) {
  try {
    return j.get<T>();
  } catch (const Json::exception &e) {
    throw DataError(what + ": " + e.what());
  }
}

inline Label get_label(const Json &j, const std::string &what) {
  const int v = get_as<int>(j, what);
  if (v < 0 || v > 255) {
    throw SchemaError(what + ": label out of range 0..255");
  }
  return static_cast<Label>(v);
}

// A number applies to all three axes; an array gives one value per axis.
inline Vec3 get_vec3(const Json &j, const std::string &what) {
  if (j.is_number()) {
    const double v = get_as<double>(j, what);
    return {v, v, v};
  }
  if (j.is_array() && j.size() == 3) {
    return {get_as<double>(j[0], what), get_as<double>(j[1], what), get_as<double>(j[2], what)};
  }
  throw DataError(what + ": expected a number or an array of three numbers");
}

inline std::pair<double, double> get_range(const Json &j, const std::string &what) {
  if (j.is_array() && j.size() == 2 && j[0].is_number()) {
    return {get_as<double>(j[0], what), get_as<double>(j[1], what)};
  }
  throw DataError(what + ": expected [lo, hi]");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Schema

inline Json to_json(const LabelSchema &s) {
  Json names = Json::object();
  for (const auto &[label, name] : s.display_names) {
    names[std::to_string(label)] = name;
  }
  return {{"background", s.background},
          {"myocardium", s.myocardium},
          {"bloodpool", s.bloodpool_sublabels},
          {"names", names}};
}

inline LabelSchema schema_from_json(const Json &j) {
  if (!j.is_object()) {
    throw SchemaError("schema: expected a JSON object");
  }
  for (const char *key : {"background", "myocardium", "bloodpool"}) {
    if (!j.contains(key)) {
      throw SchemaError(std::string("schema: missing key '") + key + "'");
    }
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "background" && it.key() != "myocardium" && it.key() != "bloodpool" &&
        it.key() != "names") {
      throw SchemaError("schema: unknown key '" + it.key() + "'");
    }
  }
  LabelSchema s;
  s.background = detail::get_label(j["background"], "schema.background");
  s.myocardium = detail::get_label(j["myocardium"], "schema.myocardium");
  if (!j["bloodpool"].is_array()) {
    throw SchemaError("schema.bloodpool: expected an array of labels");
  }
  for (const Json &l : j["bloodpool"]) {
    s.bloodpool_sublabels.push_back(detail::get_label(l, "schema.bloodpool"));
  }
  if (j.contains("names")) {
    for (auto it = j["names"].begin(); it != j["names"].end(); ++it) {
      int label = -1;
      try {
        label = std::stoi(it.key());
      } catch (const std::exception &) {
        throw SchemaError("schema.names: key '" + it.key() + "' is not a label");
      }
      s.display_names[detail::get_label(label, "schema.names")] =
          detail::get_as<std::string>(it.value(), "schema.names");
    }
  }
  s.validate();
  return s;
}

inline LabelSchema read_schema(const std::filesystem::path &path) {
  return schema_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Augmentation config

inline Json to_json(const AugmentationSpec &s) {
  Json scale = Json::array();
  for (const auto &[lo, hi] : s.scale_range) {
    scale.push_back({lo, hi});
  }
  return {{"rotation_range_deg", s.rotation_range_deg},
          {"scale_range", scale},
          {"translation_range_mm", s.translation_range_mm},
          {"deformation",
           {{"grid_spacing_vox", s.deformation.grid_spacing_vox},
            {"max_displacement_vox", s.deformation.max_displacement_vox}}},
          {"intensity",
           {{"noise_sigma", s.intensity.noise_sigma},
            {"bias_range", {s.intensity.bias_range.first, s.intensity.bias_range.second}}}},
          {"normalize", s.normalize},
          {"seed", s.seed}};
}

/// Keys missing from `j` keep their defaults; "seed" is required.
inline AugmentationSpec spec_from_json(const Json &j) {
  detail::reject_unknown_keys(j,
                              {"rotation_range_deg", "scale_range", "translation_range_mm",
                               "deformation", "intensity", "normalize", "seed"},
                              "augmentation spec");
  if (!j.contains("seed")) {
    throw DataError("augmentation spec: 'seed' is required");
  }
  AugmentationSpec s;
  if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"] >= 0)) {
    throw DataError("augmentation spec: 'seed' must be a non-negative integer");
  }
  s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("rotation_range_deg")) {
    s.rotation_range_deg = detail::get_vec3(j["rotation_range_deg"], "rotation_range_deg");
  }
  if (j.contains("translation_range_mm")) {
    s.translation_range_mm = detail::get_vec3(j["translation_range_mm"], "translation_range_mm");
  }
  if (j.contains("scale_range")) {
    const Json &sr = j["scale_range"];
    if (sr.is_array() && sr.size() == 3 && sr[0].is_array()) {
      for (int a = 0; a < 3; ++a) {
        s.scale_range[a] = detail::get_range(sr[a], "scale_range");
      }
    } else {
      const auto r = detail::get_range(sr, "scale_range");
      s.scale_range = {r, r, r};
    }
  }
  if (j.contains("deformation")) {
    const Json &d = j["deformation"];
    detail::reject_unknown_keys(d, {"grid_spacing_vox", "max_displacement_vox"}, "deformation");
    if (d.contains("grid_spacing_vox")) {
      s.deformation.grid_spacing_vox = detail::get_as<double>(d["grid_spacing_vox"], "grid_spacing_vox");
    }
    if (d.contains("max_displacement_vox")) {
      s.deformation.max_displacement_vox =
          detail::get_as<double>(d["max_displacement_vox"], "max_displacement_vox");
    }
  }
  if (j.contains("intensity")) {
    const Json &in = j["intensity"];
    detail::reject_unknown_keys(in, {"noise_sigma", "bias_range"}, "intensity");
    if (in.contains("noise_sigma")) {
      s.intensity.noise_sigma = detail::get_as<double>(in["noise_sigma"], "noise_sigma");
    }
    if (in.contains("bias_range")) {
      s.intensity.bias_range = detail::get_range(in["bias_range"], "bias_range");
    }
  }
  if (j.contains("normalize")) {
    s.normalize = detail::get_as<bool>(j["normalize"], "normalize");
  }
  s.validate();
  return s;
}

inline AugmentationSpec read_spec(const std::filesystem::path &path) {
  return spec_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Signatures, transforms, templates

inline Json to_json(const TopologySignature &s) {
  return {{"b0", s.b0}, {"b1", s.b1}, {"b2", s.b2}, {"euler", s.euler}};
}

inline TopologySignature signature_from_json(const Json &j) {
  detail::reject_unknown_keys(j, {"b0", "b1", "b2", "euler"}, "signature");
  TopologySignature s;
  s.b0 = detail::get_as<int>(j.at("b0"), "signature.b0");
  s.b1 = detail::get_as<int>(j.at("b1"), "signature.b1");
  s.b2 = detail::get_as<int>(j.at("b2"), "signature.b2");
  s.euler = j.contains("euler") ? detail::get_as<int>(j["euler"], "signature.euler")
                                : s.b0 - s.b1 + s.b2;
  return s;
}

inline Json to_json(const TransformParams &p) {
  Json j{{"rotation_deg", p.rotation_deg},
         {"scale", p.scale},
         {"translation_mm", p.translation_mm},
         {"max_displacement_mm", p.max_displacement_mm}};
  if (p.orthogonal_code >= 0) {
    j["orthogonal_code"] = p.orthogonal_code;
  }
  return j;
}

/// "x.nii.gz" -> "x.json", "x.nii" -> "x.json", otherwise appends ".json".
inline std::filesystem::path sidecar_path(const std::filesystem::path &mask_path) {
  std::string s = mask_path.string();
  for (const char *ext : {".nii.gz", ".nii", ".hdr.gz", ".hdr"}) {
    if (detail::ends_with(s, ext)) {
      return s.substr(0, s.size() - std::string(ext).size()) + ".json";
    }
  }
  return s + ".json";
}

inline Json template_sidecar(const CctTemplate &t) {
  return {{"signature", to_json(t.signature)},
          {"connectivity", to_string(t.conn)},
          {"schema", to_json(t.schema)},
          {"parameters",
           {{"ball_corrected_voxels", t.ball_corrected_voxels},
            {"well_composed_added", t.well_composed_added},
            {"interior_voxels", t.interior_voxels},
            {"voxels", popcount(t.mask)}}}};
}

inline void write_template(const CctTemplate &t, const std::filesystem::path &mask_path) {
  write_nifti(t.mask, mask_path, NiftiDatatype::UInt8);
  write_json_file(sidecar_path(mask_path), template_sidecar(t));
}

inline ConnectivityPair parse_connectivity(const std::string &s) {
  if (s == "26/6") {
    return ConnectivityPair::fg26();
  }
  if (s == "6/26") {
    return ConnectivityPair::fg6();
  }
  throw DataError("unknown connectivity pair '" + s + "' (expected 26/6 or 6/26)");
}

/// Reads the mask and its sidecar; the recorded signature must match the mask.
inline CctTemplate read_template(const std::filesystem::path &mask_path) {
  CctTemplate t;
  t.mask = read_mask(mask_path);
  const Json j = read_json_file(sidecar_path(mask_path));
  detail::reject_unknown_keys(j, {"signature", "connectivity", "schema", "parameters"},
                              "template sidecar");
  if (!j.contains("signature") || !j.contains("schema")) {
    throw DataError("template sidecar: 'signature' and 'schema' are required");
  }
  t.signature = signature_from_json(j["signature"]);
  t.schema = schema_from_json(j["schema"]);
  t.conn = j.contains("connectivity")
               ? parse_connectivity(detail::get_as<std::string>(j["connectivity"], "connectivity"))
               : ConnectivityPair{};
  if (j.contains("parameters")) {
    const Json &p = j["parameters"];
    t.ball_corrected_voxels = p.value("ball_corrected_voxels", std::size_t{0});
    t.well_composed_added = p.value("well_composed_added", std::size_t{0});
    t.interior_voxels = p.value("interior_voxels", std::size_t{0});
  }
  if (betti_numbers(t.mask, t.conn) != t.signature) {
    throw InvariantError("template '" + mask_path.string() +
                         "': mask topology does not match its sidecar signature");
  }
  return t;
}

// ---------------------------------------------------------------------------
// Manifest and reports

inline Json to_json(const ManifestRecord &r) {
  Json j{{"index", r.index},
         {"case", r.case_name},
         {"case_index", r.case_index},
         {"mode", to_string(r.mode)},
         {"transform", to_json(r.transform)},
         {"status", r.ok ? "ok" : "failed"}};
  if (r.ok) {
    j["signature"] = to_json(r.signature);
    j["source_signature"] = to_json(r.source_signature);
    j["signature_preserved"] = r.signature_preserved();
    j["changed_fraction"] = r.changed_fraction;
    j["template_dilations"] = r.template_dilations;
    j["template_recovery"] = to_string(r.template_recovery);
  } else {
    j["error"] = r.error;
  }
  return j;
}

inline Json to_json(const ErrorCluster &c) {
  return {{"voxel_count", c.voxel_count},
          {"centroid", c.centroid},
          {"relevant", c.relevant},
          {"signature_delta", c.signature_delta}};
}

inline Json to_json(const ErrorClusterReport &r) {
  Json fp = Json::array(), fn = Json::array();
  for (const auto &c : r.fp_clusters) {
    fp.push_back(to_json(c));
  }
  for (const auto &c : r.fn_clusters) {
    fn.push_back(to_json(c));
  }
  return {{"dsc", r.dsc_per_class},
          {"counts",
           {{"fp_total", r.counts.fp_total},
            {"fp_relevant", r.counts.fp_relevant},
            {"fn_total", r.counts.fn_total},
            {"fn_relevant", r.counts.fn_relevant}}},
          {"truth_signature", to_json(r.truth_signature)},
          {"pred_signature", to_json(r.pred_signature)},
          {"fp_clusters", fp},
          {"fn_clusters", fn}};
}

/// Numbers keep at least one decimal: 1 prints as "1.0".
inline std::string format_decimal(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  std::string s = os.str();
  if (s.find_first_of(".eE") == std::string::npos && s.find_first_of("0123456789") != std::string::npos) {
    s += ".0";
  }
  return s;
}

/// "DSC(bp) DSC(myo) fp_relevant".
inline std::string summary_line(const ErrorClusterReport &r) {
  return format_decimal(r.dsc_per_class.at("bloodpool")) + " " +
         format_decimal(r.dsc_per_class.at("myocardium")) + " " +
         std::to_string(r.counts.fp_relevant);
}

inline std::string csv_header() {
  return "case,dsc_bloodpool,dsc_myocardium,fp_total,fp_relevant,fn_total,fn_relevant";
}

inline std::string csv_row(const std::string &case_name, const ErrorClusterReport &r) {
  return case_name + "," + format_decimal(r.dsc_per_class.at("bloodpool")) + "," +
         format_decimal(r.dsc_per_class.at("myocardium")) + "," +
         std::to_string(r.counts.fp_total) + "," + std::to_string(r.counts.fp_relevant) + "," +
         std::to_string(r.counts.fn_total) + "," + std::to_string(r.counts.fn_relevant);
}

} // namespace topoaug

#endif
