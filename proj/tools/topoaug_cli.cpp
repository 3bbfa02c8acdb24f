// topoaug: command-line front end.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 invariant violation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "topoaug/topoaug.hpp"

namespace fs = std::filesystem;
using namespace topoaug;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInvariant = 4;

Dims parse_dims(const std::string &s) {
  std::vector<int> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stoi(item));
    } catch (const std::exception &) {
      throw DataError("--dims: '" + s + "' is not N or NX,NY,NZ");
    }
  }
  if (v.size() == 1) {
    return {v[0], v[0], v[0]};
  }
  if (v.size() == 3) {
    return {v[0], v[1], v[2]};
  }
  throw DataError("--dims: '" + s + "' is not N or NX,NY,NZ");
}

std::vector<std::pair<int, int>> parse_edges(const std::string &s) {
  std::vector<std::pair<int, int>> edges;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      throw DataError("--edges: expected a-b pairs separated by commas");
    }
    try {
      edges.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
    } catch (const std::exception &) {
      throw DataError("--edges: expected a-b pairs separated by commas");
    }
  }
  return edges;
}

std::string signature_line(const TopologySignature &s) {
  return s.to_string() + " \xCF\x87=" + std::to_string(s.euler);
}

unsigned default_jobs() {
  if (const char *env = std::getenv("TOPOAUG_JOBS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) {
        return static_cast<unsigned>(v);
      }
    } catch (const std::exception &) {
    }
    std::cerr << "warning: ignoring TOPOAUG_JOBS='" << env << "'\n";
  }
  return 1;
}

std::string sample_name(std::size_t index, const char *what) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "sample_%05zu_%s.nii.gz", index, what);
  return buf;
}

struct DeriveArgs {
  std::string labels, schema, out, conn = "26/6";
};

int run_derive(const DeriveArgs &a) {
  const LabelSchema schema = read_schema(a.schema);
  const LabelVolume labels = read_labels(a.labels);
  const CctTemplate t = derive_cct_template(labels, schema, parse_connectivity(a.conn));
  write_template(t, a.out);
  std::cout << signature_line(t.signature) << "\n";
  return 0;
}

struct AugmentArgs {
  std::vector<std::string> images, labels, templates;
  std::string schema, spec, mode = "preserving", out_dir;
  std::size_t count = 1;
  unsigned jobs = 0;
  long long seed = -1;
  double threshold = 0.5;
  int max_dilations = 1;
  bool no_warp = false;
  bool verbose = false;
};

int run_augment(const AugmentArgs &a) {
  const AugmentMode mode = parse_augment_mode(a.mode);
  if (a.images.size() != a.labels.size()) {
    throw DataError("augment: --image and --labels must be given the same number of times");
  }
  if (mode == AugmentMode::Preserving && a.templates.size() != a.labels.size()) {
    throw DataError("augment: preserving mode needs one --template per case");
  }
  if (a.templates.empty() && a.schema.empty()) {
    throw DataError("augment: --schema is required without --template");
  }
  AugmentationSpec spec = read_spec(a.spec);
  if (a.seed >= 0) {
    spec.seed = static_cast<std::uint64_t>(a.seed);
  }
  const LabelSchema given = a.schema.empty() ? LabelSchema{} : read_schema(a.schema);

  std::vector<CaseInput> cases;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    CaseInput c;
    c.name = fs::path(a.labels[i]).filename().string();
    c.image = read_scalar(a.images[i]);
    c.labels = read_labels(a.labels[i]);
    if (i < a.templates.size()) {
      c.templ = read_template(a.templates[i]);
      c.schema = c.templ.schema;
      if (!a.schema.empty() && !(given == c.schema)) {
        throw SchemaError("augment: --schema differs from the template's schema");
      }
      const TemplateValidation v = validate_template_against(c.labels, c.templ, c.schema);
      if (!v.ok) {
        throw DataError("augment: template '" + a.templates[i] + "' does not fit '" +
                        a.labels[i] + "' (expected " + v.expected.to_string() + ", template " +
                        v.actual.to_string() + ", " + std::to_string(v.voxels_outside) +
                        " voxels outside the blood pool)");
      }
    } else {
      c.schema = given;
    }
    require_same_grid(c.image, c.labels, "augment");
    cases.push_back(std::move(c));
  }

  PipelineOptions opts;
  opts.correction.threshold = a.threshold;
  opts.max_template_dilations = a.max_dilations;
  opts.allow_template_warp = !a.no_warp;
  if (!cases.empty() && mode == AugmentMode::Preserving) {
    opts.correction.conn = cases.front().templ.conn;
  }

  fs::create_directories(a.out_dir);
  std::ofstream manifest(fs::path(a.out_dir) / "manifest.jsonl", std::ios::trunc);
  if (!manifest) {
    throw DataError("cannot write manifest in '" + a.out_dir + "'");
  }
  std::size_t failed = 0, preserved = 0;
  auto sink = [&](const ManifestRecord &r, const AugmentedSample *s) {
    manifest << to_json(r).dump() << '\n';
    if (s == nullptr) {
      ++failed;
      std::cerr << "sample " << r.index << " failed: " << r.error << "\n";
      return;
    }
    preserved += r.signature_preserved();
    write_nifti(s->image, fs::path(a.out_dir) / sample_name(r.index, "image"),
                NiftiDatatype::Float32);
    write_nifti(s->labels, fs::path(a.out_dir) / sample_name(r.index, "labels"),
                NiftiDatatype::UInt8);
    if (a.verbose) {
      std::cerr << "sample " << r.index << " " << r.signature.to_string() << " changed "
                << r.changed_fraction << "\n";
    }
  };
  const unsigned jobs = a.jobs > 0 ? a.jobs : default_jobs();
  augment_batch(cases, spec, a.count, mode, opts, jobs, sink);
  manifest.flush();
  std::cout << a.count - failed << " samples written, " << failed << " failed, " << preserved
            << " with preserved signature\n";
  return 0;
}

struct EvaluateArgs {
  std::string truth, pred, schema, out, csv, conn = "26/6";
};

int run_evaluate(const EvaluateArgs &a) {
  const LabelSchema schema = read_schema(a.schema);
  const LabelVolume truth = read_labels(a.truth);
  const LabelVolume pred = read_labels(a.pred);
  const ErrorClusterReport r = evaluate(truth, pred, schema, parse_connectivity(a.conn));
  if (!a.out.empty()) {
    write_json_file(a.out, to_json(r));
  }
  if (!a.csv.empty()) {
    const bool fresh = !fs::exists(a.csv);
    std::ofstream csv(a.csv, std::ios::app);
    if (!csv) {
      throw DataError("cannot write '" + a.csv + "'");
    }
    if (fresh) {
      csv << csv_header() << '\n';
    }
    csv << csv_row(fs::path(a.pred).filename().string(), r) << '\n';
  }
  std::cout << summary_line(r) << "\n";
  return 0;
}

struct PhantomArgs {
  std::string kind, dims = "64", out_prefix, edges;
  int wall = 2, channel = 3, chambers = 3;
  std::uint64_t seed = 0;
};

int run_phantom(const PhantomArgs &a) {
  PhantomSpec spec;
  spec.kind = parse_phantom_kind(a.kind);
  spec.dims = parse_dims(a.dims);
  spec.wall_thickness_vox = a.wall;
  spec.channel_radius_vox = a.channel;
  spec.chambers = a.chambers;
  spec.seed = a.seed;
  if (!a.edges.empty()) {
    spec.edges = parse_edges(a.edges);
  }
  const Phantom p = generate_phantom(spec);
  const fs::path parent = fs::path(a.out_prefix).parent_path();
  if (!parent.empty()) {
    fs::create_directories(parent);
  }
  write_nifti(p.image, a.out_prefix + "_image.nii.gz", NiftiDatatype::Float32);
  write_nifti(p.labels, a.out_prefix + "_labels.nii.gz", NiftiDatatype::UInt8);
  write_json_file(a.out_prefix + "_schema.json", to_json(p.schema));
  std::cout << signature_line(p.expected) << "\n";
  return 0;
}

struct CheckArgs {
  std::string labels, schema, conn = "26/6";
};

int run_check(const CheckArgs &a) {
  const LabelSchema schema = read_schema(a.schema);
  const LabelVolume labels = read_labels(a.labels);
  require_schema_labels(labels, schema);
  const TopologySignature s = betti_numbers(bloodpool_mask(labels, schema), parse_connectivity(a.conn));
  std::cout << signature_line(s) << "\n";
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Topology-preserving augmentation of cardiac segmentations"};
  app.require_subcommand(1);

  DeriveArgs derive;
  auto *c_derive = app.add_subcommand("derive-template", "Derive the blood pool template");
  c_derive->add_option("--labels", derive.labels, "Label volume (NIfTI)")->required();
  c_derive->add_option("--schema", derive.schema, "Label schema (JSON)")->required();
  c_derive->add_option("--out", derive.out, "Template mask path; sidecar goes next to it")
      ->required();
  c_derive->add_option("--connectivity", derive.conn, "26/6 or 6/26");

  AugmentArgs aug;
  auto *c_aug = app.add_subcommand("augment", "Generate augmented samples");
  c_aug->add_option("--image", aug.images, "Image volume, one per case")->required();
  c_aug->add_option("--labels", aug.labels, "Label volume, one per case")->required();
  c_aug->add_option("--template", aug.templates, "Template mask, one per case");
  c_aug->add_option("--schema", aug.schema, "Label schema (default: from the template)");
  c_aug->add_option("--spec", aug.spec, "Augmentation config (JSON)")->required();
  c_aug->add_option("--count", aug.count, "Number of samples")->required()->check(CLI::PositiveNumber);
  c_aug->add_option("--mode", aug.mode, "preserving, naive or orthogonal")
      ->check(CLI::IsMember({"preserving", "naive", "orthogonal"}));
  c_aug->add_option("--out-dir", aug.out_dir, "Output directory")->required();
  c_aug->add_option("--jobs", aug.jobs, "Worker threads (default: TOPOAUG_JOBS or 1)");
  c_aug->add_option("--seed", aug.seed, "Override the config's seed")->check(CLI::NonNegativeNumber);
  c_aug->add_option("--threshold", aug.threshold, "Correction level set");
  c_aug->add_option("--max-template-dilations", aug.max_dilations,
                    "Dilation passes tried before warping the template")
      ->check(CLI::NonNegativeNumber);
  c_aug->add_flag("--no-template-warp", aug.no_warp, "Fail samples whose template breaks");
  c_aug->add_flag("-v,--verbose", aug.verbose, "Per-sample progress on stderr");

  EvaluateArgs ev;
  auto *c_eval = app.add_subcommand("evaluate", "Score a prediction against the truth");
  c_eval->add_option("--truth", ev.truth, "Ground truth labels")->required();
  c_eval->add_option("--pred", ev.pred, "Predicted labels")->required();
  c_eval->add_option("--schema", ev.schema, "Label schema (JSON)")->required();
  c_eval->add_option("--out", ev.out, "Report JSON");
  c_eval->add_option("--csv", ev.csv, "Append a summary row to this CSV file");
  c_eval->add_option("--connectivity", ev.conn, "26/6 or 6/26");

  PhantomArgs ph;
  auto *c_ph = app.add_subcommand("phantom", "Write a synthetic phantom");
  c_ph->add_option("--kind", ph.kind, "ball, shell, torus, two-chamber-one-channel, "
                                      "two-chamber-two-channel or n-chamber-graph")
      ->required();
  c_ph->add_option("--dims", ph.dims, "N or NX,NY,NZ");
  c_ph->add_option("--out-prefix", ph.out_prefix, "Writes <prefix>_image/_labels/_schema")
      ->required();
  c_ph->add_option("--wall-thickness", ph.wall, "Myocardium thickness (voxels)");
  c_ph->add_option("--channel-radius", ph.channel, "Channel radius (voxels)");
  c_ph->add_option("--chambers", ph.chambers, "n-chamber-graph: chamber count");
  c_ph->add_option("--edges", ph.edges, "n-chamber-graph: channels as a-b,c-d,...");
  c_ph->add_option("--seed", ph.seed, "Image noise seed");

  CheckArgs chk;
  auto *c_chk = app.add_subcommand("check-topology", "Print the blood pool signature");
  c_chk->add_option("--labels", chk.labels, "Label volume")->required();
  c_chk->add_option("--schema", chk.schema, "Label schema (JSON)")->required();
  c_chk->add_option("--connectivity", chk.conn, "26/6 or 6/26");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_derive) {
      return run_derive(derive);
    }
    if (*c_aug) {
      return run_augment(aug);
    }
    if (*c_eval) {
      return run_evaluate(ev);
    }
    if (*c_ph) {
      return run_phantom(ph);
    }
    if (*c_chk) {
      return run_check(chk);
    }
  } catch (const InvariantError &e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
