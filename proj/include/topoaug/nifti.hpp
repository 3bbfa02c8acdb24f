#ifndef TOPOAUG_NIFTI_HPP
#define TOPOAUG_NIFTI_HPP

// Minimal NIfTI-1 reader and writer.
//
// Single-file ".nii" (magic "n+1") and header/image pairs ".hdr"/".img"
// (magic "ni1"); either may be gzip-compressed, which is detected from the
// stream's magic bytes. Datatypes: uint8, int16, float32, float64. Voxels are
// kept in stored order; the srow affine is carried along but never applied.

#include <zlib.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "topoaug/error.hpp"
#include "topoaug/volume.hpp"

namespace topoaug {

class NiftiBadMagic : public DataError {
public:
  using DataError::DataError;
};
class NiftiUnsupportedDatatype : public DataError {
public:
  using DataError::DataError;
};
class NiftiTruncated : public DataError {
public:
  using DataError::DataError;
};
class NiftiOverflow : public DataError {
public:
  using DataError::DataError;
};

enum class NiftiDatatype : std::int16_t { UInt8 = 2, Int16 = 4, Float32 = 16, Float64 = 64 };

inline std::string to_string(NiftiDatatype t) {
  switch (t) {
  case NiftiDatatype::UInt8:
    return "uint8";
  case NiftiDatatype::Int16:
    return "int16";
  case NiftiDatatype::Float32:
    return "float32";
  case NiftiDatatype::Float64:
    return "float64";
  }
  return "unknown";
}

inline int bytes_per_voxel(NiftiDatatype t) {
  switch (t) {
  case NiftiDatatype::UInt8:
    return 1;
  case NiftiDatatype::Int16:
    return 2;
  case NiftiDatatype::Float32:
    return 4;
  case NiftiDatatype::Float64:
    return 8;
  }
  return 0;
}

/// Header fields that survive a round trip.
struct NiftiMeta {
  double scl_slope = 1.0;
  double scl_inter = 0.0;
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  std::array<std::array<float, 4>, 3> srow{{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}}};
  std::string descrip;
};

struct NiftiImage {
  Dims dims;
  Spacing spacing;
  NiftiDatatype datatype = NiftiDatatype::Float32;
  NiftiMeta meta;
  std::vector<double> raw;    ///< stored values
  std::vector<double> values; ///< raw * scl_slope + scl_inter
};

namespace detail {

inline constexpr std::size_t kNiftiHeaderSize = 348;

inline std::vector<unsigned char> read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path.string() + "'");
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path &path, const std::vector<unsigned char> &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write '" + path.string() + "'");
  }
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw DataError("write failed for '" + path.string() + "'");
  }
}

inline bool is_gzip(const std::vector<unsigned char> &b) {
  return b.size() >= 2 && b[0] == 0x1f && b[1] == 0x8b;
}

inline std::vector<unsigned char> gunzip(const std::vector<unsigned char> &in,
                                         const std::string &name) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) {
    throw DataError("zlib: inflateInit2 failed");
  }
  std::vector<unsigned char> out;
  std::array<unsigned char, 1 << 16> buf{};
  zs.next_in = const_cast<Bytef *>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      if (rc == Z_BUF_ERROR) {
        throw NiftiTruncated("'" + name + "': gzip stream is truncated");
      }
      throw DataError("'" + name + "': corrupt gzip stream");
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    if (rc != Z_STREAM_END && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw NiftiTruncated("'" + name + "': gzip stream is truncated");
    }
  }
  inflateEnd(&zs);
  return out;
}

// Deterministic gzip: fixed level, zero mtime, no file name.
inline std::vector<unsigned char> gzip(const std::vector<unsigned char> &in) {
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw DataError("zlib: deflateInit2 failed");
  }
  std::vector<unsigned char> out(deflateBound(&zs, static_cast<uLong>(in.size())) + 32);
  zs.next_in = const_cast<Bytef *>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) {
    throw DataError("zlib: deflate failed");
  }
  out.resize(zs.total_out);
  return out;
}

inline std::vector<unsigned char> load_maybe_gz(const std::filesystem::path &path) {
  std::vector<unsigned char> b = read_file(path);
  return is_gzip(b) ? gunzip(b, path.string()) : b;
}

inline bool ends_with(const std::string &s, const std::string &suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

class Bytes {
public:
  Bytes(unsigned char *p, bool swap) : p_(p), swap_(swap) {}

  template <typename T>
  T get(std::size_t off) const {
    unsigned char tmp[sizeof(T)];
    std::memcpy(tmp, p_ + off, sizeof(T));
    if (swap_) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
        std::swap(tmp[i], tmp[sizeof(T) - 1 - i]);
      }
    }
    T v;
    std::memcpy(&v, tmp, sizeof(T));
    return v;
  }

  template <typename T>
  void put(std::size_t off, T v) {
    std::memcpy(p_ + off, &v, sizeof(T));
  }

private:
  unsigned char *p_;
  bool swap_;
};

inline NiftiImage decode_nifti(std::vector<unsigned char> header,
                               const std::vector<unsigned char> *separate_payload,
                               const std::string &name) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  if (header.size() < kNiftiHeaderSize) {
    throw NiftiTruncated("'" + name + "': header shorter than 348 bytes");
  }
  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, header.data(), 4);
  bool swap = false;
  if (sizeof_hdr != 348) {
    const auto u = static_cast<std::uint32_t>(sizeof_hdr);
    swap = ((u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24)) == 348u;
    if (!swap) {
      throw NiftiBadMagic("'" + name + "': sizeof_hdr is not 348");
    }
  }
  const char *magic = reinterpret_cast<const char *>(header.data() + 344);
  const bool single = std::memcmp(magic, "n+1\0", 4) == 0;
  const bool pair = std::memcmp(magic, "ni1\0", 4) == 0;
  if (!single && !pair) {
    throw NiftiBadMagic("'" + name + "': bad magic (expected n+1 or ni1)");
  }
  if (pair && separate_payload == nullptr) {
    throw NiftiBadMagic("'" + name + "': magic ni1 needs a separate .img file");
  }
  const Bytes h(header.data(), swap);
  const std::int16_t ndim = h.get<std::int16_t>(40);
  if (ndim < 1 || ndim > 7) {
    throw DataError("'" + name + "': dim[0] out of range");
  }
  int dim[3] = {1, 1, 1};
  for (int a = 0; a < std::min<int>(ndim, 3); ++a) {
    dim[a] = h.get<std::int16_t>(42 + 2 * a);
  }
  for (int a = 3; a < ndim; ++a) {
    if (h.get<std::int16_t>(42 + 2 * a) > 1) {
      throw DataError("'" + name + "': only 3-D volumes are supported");
    }
  }
  NiftiImage img;
  img.dims = {dim[0], dim[1], dim[2]};
  if (!img.dims.valid()) {
    throw DataError("'" + name + "': non-positive dimension");
  }
  auto pixdim = [&](int a) {
    const double v = std::abs(static_cast<double>(h.get<float>(76 + 4 * a)));
    return v > 0 && std::isfinite(v) ? v : 1.0;
  };
  img.spacing = {pixdim(1), pixdim(2), pixdim(3)};
  const std::int16_t dt = h.get<std::int16_t>(70);
  switch (dt) {
  case 2:
  case 4:
  case 16:
  case 64:
    img.datatype = static_cast<NiftiDatatype>(dt);
    break;
  default:
    throw NiftiUnsupportedDatatype("'" + name + "': unsupported datatype code " +
                                   std::to_string(dt));
  }
  const double slope = h.get<float>(112);
  img.meta.scl_slope = slope == 0.0 || !std::isfinite(slope) ? 1.0 : slope;
  const double inter = h.get<float>(116);
  img.meta.scl_inter = std::isfinite(inter) ? inter : 0.0;
  img.meta.qform_code = h.get<std::int16_t>(252);
  img.meta.sform_code = h.get<std::int16_t>(254);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      img.meta.srow[r][c] = h.get<float>(280 + 16 * r + 4 * c);
    }
  }
  img.meta.descrip.assign(reinterpret_cast<const char *>(header.data() + 148),
                          strnlen(reinterpret_cast<const char *>(header.data() + 148), 80));

  const std::vector<unsigned char> &payload = separate_payload ? *separate_payload : header;
  const double vox_offset = h.get<float>(108);
  const std::size_t offset =
      separate_payload ? static_cast<std::size_t>(std::max(0.0, vox_offset))
                       : static_cast<std::size_t>(std::max(352.0, vox_offset));
  const std::size_t n = img.dims.count();
  const std::size_t bpv = static_cast<std::size_t>(bytes_per_voxel(img.datatype));
  if (payload.size() < offset || (payload.size() - offset) / bpv < n) {
    throw NiftiTruncated("'" + name + "': payload holds fewer than " + std::to_string(n) +
                         " voxels");
  }
  // const_cast is safe: the view only reads.
  const Bytes data(const_cast<unsigned char *>(payload.data()) + offset, swap);
  img.raw.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (img.datatype) {
    case NiftiDatatype::UInt8:
      img.raw[i] = data.get<std::uint8_t>(i);
      break;
    case NiftiDatatype::Int16:
      img.raw[i] = data.get<std::int16_t>(2 * i);
      break;
    case NiftiDatatype::Float32:
      img.raw[i] = data.get<float>(4 * i);
      break;
    case NiftiDatatype::Float64:
      img.raw[i] = data.get<double>(8 * i);
      break;
    }
  }
  img.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    img.values[i] = img.raw[i] * img.meta.scl_slope + img.meta.scl_inter;
  }
  return img;
}

template <typename T>
T checked_cast(double v, const char *type) {
  if (!std::isfinite(v) || v != std::round(v) ||
      v < static_cast<double>(std::numeric_limits<T>::lowest()) ||
      v > static_cast<double>(std::numeric_limits<T>::max())) {
    throw NiftiOverflow("value " + std::to_string(v) + " does not fit " + type);
  }
  return static_cast<T>(v);
}

inline std::vector<unsigned char> encode_header(Dims d, Spacing s, NiftiDatatype dt,
                                                const NiftiMeta &meta, bool single) {
  std::vector<unsigned char> out(single ? 352 : kNiftiHeaderSize, 0);
  Bytes h(out.data(), false);
  h.put<std::int32_t>(0, 348);
  h.put<char>(38, 'r');
  h.put<std::int16_t>(40, 3);
  h.put<std::int16_t>(42, static_cast<std::int16_t>(d.nx));
  h.put<std::int16_t>(44, static_cast<std::int16_t>(d.ny));
  h.put<std::int16_t>(46, static_cast<std::int16_t>(d.nz));
  for (int a = 4; a < 8; ++a) {
    h.put<std::int16_t>(40 + 2 * a, 1);
  }
  h.put<std::int16_t>(70, static_cast<std::int16_t>(dt));
  h.put<std::int16_t>(72, static_cast<std::int16_t>(8 * bytes_per_voxel(dt)));
  h.put<float>(76, 1.0f);
  h.put<float>(80, static_cast<float>(s.sx));
  h.put<float>(84, static_cast<float>(s.sy));
  h.put<float>(88, static_cast<float>(s.sz));
  h.put<float>(108, single ? 352.0f : 0.0f);
  h.put<float>(112, static_cast<float>(meta.scl_slope));
  h.put<float>(116, static_cast<float>(meta.scl_inter));
  h.put<char>(123, 2); // mm
  std::memcpy(out.data() + 148, meta.descrip.data(), std::min<std::size_t>(meta.descrip.size(), 79));
  h.put<std::int16_t>(252, meta.qform_code);
  h.put<std::int16_t>(254, meta.sform_code);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      h.put<float>(280 + 16 * r + 4 * c, meta.srow[r][c]);
    }
  }
  std::memcpy(out.data() + 344, single ? "n+1\0" : "ni1\0", 4);
  return out;
}

inline void encode_values(std::vector<unsigned char> &out, const std::vector<double> &values,
                          NiftiDatatype dt, const NiftiMeta &meta) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * static_cast<std::size_t>(bytes_per_voxel(dt)));
  Bytes b(out.data() + start, false);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double raw = (values[i] - meta.scl_inter) / meta.scl_slope;
    switch (dt) {
    case NiftiDatatype::UInt8:
      b.put<std::uint8_t>(i, checked_cast<std::uint8_t>(raw, "uint8"));
      break;
    case NiftiDatatype::Int16:
      b.put<std::int16_t>(2 * i, checked_cast<std::int16_t>(raw, "int16"));
      break;
    case NiftiDatatype::Float32:
      if (std::isfinite(raw) && std::abs(raw) > std::numeric_limits<float>::max()) {
        throw NiftiOverflow("value " + std::to_string(raw) + " does not fit float32");
      }
      b.put<float>(4 * i, static_cast<float>(raw));
      break;
    case NiftiDatatype::Float64:
      b.put<double>(8 * i, raw);
      break;
    }
  }
}

} // namespace detail

inline NiftiImage read_nifti(const std::filesystem::path &path) {
  const std::string name = path.string();
  const bool gz = detail::ends_with(name, ".gz");
  const std::string base = gz ? name.substr(0, name.size() - 3) : name;
  if (detail::ends_with(base, ".hdr")) {
    const std::string stem = base.substr(0, base.size() - 4);
    std::filesystem::path img = stem + ".img" + (gz ? ".gz" : "");
    if (!std::filesystem::exists(img)) {
      img = stem + ".img" + (gz ? "" : ".gz");
    }
    const std::vector<unsigned char> payload = detail::load_maybe_gz(img);
    return detail::decode_nifti(detail::load_maybe_gz(path), &payload, name);
  }
  return detail::decode_nifti(detail::load_maybe_gz(path), nullptr, name);
}

/// Writes `values` (x fastest). A path ending in ".gz" is gzip-compressed; a
/// ".hdr" path writes a header/image pair.
inline void write_nifti(const std::filesystem::path &path, Dims d, Spacing s,
                        const std::vector<double> &values, NiftiDatatype dt,
                        const NiftiMeta &meta = {}) {
  if (!d.valid() || values.size() != d.count()) {
    throw DimensionError("write_nifti: value count does not match dims");
  }
  if (d.nx > 32767 || d.ny > 32767 || d.nz > 32767) {
    throw DimensionError("write_nifti: dimension exceeds NIfTI-1 limit");
  }
  if (!(meta.scl_slope != 0.0) || !std::isfinite(meta.scl_slope)) {
    throw DataError("write_nifti: scl_slope must be finite and non-zero");
  }
  const std::string name = path.string();
  const bool gz = detail::ends_with(name, ".gz");
  const std::string base = gz ? name.substr(0, name.size() - 3) : name;
  if (detail::ends_with(base, ".hdr")) {
    std::vector<unsigned char> header = detail::encode_header(d, s, dt, meta, false);
    std::vector<unsigned char> payload;
    detail::encode_values(payload, values, dt, meta);
    const std::string img = base.substr(0, base.size() - 4) + ".img" + (gz ? ".gz" : "");
    detail::write_file(path, gz ? detail::gzip(header) : header);
    detail::write_file(img, gz ? detail::gzip(payload) : payload);
    return;
  }
  std::vector<unsigned char> bytes = detail::encode_header(d, s, dt, meta, true);
  detail::encode_values(bytes, values, dt, meta);
  detail::write_file(path, gz ? detail::gzip(bytes) : bytes);
}

inline void write_nifti(const ScalarVolume &vol, const std::filesystem::path &path,
                        NiftiDatatype dt = NiftiDatatype::Float32, const NiftiMeta &meta = {}) {
  const std::vector<double> values(vol.data().begin(), vol.data().end());
  write_nifti(path, vol.dims(), vol.spacing(), values, dt, meta);
}

template <typename T, typename Tag>
  requires std::is_integral_v<T>
void write_nifti(const Volume<T, Tag> &vol, const std::filesystem::path &path,
                 NiftiDatatype dt = NiftiDatatype::UInt8, const NiftiMeta &meta = {}) {
  std::vector<double> values(vol.data().begin(), vol.data().end());
  write_nifti(path, vol.dims(), vol.spacing(), values, dt, meta);
}

inline ScalarVolume read_scalar(const std::filesystem::path &path) {
  NiftiImage img = read_nifti(path);
  return ScalarVolume(img.dims, img.spacing, std::move(img.values));
}

/// Scaled values must be integers in 0..255.
inline LabelVolume read_labels(const std::filesystem::path &path) {
  const NiftiImage img = read_nifti(path);
  std::vector<Label> labels(img.values.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double v = img.values[i];
    if (!(v >= 0 && v <= 255) || v != std::round(v)) {
      throw DataError("'" + path.string() + "': value " + std::to_string(v) +
                      " is not a label in 0..255");
    }
    labels[i] = static_cast<Label>(v);
  }
  return LabelVolume(img.dims, img.spacing, std::move(labels));
}

inline BinaryMask read_mask(const std::filesystem::path &path) {
  const LabelVolume l = read_labels(path);
  BinaryMask m(l.dims(), l.spacing(), 0);
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l[i] > 1) {
      throw DataError("'" + path.string() + "': mask values must be 0 or 1");
    }
    m[i] = l[i];
  }
  return m;
}

} // namespace topoaug

#endif
