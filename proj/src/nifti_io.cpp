#include "nfpipe/nifti_io.hpp"

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <vector>

#include <json.hpp>

#include "nfpipe/logging.hpp"

namespace nfpipe {

namespace {

// NIfTI-1 header, offsets per the published layout; packs to 348 bytes
// without padding on all supported ABIs.
struct NiftiHeader {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(NiftiHeader) == 348, "NiftiHeader must pack to 348 bytes");

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int32_t kLabelDictEcode = 6;  // "comment" ecode, JSON payload

template <typename T>
void swap_bytes(T& value) {
  auto* p = reinterpret_cast<unsigned char*>(&value);
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
}

void swap_header(NiftiHeader& h) {
  swap_bytes(h.sizeof_hdr);
  swap_bytes(h.extents);
  swap_bytes(h.session_error);
  for (auto& v : h.dim) swap_bytes(v);
  swap_bytes(h.intent_p1);
  swap_bytes(h.intent_p2);
  swap_bytes(h.intent_p3);
  swap_bytes(h.intent_code);
  swap_bytes(h.datatype);
  swap_bytes(h.bitpix);
  swap_bytes(h.slice_start);
  for (auto& v : h.pixdim) swap_bytes(v);
  swap_bytes(h.vox_offset);
  swap_bytes(h.scl_slope);
  swap_bytes(h.scl_inter);
  swap_bytes(h.slice_end);
  swap_bytes(h.cal_max);
  swap_bytes(h.cal_min);
  swap_bytes(h.slice_duration);
  swap_bytes(h.toffset);
  swap_bytes(h.glmax);
  swap_bytes(h.glmin);
  swap_bytes(h.qform_code);
  swap_bytes(h.sform_code);
  swap_bytes(h.quatern_b);
  swap_bytes(h.quatern_c);
  swap_bytes(h.quatern_d);
  swap_bytes(h.qoffset_x);
  swap_bytes(h.qoffset_y);
  swap_bytes(h.qoffset_z);
  for (auto& v : h.srow_x) swap_bytes(v);
  for (auto& v : h.srow_y) swap_bytes(v);
  for (auto& v : h.srow_z) swap_bytes(v);
}

class GzReader {
 public:
  explicit GzReader(const std::filesystem::path& path) {
    file_ = gzopen(path.string().c_str(), "rb");
    if (file_ == nullptr) throw DataError("cannot open file: " + path.string());
  }
  ~GzReader() {
    if (file_ != nullptr) gzclose(file_);
  }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  void read_exact(void* dst, std::size_t n, const char* what) {
    std::size_t done = 0;
    auto* out = static_cast<unsigned char*>(dst);
    while (done < n) {
      const unsigned chunk = static_cast<unsigned>(
          std::min<std::size_t>(n - done, 1u << 30));
      const int got = gzread(file_, out + done, chunk);
      if (got <= 0) throw DataError(std::string("malformed NIfTI file (truncated ") + what + ")");
      done += static_cast<std::size_t>(got);
    }
  }

  void skip(std::size_t n) {
    std::vector<unsigned char> scratch(std::min<std::size_t>(n, 4096));
    while (n > 0) {
      const std::size_t chunk = std::min(n, scratch.size());
      read_exact(scratch.data(), chunk, "extension padding");
      n -= chunk;
    }
  }

 private:
  gzFile file_ = nullptr;
};

struct ParsedFile {
  VolumeGeometry geometry;           // canonical
  std::vector<float> values;         // canonical order, after scl scaling
  bool had_scaling = false;
  std::map<std::int32_t, std::string> label_dictionary;  // empty if none found
  std::int16_t datatype = 0;
};

double affine_entry(const NiftiHeader& h, int row, int col) {
  const float* rows[3] = {h.srow_x, h.srow_y, h.srow_z};
  return static_cast<double>(rows[row][col]);
}

// Canonical axis -> (RAS affine row, desired sign): axis 0 follows +A,
// axis 1 follows +S, axis 2 follows +L = -R.
constexpr int kRasRow[3] = {1, 2, 0};
constexpr double kRasSign[3] = {1.0, 1.0, -1.0};

ParsedFile read_any(const std::filesystem::path& path) {
  GzReader in(path);
  NiftiHeader hdr{};
  in.read_exact(&hdr, sizeof(hdr), "header");

  bool swapped = false;
  if (hdr.sizeof_hdr != 348) {
    swap_header(hdr);
    swapped = true;
    if (hdr.sizeof_hdr != 348) throw DataError("malformed NIfTI header (bad sizeof_hdr)");
  }
  if (std::strncmp(hdr.magic, "n+1", 3) != 0 || hdr.magic[3] != '\0')
    throw DataError("malformed NIfTI header (unsupported magic; need single-file n+1)");
  if (hdr.dim[0] < 3 || hdr.dim[0] > 7)
    throw DataError("malformed NIfTI header (dim[0] out of range)");
  for (int d = 4; d <= hdr.dim[0]; ++d)
    if (hdr.dim[d] > 1) throw DataError("only 3-D volumes are supported");
  std::array<int, 3> src_dims{hdr.dim[1], hdr.dim[2], hdr.dim[3]};
  for (int a = 0; a < 3; ++a)
    if (src_dims[a] < 1) throw DataError("malformed NIfTI header (non-positive dim)");

  std::size_t elem_size = 0;
  switch (hdr.datatype) {
    case kDtUint8: elem_size = 1; break;
    case kDtInt16: elem_size = 2; break;
    case kDtFloat32: elem_size = 4; break;
    default:
      throw DataError("unsupported NIfTI datatype code " + std::to_string(hdr.datatype));
  }

  // Extensions live between the header and vox_offset.
  const long vox_offset = std::lround(hdr.vox_offset);
  if (vox_offset < 348) throw DataError("malformed NIfTI header (vox_offset too small)");
  std::map<std::int32_t, std::string> label_dict;
  long pos = 348;
  if (vox_offset >= 352) {
    unsigned char extender[4] = {0, 0, 0, 0};
    in.read_exact(extender, 4, "extender");
    pos += 4;
    if (extender[0] == 1) {
      while (pos + 8 <= vox_offset) {
        std::int32_t esize = 0, ecode = 0;
        in.read_exact(&esize, 4, "extension size");
        in.read_exact(&ecode, 4, "extension code");
        if (swapped) {
          swap_bytes(esize);
          swap_bytes(ecode);
        }
        if (esize < 8 || pos + esize > vox_offset)
          throw DataError("malformed NIfTI extension");
        std::string payload(static_cast<std::size_t>(esize - 8), '\0');
        if (!payload.empty()) in.read_exact(payload.data(), payload.size(), "extension payload");
        pos += esize;
        if (ecode == kLabelDictEcode) {
          const auto end = payload.find('\0');
          if (end != std::string::npos) payload.resize(end);
          auto parsed = nlohmann::json::parse(payload, nullptr, false);
          if (parsed.is_object() && parsed.contains("nfpipe_label_dictionary")) {
            try {
              for (auto& [key, value] : parsed["nfpipe_label_dictionary"].items())
                label_dict[std::stoi(key)] = value.get<std::string>();
            } catch (const std::exception&) {
              // a foreign comment extension that merely resembles ours
              label_dict.clear();
            }
          }
        }
      }
    }
    if (pos < vox_offset) in.skip(static_cast<std::size_t>(vox_offset - pos));
  }

  const std::size_t nvox = static_cast<std::size_t>(src_dims[0]) * src_dims[1] * src_dims[2];
  std::vector<unsigned char> raw(nvox * elem_size);
  in.read_exact(raw.data(), raw.size(), "voxel data");

  float slope = hdr.scl_slope;
  float inter = hdr.scl_inter;
  if (slope == 0.0f || !std::isfinite(slope)) slope = 1.0f;
  if (!std::isfinite(inter)) inter = 0.0f;
  const bool scaling = slope != 1.0f || inter != 0.0f;

  std::vector<float> src_values(nvox);
  switch (hdr.datatype) {
    case kDtUint8:
      for (std::size_t i = 0; i < nvox; ++i) src_values[i] = static_cast<float>(raw[i]);
      break;
    case kDtInt16: {
      const auto* p = reinterpret_cast<const std::int16_t*>(raw.data());
      for (std::size_t i = 0; i < nvox; ++i) {
        std::int16_t v = p[i];
        if (swapped) swap_bytes(v);
        src_values[i] = static_cast<float>(v);
      }
      break;
    }
    case kDtFloat32: {
      const auto* p = reinterpret_cast<const float*>(raw.data());
      for (std::size_t i = 0; i < nvox; ++i) {
        float v = p[i];
        if (swapped) swap_bytes(v);
        src_values[i] = v;
      }
      break;
    }
  }
  if (scaling)
    for (auto& v : src_values) v = v * slope + inter;

  std::array<double, 3> src_spacing;
  for (int a = 0; a < 3; ++a) {
    src_spacing[a] = static_cast<double>(hdr.pixdim[a + 1]);
    if (!(src_spacing[a] > 0.0))
      throw DataError("malformed NIfTI header (non-positive pixdim)");
  }

  ParsedFile out;
  out.datatype = hdr.datatype;
  out.had_scaling = scaling;
  out.label_dictionary = std::move(label_dict);

  if (hdr.sform_code <= 0) {
    // No sform: grid is assumed to already be canonical.
    log::debug("NIfTI file lacks an sform; assuming canonical orientation: " + path.string());
    out.geometry.dims = src_dims;
    out.geometry.spacing = src_spacing;
    out.geometry.origin = {0.0, 0.0, 0.0};
    out.values = std::move(src_values);
    out.geometry.validate();
    return out;
  }

  // Map each canonical axis to the grid axis dominating its RAS direction.
  int perm[3];        // canonical axis -> source grid axis
  bool flip[3];
  bool used[3] = {false, false, false};
  for (int c = 0; c < 3; ++c) {
    const int row = kRasRow[c];
    int best = -1;
    double best_mag = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double mag = std::fabs(affine_entry(hdr, row, a));
      if (mag > best_mag) {
        best_mag = mag;
        best = a;
      }
    }
    if (best < 0 || best_mag == 0.0 || used[best])
      throw DataError("NIfTI affine does not map grid axes onto distinct anatomical axes");
    used[best] = true;
    perm[c] = best;
    flip[c] = affine_entry(hdr, kRasRow[c], best) * kRasSign[c] < 0.0;
  }

  out.geometry.dims = {src_dims[perm[0]], src_dims[perm[1]], src_dims[perm[2]]};
  out.geometry.spacing = {src_spacing[perm[0]], src_spacing[perm[1]], src_spacing[perm[2]]};

  // Physical position of canonical voxel (0,0,0) through the file affine.
  double src_index0[3];
  for (int c = 0; c < 3; ++c)
    src_index0[perm[c]] = flip[c] ? static_cast<double>(src_dims[perm[c]] - 1) : 0.0;
  double ras[3];
  for (int row = 0; row < 3; ++row) {
    ras[row] = affine_entry(hdr, row, 3);
    for (int a = 0; a < 3; ++a) ras[row] += affine_entry(hdr, row, a) * src_index0[a];
  }
  out.geometry.origin = {ras[1], ras[2], -ras[0]};  // (A, S, L)

  // Reorder voxels. NIfTI stores the first grid axis fastest.
  const std::size_t src_stride[3] = {
      1, static_cast<std::size_t>(src_dims[0]),
      static_cast<std::size_t>(src_dims[0]) * static_cast<std::size_t>(src_dims[1])};
  out.values.resize(nvox);
  const auto& d = out.geometry.dims;
  std::size_t dst = 0;
  for (int c0 = 0; c0 < d[0]; ++c0) {
    const int s0 = flip[0] ? d[0] - 1 - c0 : c0;
    for (int c1 = 0; c1 < d[1]; ++c1) {
      const int s1 = flip[1] ? d[1] - 1 - c1 : c1;
      const std::size_t base01 = static_cast<std::size_t>(s0) * src_stride[perm[0]] +
                                 static_cast<std::size_t>(s1) * src_stride[perm[1]];
      const std::size_t step2 = src_stride[perm[2]];
      if (flip[2]) {
        std::size_t off = base01 + static_cast<std::size_t>(d[2] - 1) * step2;
        for (int c2 = 0; c2 < d[2]; ++c2, off -= step2) out.values[dst++] = src_values[off];
      } else {
        std::size_t off = base01;
        for (int c2 = 0; c2 < d[2]; ++c2, off += step2) out.values[dst++] = src_values[off];
      }
    }
  }
  out.geometry.validate();
  return out;
}

NiftiHeader make_header(const VolumeGeometry& g, std::int16_t datatype,
                        std::int16_t bitpix, float vox_offset) {
  NiftiHeader h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  // File axes are written in reverse canonical order (lateral fastest) so the
  // raw buffer can be dumped without transposition.
  h.dim[0] = 3;
  h.dim[1] = static_cast<std::int16_t>(g.dims[2]);
  h.dim[2] = static_cast<std::int16_t>(g.dims[1]);
  h.dim[3] = static_cast<std::int16_t>(g.dims[0]);
  for (int d = 4; d <= 7; ++d) h.dim[d] = 1;
  h.datatype = datatype;
  h.bitpix = bitpix;
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = static_cast<float>(g.spacing[2]);
  h.pixdim[2] = static_cast<float>(g.spacing[1]);
  h.pixdim[3] = static_cast<float>(g.spacing[0]);
  h.vox_offset = vox_offset;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.qform_code = 0;
  h.sform_code = 1;
  // RAS rows: R = -lateral axis, A = +axis 0, S = +axis 1.
  h.srow_x[0] = static_cast<float>(-g.spacing[2]);
  h.srow_x[3] = static_cast<float>(-g.origin[2]);
  h.srow_y[2] = static_cast<float>(g.spacing[0]);
  h.srow_y[3] = static_cast<float>(g.origin[0]);
  h.srow_z[1] = static_cast<float>(g.spacing[1]);
  h.srow_z[3] = static_cast<float>(g.origin[1]);
  std::strncpy(h.magic, "n+1", 4);
  return h;
}

class FileWriter {
 public:
  FileWriter(const std::filesystem::path& path, bool gz) : gz_(gz) {
    if (gz_) {
      gzfile_ = gzopen(path.string().c_str(), "wb");
      if (gzfile_ == nullptr) throw DataError("cannot open for writing: " + path.string());
    } else {
      stream_.open(path, std::ios::binary | std::ios::trunc);
      if (!stream_) throw DataError("cannot open for writing: " + path.string());
    }
    path_ = path.string();
  }
  ~FileWriter() {
    if (gzfile_ != nullptr) gzclose(gzfile_);
  }
  FileWriter(const FileWriter&) = delete;
  FileWriter& operator=(const FileWriter&) = delete;

  void write(const void* data, std::size_t n) {
    if (gz_) {
      const auto* p = static_cast<const unsigned char*>(data);
      std::size_t done = 0;
      while (done < n) {
        const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n - done, 1u << 30));
        if (gzwrite(gzfile_, p + done, chunk) != static_cast<int>(chunk))
          throw DataError("write failed: " + path_);
        done += chunk;
      }
    } else {
      stream_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
      if (!stream_) throw DataError("write failed: " + path_);
    }
  }

 private:
  bool gz_;
  gzFile gzfile_ = nullptr;
  std::ofstream stream_;
  std::string path_;
};

bool wants_gzip(const std::filesystem::path& path) {
  return path.extension() == ".gz";
}

void check_dims_fit(const VolumeGeometry& g) {
  for (int a = 0; a < 3; ++a)
    if (g.dims[a] > 32767) throw DataError("volume dims exceed the NIfTI-1 int16 limit");
}

void write_float_volume(const VolumeGeometry& g, const std::vector<float>& data,
                        const std::filesystem::path& path) {
  check_dims_fit(g);
  NiftiHeader hdr = make_header(g, kDtFloat32, 32, 352.0f);
  FileWriter out(path, wants_gzip(path));
  out.write(&hdr, sizeof(hdr));
  const unsigned char extender[4] = {0, 0, 0, 0};
  out.write(extender, 4);
  out.write(data.data(), data.size() * sizeof(float));
}

}  // namespace

ImageVolume read_image_volume(const std::filesystem::path& path) {
  ParsedFile parsed = read_any(path);
  ImageVolume volume;
  volume.geometry = parsed.geometry;
  volume.data = std::move(parsed.values);
  volume.validate();
  return volume;
}

ConfidenceVolume read_confidence_volume(const std::filesystem::path& path) {
  ParsedFile parsed = read_any(path);
  ConfidenceVolume volume;
  volume.geometry = parsed.geometry;
  volume.data = std::move(parsed.values);
  volume.validate();  // rejects values outside [0,1]
  return volume;
}

LabelVolume read_label_volume(const std::filesystem::path& path) {
  ParsedFile parsed = read_any(path);
  if (parsed.had_scaling)
    throw DataError("label volume must not carry intensity scaling (scl_slope/inter)");
  LabelVolume volume;
  volume.geometry = parsed.geometry;
  volume.data.resize(parsed.values.size());
  for (std::size_t i = 0; i < parsed.values.size(); ++i) {
    const float v = parsed.values[i];
    if (!(v >= 0.0f) || v != std::floor(v) || v > 2147483000.0f)
      throw DataError("non-integral labels in label volume");
    volume.data[i] = static_cast<std::int32_t>(v);
  }
  if (!parsed.label_dictionary.empty()) {
    volume.label_dictionary = std::move(parsed.label_dictionary);
  } else {
    volume.label_dictionary[0] = "background";
    std::set<std::int32_t> observed(volume.data.begin(), volume.data.end());
    for (std::int32_t v : observed)
      if (v != 0) volume.label_dictionary[v] = "label_" + std::to_string(v);
  }
  volume.validate();
  return volume;
}

void write_volume(const ImageVolume& volume, const std::filesystem::path& path) {
  volume.validate();
  write_float_volume(volume.geometry, volume.data, path);
}

void write_volume(const ConfidenceVolume& volume, const std::filesystem::path& path) {
  volume.validate();
  write_float_volume(volume.geometry, volume.data, path);
}

void write_volume(const LabelVolume& volume, const std::filesystem::path& path) {
  volume.validate();
  check_dims_fit(volume.geometry);

  std::int32_t max_label = 0;
  for (std::int32_t v : volume.data) max_label = std::max(max_label, v);
  for (const auto& [id, _] : volume.label_dictionary) max_label = std::max(max_label, id);

  std::int16_t datatype;
  std::int16_t bitpix;
  if (max_label <= 255) {
    datatype = kDtUint8;
    bitpix = 8;
  } else if (max_label <= 32767) {
    datatype = kDtInt16;
    bitpix = 16;
  } else {
    throw DataError("labels exceed the int16 range supported for NIfTI output");
  }

  nlohmann::json dict = nlohmann::json::object();
  for (const auto& [id, name] : volume.label_dictionary)
    dict[std::to_string(id)] = name;
  std::string payload = nlohmann::json{{"nfpipe_label_dictionary", dict}}.dump();
  payload.push_back('\0');
  std::size_t esize = 8 + payload.size();
  esize = (esize + 15) / 16 * 16;  // extensions are 16-byte multiples
  payload.resize(esize - 8, '\0');

  NiftiHeader hdr = make_header(volume.geometry, datatype, bitpix,
                                static_cast<float>(352 + esize));
  FileWriter out(path, wants_gzip(path));
  out.write(&hdr, sizeof(hdr));
  const unsigned char extender[4] = {1, 0, 0, 0};
  out.write(extender, 4);
  const std::int32_t esize32 = static_cast<std::int32_t>(esize);
  out.write(&esize32, 4);
  out.write(&kLabelDictEcode, 4);
  out.write(payload.data(), payload.size());

  if (datatype == kDtUint8) {
    std::vector<std::uint8_t> narrow(volume.data.size());
    for (std::size_t i = 0; i < narrow.size(); ++i)
      narrow[i] = static_cast<std::uint8_t>(volume.data[i]);
    out.write(narrow.data(), narrow.size());
  } else {
    std::vector<std::int16_t> narrow(volume.data.size());
    for (std::size_t i = 0; i < narrow.size(); ++i)
      narrow[i] = static_cast<std::int16_t>(volume.data[i]);
    out.write(narrow.data(), narrow.size() * sizeof(std::int16_t));
  }
}

}  // namespace nfpipe
