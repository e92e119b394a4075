#include "nfpipe/anatomy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace nfpipe {

namespace {

const std::vector<std::pair<RefinedLabel, std::string>>& label_names() {
  static const std::vector<std::pair<RefinedLabel, std::string>> names = {
      {RefinedLabel::background, "background"},
      {RefinedLabel::heart, "heart"},
      {RefinedLabel::lungs, "lungs"},
      {RefinedLabel::liver, "liver"},
      {RefinedLabel::stomach, "stomach"},
      {RefinedLabel::kidneys, "kidneys"},
      {RefinedLabel::urinary_bladder, "urinary_bladder"},
      {RefinedLabel::spine, "spine"},
      {RefinedLabel::sacrum, "sacrum"},
      {RefinedLabel::hips, "hips"},
      {RefinedLabel::femurs, "femurs"},
      {RefinedLabel::muscles, "muscles"},
      {RefinedLabel::high_risk_zone, "high_risk_zone"},
  };
  return names;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

const std::string& refined_label_name(RefinedLabel label) {
  for (const auto& [id, name] : label_names())
    if (id == label) return name;
  throw std::invalid_argument("invalid refined label id");
}

RefinedLabel refined_label_from_name(const std::string& name) {
  for (const auto& [id, n] : label_names())
    if (n == name) return id;
  throw std::invalid_argument("unknown refined label name: " + name);
}

std::map<std::int32_t, std::string> refined_label_dictionary() {
  std::map<std::int32_t, std::string> dict;
  for (const auto& [id, name] : label_names()) dict[static_cast<std::int32_t>(id)] = name;
  return dict;
}

const char* LabelMappingConfig::mrsegmentator_default_text() {
  return R"(# Default MRSegmentator organ-name mapping for the refined anatomy mask.
# One rule per line: source_name -> refined_label | DROP
spleen -> stomach
right_kidney -> kidneys
left_kidney -> kidneys
gallbladder -> DROP
liver -> liver
stomach -> stomach
pancreas -> DROP
right_adrenal_gland -> DROP
left_adrenal_gland -> DROP
left_lung -> lungs
right_lung -> lungs
heart -> heart
aorta -> DROP
inferior_vena_cava -> DROP
portal_vein_and_splenic_vein -> DROP
left_iliac_artery -> DROP
right_iliac_artery -> DROP
left_iliac_vein -> DROP
right_iliac_vein -> DROP
esophagus -> DROP
small_bowel -> DROP
duodenum -> DROP
colon -> DROP
urinary_bladder -> urinary_bladder
spine -> spine
sacrum -> sacrum
left_hip -> hips
right_hip -> hips
left_femur -> femurs
right_femur -> femurs
left_autochthonous_muscle -> muscles
right_autochthonous_muscle -> muscles
left_iliopsoas_muscle -> muscles
right_iliopsoas_muscle -> muscles
left_gluteus_maximus -> muscles
right_gluteus_maximus -> muscles
left_gluteus_medius -> muscles
right_gluteus_medius -> muscles
left_gluteus_minimus -> muscles
right_gluteus_minimus -> muscles
)";
}

LabelMappingConfig LabelMappingConfig::parse(std::istream& in) {
  LabelMappingConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto arrow = line.find("->");
    if (arrow == std::string::npos)
      throw std::invalid_argument("mapping line " + std::to_string(line_no) +
                                  ": expected `source -> target`");
    MappingRule rule;
    rule.source = trim(line.substr(0, arrow));
    const std::string target = trim(line.substr(arrow + 2));
    if (rule.source.empty() || target.empty())
      throw std::invalid_argument("mapping line " + std::to_string(line_no) +
                                  ": empty source or target");
    if (target == "DROP") {
      rule.drop = true;
    } else {
      rule.target = refined_label_from_name(target);  // throws on unknown target
      if (rule.target == RefinedLabel::high_risk_zone)
        throw std::invalid_argument("mapping line " + std::to_string(line_no) +
                                    ": high_risk_zone is not a legal mapping target");
    }
    config.rules.push_back(std::move(rule));
  }
  return config;
}

LabelMappingConfig LabelMappingConfig::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

LabelMappingConfig LabelMappingConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open mapping config: " + path);
  return parse(in);
}

const LabelMappingConfig& LabelMappingConfig::mrsegmentator_default() {
  static const LabelMappingConfig config = parse_string(mrsegmentator_default_text());
  return config;
}

RefineResult refine_anatomy_mask(const LabelVolume& raw, const LabelMappingConfig& mapping) {
  raw.validate();
  std::unordered_map<std::string, const MappingRule*> by_source;
  for (const auto& rule : mapping.rules) by_source[rule.source] = &rule;

  std::int32_t max_id = 0;
  for (const auto& [id, _] : raw.label_dictionary) max_id = std::max(max_id, id);
  std::vector<std::int32_t> lookup(static_cast<std::size_t>(max_id) + 1, 0);
  std::set<std::string> unknown;
  for (const auto& [id, name] : raw.label_dictionary) {
    if (id == 0) continue;
    const auto it = by_source.find(name);
    if (it == by_source.end()) {
      unknown.insert(name);
      continue;  // unmapped sources fall to background, reported below
    }
    lookup[static_cast<std::size_t>(id)] =
        it->second->drop ? 0 : static_cast<std::int32_t>(it->second->target);
  }

  RefineResult result;
  result.refined.geometry = raw.geometry;
  result.refined.data.resize(raw.data.size());
  for (std::size_t i = 0; i < raw.data.size(); ++i)
    result.refined.data[i] = lookup[static_cast<std::size_t>(raw.data[i])];
  result.refined.label_dictionary = refined_label_dictionary();
  result.refined.label_dictionary.erase(static_cast<std::int32_t>(RefinedLabel::high_risk_zone));
  result.unknown_sources.assign(unknown.begin(), unknown.end());
  return result;
}

namespace {

// 1-D squared-distance transform (lower envelope of parabolas), weight w =
// spacing^2 along the axis. Infinite entries (no seed yet) are skipped when
// building the envelope.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, double w,
            std::vector<int>& v, std::vector<double>& z) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(f.size());
  d.resize(f.size());
  int first = 0;
  while (first < n && f[first] == kInf) ++first;
  if (first == n) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  v.resize(f.size());
  z.resize(f.size() + 1);
  const auto intersect = [&](int q, int p) {
    return ((f[q] + w * q * q) - (f[p] + w * p * p)) / (2.0 * w * (q - p));
  };
  int k = 0;
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = first + 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    d[q] = w * (q - v[k]) * (q - v[k]) + f[v[k]];
  }
}

}  // namespace

LabelVolume build_high_risk_zone(const LabelVolume& refined, double radius_mm) {
  if (!(radius_mm > 0.0)) throw std::invalid_argument("dilation radius_mm must be > 0");
  refined.validate();
  const auto& g = refined.geometry;
  const std::size_t n = g.voxel_count();

  constexpr std::int32_t kLungs = static_cast<std::int32_t>(RefinedLabel::lungs);
  constexpr std::int32_t kSpine = static_cast<std::int32_t>(RefinedLabel::spine);
  constexpr std::int32_t kZone = static_cast<std::int32_t>(RefinedLabel::high_risk_zone);

  std::vector<double> dist2(n);
  bool any_seed = false;
  for (std::size_t i = 0; i < n; ++i) {
    const bool seed = refined.data[i] == kLungs || refined.data[i] == kSpine;
    any_seed = any_seed || seed;
    dist2[i] = seed ? 0.0 : std::numeric_limits<double>::infinity();
  }
  if (!any_seed) throw std::runtime_error("no seed structures (lungs or spine) present");

  // Separable exact anisotropic squared EDT, one axis at a time.
  std::vector<double> line, out;
  std::vector<int> scratch_v;
  std::vector<double> scratch_z;
  const std::size_t strides[3] = {static_cast<std::size_t>(g.dims[1]) * g.dims[2],
                                  static_cast<std::size_t>(g.dims[2]), 1};
  for (int axis = 0; axis < 3; ++axis) {
    const int len = g.dims[axis];
    if (len == 1) continue;
    line.resize(len);
    const int o1 = axis == 0 ? 1 : 0;
    const int o2 = axis == 2 ? 1 : 2;
    const double w = g.spacing[axis] * g.spacing[axis];
    for (int a = 0; a < g.dims[o1]; ++a) {
      for (int b = 0; b < g.dims[o2]; ++b) {
        const std::size_t base = static_cast<std::size_t>(a) * strides[o1] +
                                 static_cast<std::size_t>(b) * strides[o2];
        for (int q = 0; q < len; ++q) line[q] = dist2[base + q * strides[axis]];
        edt_1d(line, out, w, scratch_v, scratch_z);
        for (int q = 0; q < len; ++q) dist2[base + q * strides[axis]] = out[q];
      }
    }
  }

  LabelVolume result = refined;
  result.label_dictionary[kZone] = refined_label_name(RefinedLabel::high_risk_zone);
  const double r2 = radius_mm * radius_mm;
  for (std::size_t i = 0; i < n; ++i)
    if (result.data[i] == 0 && dist2[i] <= r2) result.data[i] = kZone;
  return result;
}

void BodyRegionPartition::validate() const {
  if (!(z_lung_top >= z_lung_bottom && z_lung_bottom >= z_hip_bottom))
    throw std::invalid_argument("partition landmarks must satisfy lung_top >= lung_bottom >= hip_bottom");
}

const std::string& region_name(AnatomicalRegion region) {
  static const std::string names[4] = {"head_neck", "chest", "abdomen", "legs"};
  return names[static_cast<int>(region)];
}

AnatomicalRegion region_from_name(const std::string& name) {
  for (AnatomicalRegion r : kAllRegions)
    if (region_name(r) == name) return r;
  throw std::invalid_argument("unknown anatomical region: " + name);
}

BodyRegionPartition extract_landmarks(const LabelVolume& refined) {
  const auto& g = refined.geometry;
  constexpr std::int32_t kLungs = static_cast<std::int32_t>(RefinedLabel::lungs);
  constexpr std::int32_t kHips = static_cast<std::int32_t>(RefinedLabel::hips);
  int lung_top = -1, lung_bottom = -1, hip_bottom = -1;
  std::size_t idx = 0;
  for (int i = 0; i < g.dims[0]; ++i) {
    for (int j = 0; j < g.dims[1]; ++j) {
      for (int k = 0; k < g.dims[2]; ++k, ++idx) {
        const std::int32_t v = refined.data[idx];
        if (v == kLungs) {
          if (lung_top < 0 || j > lung_top) lung_top = j;
          if (lung_bottom < 0 || j < lung_bottom) lung_bottom = j;
        } else if (v == kHips) {
          if (hip_bottom < 0 || j < hip_bottom) hip_bottom = j;
        }
      }
    }
  }
  if (lung_top < 0) throw std::runtime_error("missing structure for landmarks: lungs");
  if (hip_bottom < 0) throw std::runtime_error("missing structure for landmarks: hips");
  BodyRegionPartition partition{lung_top, lung_bottom, hip_bottom};
  partition.validate();
  return partition;
}

AnatomicalRegion region_of(int z, const BodyRegionPartition& partition) {
  if (z > partition.z_lung_top) return AnatomicalRegion::head_neck;
  if (z > partition.z_lung_bottom) return AnatomicalRegion::chest;
  if (z > partition.z_hip_bottom) return AnatomicalRegion::abdomen;
  return AnatomicalRegion::legs;
}

}  // namespace nfpipe
