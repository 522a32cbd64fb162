#include "lrtd/dataset.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "lrtd/errors.hpp"

namespace lrtd {

namespace {

constexpr char kFeatureMagic[8] = {'L', 'R', 'T', 'D', 'F', 'E', 'A', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;

void put_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

std::uint16_t get_u16(std::istream& is, const std::string& path) {
  unsigned char b[2];
  if (!is.read(reinterpret_cast<char*>(b), 2)) throw ParseError(path + ": truncated file");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ParseError(path + ": truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& is, const std::string& path) {
  std::uint32_t bits = get_u32(is, path);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

int parse_int_field(const std::string& field, const std::string& path, std::size_t line,
                    const char* what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(field, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != field.size() || field.empty()) {
    throw ParseError(path + " line " + std::to_string(line) + ": bad " + what + " '" + field + "'");
  }
  return v;
}

struct AnnotationRow {
  int frame_index;
  int phase;
  bool outlier;
};

}  // namespace

const Video* Dataset::find_video(const std::string& id) const {
  for (const Video& v : videos) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

std::size_t Dataset::total_frames() const {
  std::size_t n = 0;
  for (const Video& v : videos) n += v.frames.size();
  return n;
}

std::vector<Clip> make_clips(const Video& video, int T) {
  if (T < 1) throw ValidationError("make_clips: clip length must be positive");
  std::vector<Clip> clips;
  const int F = video.num_frames();
  if (F < T) return clips;
  const int D = static_cast<int>(video.frames.front().feature.size());
  clips.reserve(F - T + 1);
  for (int end = T - 1; end < F; ++end) {
    Clip c;
    c.id = ClipId{video.id, video.frames[end].frame_index};
    c.label = video.frames[end].phase;
    c.features = Tensor(D, T);
    c.frame_phases.resize(T);
    for (int t = 0; t < T; ++t) {
      const FrameRecord& fr = video.frames[end - T + 1 + t];
      for (int d = 0; d < D; ++d) c.features.at(d, t) = fr.feature[d];
      c.frame_phases[t] = fr.phase;
      if (fr.outlier) c.has_outlier = true;
    }
    clips.push_back(std::move(c));
  }
  return clips;
}

std::vector<Clip> make_clips(const Dataset& ds, const std::vector<std::string>& video_ids, int T) {
  std::vector<Clip> all;
  for (const std::string& id : video_ids) {
    const Video* v = ds.find_video(id);
    if (!v) throw ValidationError("make_clips: unknown video '" + id + "'");
    auto clips = make_clips(*v, T);
    all.insert(all.end(), std::make_move_iterator(clips.begin()),
               std::make_move_iterator(clips.end()));
  }
  return all;
}

void write_features(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.write(kFeatureMagic, 8);
  put_u32(os, kFeatureVersion);
  put_u32(os, static_cast<std::uint32_t>(ds.videos.size()));
  for (const Video& v : ds.videos) {
    if (v.id.size() > 0xffff) throw ValidationError("video id too long: '" + v.id + "'");
    put_u16(os, static_cast<std::uint16_t>(v.id.size()));
    os.write(v.id.data(), static_cast<std::streamsize>(v.id.size()));
    put_u32(os, static_cast<std::uint32_t>(v.frames.size()));
    put_u32(os, static_cast<std::uint32_t>(ds.dim));
    for (const FrameRecord& fr : v.frames) {
      for (double x : fr.feature) put_f32(os, static_cast<float>(x));
    }
  }
  if (!os) throw IoError("write failed on '" + path + "'");
}

void write_annotations(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "video_id\tframe_index\tphase\toutlier_flag\n";
  for (const Video& v : ds.videos) {
    for (const FrameRecord& fr : v.frames) {
      os << v.id << '\t' << fr.frame_index << '\t' << fr.phase << '\t' << (fr.outlier ? 1 : 0)
         << '\n';
    }
  }
  if (!os) throw IoError("write failed on '" + path + "'");
}

Dataset load_dataset(const std::string& feature_path, const std::string& annotation_path,
                     int num_phases) {
  if (num_phases < 1) throw ValidationError("load_dataset: phase count must be positive");

  // Annotations first: video -> ordered rows.
  std::map<std::string, std::vector<AnnotationRow>> ann;
  std::vector<std::string> ann_order;
  {
    std::ifstream is(annotation_path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + annotation_path + "'");
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(is, line)) throw ParseError(annotation_path + ": empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "video_id\tframe_index\tphase\toutlier_flag") {
      throw ParseError(annotation_path + " line 1: bad header '" + line + "'");
    }
    while (std::getline(is, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::size_t start = 0;
      for (;;) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
          fields.push_back(line.substr(start));
          break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
      }
      if (fields.size() != 4) {
        throw ParseError(annotation_path + " line " + std::to_string(lineno) +
                         ": expected 4 fields, got " + std::to_string(fields.size()));
      }
      AnnotationRow row;
      row.frame_index = parse_int_field(fields[1], annotation_path, lineno, "frame_index");
      row.phase = parse_int_field(fields[2], annotation_path, lineno, "phase");
      const int flag = parse_int_field(fields[3], annotation_path, lineno, "outlier_flag");
      if (row.phase < 0 || row.phase >= num_phases) {
        throw ParseError(annotation_path + " line " + std::to_string(lineno) + ": phase " +
                         std::to_string(row.phase) + " outside [0, " +
                         std::to_string(num_phases - 1) + "]");
      }
      if (flag != 0 && flag != 1) {
        throw ParseError(annotation_path + " line " + std::to_string(lineno) +
                         ": outlier_flag must be 0 or 1");
      }
      row.outlier = flag == 1;
      auto [it, inserted] = ann.try_emplace(fields[0]);
      if (inserted) ann_order.push_back(fields[0]);
      const int expected = static_cast<int>(it->second.size());
      if (row.frame_index != expected) {
        throw ParseError(annotation_path + " line " + std::to_string(lineno) + ": frame_index " +
                         std::to_string(row.frame_index) + " for video '" + fields[0] +
                         "', expected " + std::to_string(expected) +
                         " (indices must be contiguous from 0)");
      }
      it->second.push_back(row);
    }
  }

  Dataset ds;
  ds.num_phases = num_phases;
  {
    std::ifstream is(feature_path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + feature_path + "'");
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kFeatureMagic, 8) != 0) {
      throw ParseError(feature_path + ": bad magic (not a feature file)");
    }
    const std::uint32_t version = get_u32(is, feature_path);
    if (version != kFeatureVersion) {
      throw ParseError(feature_path + ": unsupported version " + std::to_string(version));
    }
    const std::uint32_t num_videos = get_u32(is, feature_path);
    for (std::uint32_t vi = 0; vi < num_videos; ++vi) {
      const std::uint16_t name_len = get_u16(is, feature_path);
      std::string name(name_len, '\0');
      if (name_len > 0 && !is.read(name.data(), name_len)) {
        throw ParseError(feature_path + ": truncated file");
      }
      const std::uint32_t F = get_u32(is, feature_path);
      const std::uint32_t D = get_u32(is, feature_path);
      if (D == 0) throw ParseError(feature_path + ": video '" + name + "' has zero feature dim");
      if (ds.dim == 0) {
        ds.dim = static_cast<int>(D);
      } else if (ds.dim != static_cast<int>(D)) {
        throw ParseError(feature_path + ": video '" + name + "' has dim " + std::to_string(D) +
                         ", expected " + std::to_string(ds.dim));
      }
      auto it = ann.find(name);
      if (it == ann.end()) {
        throw ParseError(annotation_path + ": no annotations for video '" + name + "'");
      }
      if (it->second.size() != F) {
        throw ParseError("video '" + name + "': " + std::to_string(F) + " feature frames but " +
                         std::to_string(it->second.size()) + " annotation rows");
      }
      Video video;
      video.id = name;
      video.frames.resize(F);
      for (std::uint32_t f = 0; f < F; ++f) {
        FrameRecord& fr = video.frames[f];
        fr.frame_index = it->second[f].frame_index;
        fr.phase = it->second[f].phase;
        fr.outlier = it->second[f].outlier;
        fr.feature.resize(D);
        for (std::uint32_t d = 0; d < D; ++d) {
          fr.feature[d] = static_cast<double>(get_f32(is, feature_path));
        }
      }
      ds.videos.push_back(std::move(video));
    }
    char extra;
    if (is.read(&extra, 1)) throw ParseError(feature_path + ": trailing bytes after last video");
  }

  for (const auto& [name, rows] : ann) {
    if (!ds.find_video(name)) {
      throw ParseError(feature_path + ": no features for annotated video '" + name + "'");
    }
  }
  if (ds.videos.empty()) throw ParseError(feature_path + ": no videos");
  return ds;
}

}  // namespace lrtd
