#pragma once

#include <compare>
#include <string>
#include <vector>

#include "lrtd/tensor.hpp"

namespace lrtd {

// One timestep of a video: a D-dim feature vector and its phase label.
// The outlier flag is a side channel written by the synthetic generator for
// tests; models and selectors never read it.
struct FrameRecord {
  int frame_index = 0;
  std::vector<double> feature;
  int phase = 0;
  bool outlier = false;
};

struct Video {
  std::string id;
  std::vector<FrameRecord> frames;
  int num_frames() const { return static_cast<int>(frames.size()); }
};

struct Dataset {
  std::vector<Video> videos;
  int dim = 0;
  int num_phases = 0;

  const Video* find_video(const std::string& id) const;
  std::size_t total_frames() const;
};

// Identifies a clip by its video and the index of its last frame.
// Ordering (video_id, then end_frame) is the tie-break order used everywhere.
struct ClipId {
  std::string video_id;
  int end_frame = 0;

  auto operator<=>(const ClipId&) const = default;
  std::string str() const { return video_id + ":" + std::to_string(end_frame); }
};

// A window of T consecutive frames ending at id.end_frame. The label is the
// phase of the last frame; per-frame phases are kept for reporting.
struct Clip {
  ClipId id;
  int label = 0;
  Tensor features;  // D x T, one column per frame
  std::vector<int> frame_phases;
  bool has_outlier = false;
};

// Sliding window of stride 1: max(0, F - T + 1) clips per video.
std::vector<Clip> make_clips(const Video& video, int T);
std::vector<Clip> make_clips(const Dataset& ds, const std::vector<std::string>& video_ids, int T);

// Binary feature file + TSV annotation file; formats are bit-exact contracts
// (see README). num_phases bounds the legal phase ids.
Dataset load_dataset(const std::string& feature_path, const std::string& annotation_path,
                     int num_phases);

void write_features(const std::string& path, const Dataset& ds);
void write_annotations(const std::string& path, const Dataset& ds);

}  // namespace lrtd
