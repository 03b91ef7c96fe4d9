// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tivgan/nn/tensor.hpp"
#include "tivgan/text/caption.hpp"

namespace tivgan::data {

inline constexpr int kDefaultClipLength = 16;

/// One captioned clip; frames are [T, C, H, W] in [-1, 1].
struct VideoClip {
  std::string id;
  text::Caption caption;
  nn::Tensor<float> frames;

  int length() const { return static_cast<int>(frames.dim(0)); }
  int channels() const { return static_cast<int>(frames.dim(1)); }
  int frame_size() const { return static_cast<int>(frames.dim(2)); }
  std::int64_t frame_numel() const { return frames.numel() / frames.dim(0); }
  std::span<const float> frame(int t) const;
};

struct DatasetIndex {
  std::vector<VideoClip> clips;
  /// Caption text per class label.
  std::vector<std::string> class_captions;
  std::vector<std::vector<int>> clips_by_class;
  /// Clips skipped while loading, one line each.
  std::vector<std::string> warnings;

  int num_classes() const { return static_cast<int>(class_captions.size()); }
  int channels() const { return clips.empty() ? 0 : clips.front().channels(); }
  int frame_size() const { return clips.empty() ? 0 : clips.front().frame_size(); }
  int clip_length() const { return clips.empty() ? 0 : clips.front().length(); }
  text::Caption class_caption(int label) const;

  /// Rebuilds class tables from clip captions; checks shapes and labels.
  void reindex();
};

/// Procedural caption/video source: every (shape, color, motion) combination
/// is one class captioned "a <color> <shape> moving <direction>".
struct SyntheticSpec {
  std::vector<std::string> shapes{"circle"};
  std::vector<std::string> colors{"red", "green"};
  std::vector<std::string> motions{"left", "right"};
  /// Pixels per frame; 0 selects frame_size / 32.
  double speed = 0.0;
  /// Shape half-extent in pixels; 0 selects frame_size / 8.
  double radius = 0.0;
  int frame_size = 64;
  int clip_length = kDefaultClipLength;
  int clips_per_class = 50;
  std::uint64_t seed = 0;
};

std::vector<std::string> known_shapes();
std::vector<std::string> known_colors();
std::vector<std::string> known_motions();

/// Deterministic in `spec.seed`. Start positions avoid border contact when
/// the travel fits; otherwise motion reflects off the frame edges.
DatasetIndex generate_synthetic_dataset(const SyntheticSpec& spec);

/// Object center (x, y) at frame t for a clip starting at `start` and moving
/// `dir` with `speed`, reflected into [lo, hi] on both axes.
std::pair<double, double> trajectory(std::pair<double, double> start, std::pair<double, double> dir, double speed,
                                     int t, double lo, double hi);

/// Writes `root/<clip_id>/frame_0001.png ...` and `root/captions.tsv`
/// (clip_id TAB caption TAB class_label).
void write_dataset(const DatasetIndex& index, const std::filesystem::path& root);

struct LoadOptions {
  int frame_size = 64;
  int channels = 3;
  /// Longer clips are cut to their first `clip_length` frames.
  int clip_length = kDefaultClipLength;
  /// Shorter clips are skipped and listed in DatasetIndex::warnings.
  int min_frames = kDefaultClipLength;
  /// PNG decode workers.
  int threads = 1;
};

DatasetIndex load_frames_dir(const std::filesystem::path& root, const LoadOptions& options = {});

}  // namespace tivgan::data
