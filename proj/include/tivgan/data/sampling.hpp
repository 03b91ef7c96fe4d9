// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "tivgan/data/dataset.hpp"
#include "tivgan/util/rng.hpp"

namespace tivgan::data {

/// Uniform frame index in [0, T).
int sample_frame_index(const VideoClip& clip, Rng& rng);

/// One frame [C, H, W], uniform over the clip.
nn::Tensor<float> sample_real_frame(const VideoClip& clip, Rng& rng);

struct Window {
  int start = 0;            // 0-based
  nn::Tensor<float> frames;  // [k, C, H, W], temporal order kept
};

/// k consecutive frames with start uniform in [0, T - k].
Window sample_consecutive(const VideoClip& clip, int k, Rng& rng);

/// Caption of a class other than `label`, uniform over the other classes.
text::Caption sample_wrong_caption(const DatasetIndex& index, int label, Rng& rng);

/// Per-class dissimilarity threshold: median pixel L2 over frame pairs taken
/// from distinct clips of the class (from distinct far-apart frames when the
/// class has a single clip). At most `max_frames` frames per class are used.
std::vector<double> dissimilarity_thresholds(const DatasetIndex& index, int max_frames = 256);

struct RealPair {
  nn::Tensor<float> a;  // [C, H, W]
  nn::Tensor<float> b;
  int clip_a = 0, frame_a = 0;
  int clip_b = 0, frame_b = 0;
  double distance = 0.0;
};

/// Two real frames of `clip`'s class that differ by at least the class
/// threshold. Frames come from distinct clips; a class with a single clip
/// falls back to frames at least T/2 apart. Up to `attempts` candidates are
/// drawn and the first reaching the threshold is kept (else the farthest).
RealPair sample_real_dissimilar_pair(const DatasetIndex& index, int clip, const std::vector<double>& thresholds,
                                     Rng& rng, int attempts = 16);

double frame_distance(std::span<const float> a, std::span<const float> b);

}  // namespace tivgan::data
