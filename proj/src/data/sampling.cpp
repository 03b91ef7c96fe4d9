// SPDX-License-Identifier: Apache-2.0
#include "tivgan/data/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "tivgan/errors.hpp"

namespace tivgan::data {

namespace {

nn::Tensor<float> copy_frames(const VideoClip& clip, int start, int count) {
  nn::Tensor<float> out({count, clip.channels(), clip.frame_size(), clip.frame_size()});
  const auto n = static_cast<std::size_t>(clip.frame_numel());
  const auto src = clip.frames.values().subspan(static_cast<std::size_t>(start) * n, n * count);
  std::copy(src.begin(), src.end(), out.values().begin());
  return out;
}

nn::Tensor<float> single_frame(const VideoClip& clip, int t) {
  auto out = copy_frames(clip, t, 1);
  out.reshape({clip.channels(), clip.frame_size(), clip.frame_size()});
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

double frame_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeError("frame_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

int sample_frame_index(const VideoClip& clip, Rng& rng) {
  return static_cast<int>(rng.uniform_int(0, clip.length() - 1));
}

nn::Tensor<float> sample_real_frame(const VideoClip& clip, Rng& rng) {
  return single_frame(clip, sample_frame_index(clip, rng));
}

Window sample_consecutive(const VideoClip& clip, int k, Rng& rng) {
  if (k < 1 || k > clip.length())
    throw InvalidInput("sample_consecutive: window of " + std::to_string(k) + " frames from a clip of " +
                       std::to_string(clip.length()));
  const int start = static_cast<int>(rng.uniform_int(0, clip.length() - k));
  return {start, copy_frames(clip, start, k)};
}

text::Caption sample_wrong_caption(const DatasetIndex& index, int label, Rng& rng) {
  const int K = index.num_classes();
  if (K < 2) throw SamplingError("sample_wrong_caption: dataset has a single class");
  if (label < 0 || label >= K) throw InvalidInput("sample_wrong_caption: unknown class " + std::to_string(label));
  int other = static_cast<int>(rng.uniform_int(0, K - 2));
  if (other >= label) ++other;
  return index.class_caption(other);
}

std::vector<double> dissimilarity_thresholds(const DatasetIndex& index, int max_frames) {
  std::vector<double> tau(static_cast<std::size_t>(index.num_classes()), 0.0);
  for (int k = 0; k < index.num_classes(); ++k) {
    const auto& members = index.clips_by_class[static_cast<std::size_t>(k)];
    struct Ref {
      int clip, frame;
    };
    std::vector<Ref> refs;
    for (int c : members)
      for (int t = 0; t < index.clips[static_cast<std::size_t>(c)].length(); ++t) refs.push_back({c, t});
    if (static_cast<int>(refs.size()) > max_frames) {
      std::vector<Ref> kept;
      const double stride = static_cast<double>(refs.size()) / max_frames;
      for (int i = 0; i < max_frames; ++i) kept.push_back(refs[static_cast<std::size_t>(i * stride)]);
      refs = std::move(kept);
    }
    const bool single_clip = members.size() < 2;
    const int T = index.clips[static_cast<std::size_t>(members.front())].length();
    std::vector<double> d;
    for (std::size_t i = 0; i < refs.size(); ++i)
      for (std::size_t j = i + 1; j < refs.size(); ++j) {
        const bool valid = single_clip ? std::abs(refs[i].frame - refs[j].frame) * 2 >= T
                                       : refs[i].clip != refs[j].clip;
        if (!valid) continue;
        d.push_back(frame_distance(index.clips[static_cast<std::size_t>(refs[i].clip)].frame(refs[i].frame),
                                   index.clips[static_cast<std::size_t>(refs[j].clip)].frame(refs[j].frame)));
      }
    tau[static_cast<std::size_t>(k)] = median(std::move(d));
  }
  return tau;
}

RealPair sample_real_dissimilar_pair(const DatasetIndex& index, int clip, const std::vector<double>& thresholds,
                                     Rng& rng, int attempts) {
  if (clip < 0 || clip >= static_cast<int>(index.clips.size()))
    throw InvalidInput("sample_real_dissimilar_pair: clip " + std::to_string(clip) + " out of range");
  const auto& anchor = index.clips[static_cast<std::size_t>(clip)];
  const int label = anchor.caption.class_label;
  const auto& members = index.clips_by_class[static_cast<std::size_t>(label)];
  const double tau = static_cast<std::size_t>(label) < thresholds.size() ? thresholds[static_cast<std::size_t>(label)] : 0.0;
  const int T = anchor.length();
  if (members.size() < 2 && T < 2)
    throw SamplingError("sample_real_dissimilar_pair: class " + std::to_string(label) + " has a single frame");

  RealPair best;
  best.distance = -1.0;
  for (int attempt = 0; attempt < std::max(1, attempts); ++attempt) {
    int ca = clip, cb = clip, fa = 0, fb = 0;
    if (members.size() >= 2) {
      fa = sample_frame_index(anchor, rng);
      int pick = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(members.size()) - 2));
      const auto self = std::find(members.begin(), members.end(), clip) - members.begin();
      if (pick >= self) ++pick;
      cb = members[static_cast<std::size_t>(pick)];
      fb = sample_frame_index(index.clips[static_cast<std::size_t>(cb)], rng);
    } else {
      // Pairs (i, j) with |i - j| >= T/2, drawn uniformly.
      const int gap = (T + 1) / 2;
      std::vector<std::pair<int, int>> pairs;
      for (int i = 0; i < T; ++i)
        for (int j = 0; j < T; ++j)
          if (std::abs(i - j) >= gap) pairs.emplace_back(i, j);
      const auto& p = pairs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pairs.size()) - 1))];
      fa = p.first;
      fb = p.second;
    }
    const auto& other = index.clips[static_cast<std::size_t>(cb)];
    const double dist = frame_distance(anchor.frame(fa), other.frame(fb));
    if (dist > best.distance) {
      best.clip_a = ca;
      best.frame_a = fa;
      best.clip_b = cb;
      best.frame_b = fb;
      best.distance = dist;
    }
    if (dist >= tau) break;
  }
  best.a = single_frame(anchor, best.frame_a);
  best.b = single_frame(index.clips[static_cast<std::size_t>(best.clip_b)], best.frame_b);
  return best;
}

}  // namespace tivgan::data
