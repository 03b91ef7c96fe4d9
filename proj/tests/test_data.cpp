// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "tivgan/data/dataset.hpp"
#include "tivgan/data/sampling.hpp"
#include "tivgan/errors.hpp"
#include "tivgan/util/rng.hpp"

using namespace tivgan;
using namespace tivgan::data;
namespace fs = std::filesystem;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.frame_size = 16;
  s.clips_per_class = 3;
  s.seed = 5;
  return s;
}

// Pearson chi-square against a uniform distribution.
double chi_square(const std::vector<int>& counts) {
  double total = 0;
  for (int c : counts) total += c;
  const double expected = total / static_cast<double>(counts.size());
  double x = 0;
  for (int c : counts) x += (c - expected) * (c - expected) / expected;
  return x;
}

}  // namespace

TEST_CASE("synthetic dataset defaults") {
  SyntheticSpec s;
  s.frame_size = 16;
  const auto index = generate_synthetic_dataset(s);
  CHECK(index.num_classes() == 4);
  CHECK(index.clips.size() == 200);
  CHECK(index.clip_length() == 16);
  CHECK(index.class_captions[0] == "a red circle moving left");
  std::set<std::string> captions(index.class_captions.begin(), index.class_captions.end());
  CHECK(captions.size() == 4);
  for (float v : index.clips[0].frames.values()) CHECK((v >= -1.0f && v <= 1.0f));
}

TEST_CASE("synthetic dataset is deterministic in its seed") {
  const auto a = generate_synthetic_dataset(small_spec());
  const auto b = generate_synthetic_dataset(small_spec());
  auto other = small_spec();
  other.seed = 6;
  const auto c = generate_synthetic_dataset(other);
  CHECK(a.clips[1].frames == b.clips[1].frames);
  CHECK_FALSE(a.clips[1].frames == c.clips[1].frames);
}

TEST_CASE("motion direction shows in the object's centroid") {
  auto s = small_spec();
  s.frame_size = 32;
  const auto index = generate_synthetic_dataset(s);
  auto centroid_x = [&](const VideoClip& clip, int t) {
    const auto f = clip.frame(t);
    const int S = clip.frame_size();
    double w = 0, sx = 0;
    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x) {
        double m = 0;
        for (int ch = 0; ch < 3; ++ch) m += f[static_cast<std::size_t>((ch * S + y) * S + x)] + 1.0;
        w += m;
        sx += m * x;
      }
    return sx / w;
  };
  for (const auto& clip : index.clips) {
    const double dx = centroid_x(clip, 3) - centroid_x(clip, 0);
    if (clip.caption.text.ends_with("left")) CHECK(dx < 0);
    else CHECK(dx > 0);
  }
}

TEST_CASE("invalid synthetic specs") {
  auto s = small_spec();
  s.frame_size = 8;
  s.radius = 16;
  CHECK_THROWS_AS(generate_synthetic_dataset(s), InvalidSpec);
  s = small_spec();
  s.shapes = {"hexagon"};
  CHECK_THROWS_AS(generate_synthetic_dataset(s), InvalidSpec);
  s = small_spec();
  s.colors = {"red"};
  s.motions = {"left"};
  CHECK_THROWS_AS(generate_synthetic_dataset(s), InvalidSpec);
}

TEST_CASE("trajectory reflects at the borders") {
  const auto p = trajectory({10.0, 5.0}, {1.0, 0.0}, 2.0, 4, 2.0, 14.0);
  CHECK(p.first == doctest::Approx(14.0 - 4.0));
  CHECK(p.second == doctest::Approx(5.0));
}

TEST_CASE("write and load round trip") {
  const auto root = fs::temp_directory_path() / "tivgan_test_data";
  fs::remove_all(root);
  const auto index = generate_synthetic_dataset(small_spec());
  write_dataset(index, root);
  LoadOptions lo;
  lo.frame_size = 16;
  lo.threads = 3;
  const auto back = load_frames_dir(root, lo);
  REQUIRE(back.clips.size() == index.clips.size());
  CHECK(back.class_captions == index.class_captions);
  for (std::size_t i = 0; i < back.clips.size(); ++i) {
    const auto& a = index.clips[i].frames;
    const auto& b = back.clips[i].frames;
    double worst = 0;
    for (std::int64_t j = 0; j < a.numel(); ++j) worst = std::max(worst, static_cast<double>(std::abs(a[j] - b[j])));
    CHECK(worst <= 1.0 / 255.0 + 1e-6);
  }

  SUBCASE("short clips are skipped with a warning") {
    fs::remove(root / index.clips[0].id / "frame_0016.png");
    const auto partial = load_frames_dir(root, lo);
    CHECK(partial.clips.size() == index.clips.size() - 1);
    REQUIRE(partial.warnings.size() == 1);
    CHECK(partial.warnings[0].find(index.clips[0].id) == 0);
  }
  SUBCASE("malformed captions file") {
    std::ofstream(root / "captions.tsv", std::ios::app) << "clip_x\tno label\n";
    CHECK_THROWS_AS(load_frames_dir(root, lo), FormatError);
  }
  SUBCASE("missing captions file") {
    fs::remove(root / "captions.tsv");
    CHECK_THROWS_AS(load_frames_dir(root, lo), FormatError);
  }
  fs::remove_all(root);
}

TEST_CASE("frame index sampling is uniform") {
  const auto index = generate_synthetic_dataset(small_spec());
  Rng rng(1);
  std::vector<int> counts(16, 0);
  for (int i = 0; i < 16000; ++i) ++counts[static_cast<std::size_t>(sample_frame_index(index.clips[0], rng))];
  // 15 degrees of freedom, p = 0.001 critical value.
  CHECK(chi_square(counts) < 37.7);
}

TEST_CASE("consecutive windows") {
  const auto index = generate_synthetic_dataset(small_spec());
  Rng rng(2);
  std::vector<int> starts(13, 0);
  for (int i = 0; i < 6500; ++i) {
    const auto w = sample_consecutive(index.clips[0], 4, rng);
    ++starts[static_cast<std::size_t>(w.start)];
    CHECK(w.frames.dim(0) == 4);
  }
  CHECK(chi_square(starts) < 32.9);  // 12 dof, p = 0.001
  const auto w = sample_consecutive(index.clips[0], 16, rng);
  CHECK(w.start == 0);
  const auto f = index.clips[0].frame(15);
  CHECK(std::equal(f.begin(), f.end(), w.frames.data() + 15 * index.clips[0].frame_numel()));
  CHECK_THROWS_AS(sample_consecutive(index.clips[0], 17, rng), InvalidInput);
}

TEST_CASE("wrong captions come from other classes") {
  const auto index = generate_synthetic_dataset(small_spec());
  Rng rng(3);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 3000; ++i) {
    const auto c = sample_wrong_caption(index, 1, rng);
    CHECK(c.class_label != 1);
    CHECK(c.text == index.class_captions[static_cast<std::size_t>(c.class_label)]);
    ++counts[static_cast<std::size_t>(c.class_label)];
  }
  counts.erase(counts.begin() + 1);
  CHECK(chi_square(counts) < 13.8);  // 2 dof, p = 0.001
  auto s = small_spec();
  s.colors = {"red"};
  auto two = generate_synthetic_dataset(s);
  CHECK(sample_wrong_caption(two, 0, rng).class_label == 1);
}

TEST_CASE("dissimilar real pairs") {
  const auto index = generate_synthetic_dataset(small_spec());
  const auto thresholds = dissimilarity_thresholds(index);
  REQUIRE(thresholds.size() == 4);
  Rng rng(4);
  int reached = 0;
  for (int i = 0; i < 200; ++i) {
    const int clip = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(index.clips.size()) - 1));
    const auto p = sample_real_dissimilar_pair(index, clip, thresholds, rng);
    const int label = index.clips[static_cast<std::size_t>(clip)].caption.class_label;
    CHECK(index.clips[static_cast<std::size_t>(p.clip_a)].caption.class_label == label);
    CHECK(index.clips[static_cast<std::size_t>(p.clip_b)].caption.class_label == label);
    CHECK(p.clip_a != p.clip_b);
    CHECK(p.distance == doctest::Approx(frame_distance(p.a.values(), p.b.values())));
    if (p.distance >= thresholds[static_cast<std::size_t>(label)]) ++reached;
  }
  CHECK(reached > 190);
}

TEST_CASE("single-clip classes pair distant frames") {
  auto s = small_spec();
  s.clips_per_class = 1;
  const auto index = generate_synthetic_dataset(s);
  const auto thresholds = dissimilarity_thresholds(index);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto p = sample_real_dissimilar_pair(index, 2, thresholds, rng);
    CHECK(p.clip_a == 2);
    CHECK(p.clip_b == 2);
    CHECK(std::abs(p.frame_a - p.frame_b) >= 8);
  }
}
