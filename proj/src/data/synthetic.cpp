// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>

#include "tivgan/data/dataset.hpp"
#include "tivgan/errors.hpp"
#include "tivgan/util/rng.hpp"

namespace tivgan::data {

namespace {

using Rgb = std::array<double, 3>;

const std::map<std::string, Rgb>& palette() {
  static const std::map<std::string, Rgb> colors{
      {"red", {1.0, 0.15, 0.15}},   {"green", {0.15, 0.9, 0.2}},  {"blue", {0.2, 0.35, 1.0}},
      {"yellow", {1.0, 0.9, 0.1}},  {"cyan", {0.1, 0.9, 0.95}},   {"magenta", {0.95, 0.2, 0.9}},
      {"white", {1.0, 1.0, 1.0}},   {"orange", {1.0, 0.55, 0.1}},
  };
  return colors;
}

const std::map<std::string, std::pair<double, double>>& directions() {
  static const std::map<std::string, std::pair<double, double>> dirs{
      {"left", {-1.0, 0.0}}, {"right", {1.0, 0.0}}, {"up", {0.0, -1.0}}, {"down", {0.0, 1.0}}};
  return dirs;
}

bool inside(const std::string& shape, double dx, double dy, double r) {
  if (shape == "circle") return dx * dx + dy * dy <= r * r;
  if (shape == "square") return std::abs(dx) <= r && std::abs(dy) <= r;
  // Upward triangle with apex (0, -r) and base corners (+-r, r).
  if (dy < -r || dy > r) return false;
  const double half_width = r * (dy + r) / (2.0 * r);
  return std::abs(dx) <= half_width;
}

double reflect(double p, double lo, double hi) {
  if (hi <= lo) return lo;
  const double span = hi - lo;
  double q = std::fmod(p - lo, 2.0 * span);
  if (q < 0) q += 2.0 * span;
  return q <= span ? lo + q : lo + 2.0 * span - q;
}

void rasterize(const std::string& shape, const Rgb& color, double cx, double cy, double r, int size,
               std::span<float> chw) {
  constexpr int kSuper = 4;
  const auto plane = static_cast<std::size_t>(size) * size;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSuper; ++sy)
        for (int sx = 0; sx < kSuper; ++sx) {
          const double px = x + (sx + 0.5) / kSuper;
          const double py = y + (sy + 0.5) / kSuper;
          hits += inside(shape, px - cx, py - cy, r);
        }
      const double coverage = static_cast<double>(hits) / (kSuper * kSuper);
      const auto at = static_cast<std::size_t>(y) * size + x;
      for (int c = 0; c < 3; ++c) chw[c * plane + at] = static_cast<float>(2.0 * coverage * color[c] - 1.0);
    }
}

}  // namespace

std::vector<std::string> known_shapes() { return {"circle", "square", "triangle"}; }

std::vector<std::string> known_colors() {
  std::vector<std::string> out;
  for (const auto& [name, rgb] : palette()) out.push_back(name);
  return out;
}

std::vector<std::string> known_motions() { return {"left", "right", "up", "down"}; }

std::pair<double, double> trajectory(std::pair<double, double> start, std::pair<double, double> dir, double speed,
                                     int t, double lo, double hi) {
  return {reflect(start.first + dir.first * speed * t, lo, hi), reflect(start.second + dir.second * speed * t, lo, hi)};
}

DatasetIndex generate_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.frame_size < 4) throw InvalidSpec("synthetic: frame_size must be >= 4");
  if (spec.clip_length < 1) throw InvalidSpec("synthetic: clip_length must be >= 1");
  if (spec.clips_per_class < 1) throw InvalidSpec("synthetic: clips_per_class must be >= 1");
  if (spec.shapes.empty() || spec.colors.empty() || spec.motions.empty())
    throw InvalidSpec("synthetic: shapes, colors and motions must be non-empty");
  const auto shapes = known_shapes();
  for (const auto& s : spec.shapes)
    if (std::find(shapes.begin(), shapes.end(), s) == shapes.end()) throw InvalidSpec("synthetic: unknown shape " + s);
  for (const auto& c : spec.colors)
    if (!palette().contains(c)) throw InvalidSpec("synthetic: unknown color " + c);
  for (const auto& m : spec.motions)
    if (!directions().contains(m)) throw InvalidSpec("synthetic: unknown motion " + m);
  if (spec.shapes.size() * spec.colors.size() * spec.motions.size() < 2)
    throw InvalidSpec("synthetic: need at least 2 classes");

  const double size = spec.frame_size;
  const double r = spec.radius > 0 ? spec.radius : size / 8.0;
  const double speed = spec.speed > 0 ? spec.speed : size / 32.0;
  if (spec.radius < 0 || spec.speed < 0) throw InvalidSpec("synthetic: radius and speed must be non-negative");
  if (2.0 * r + 1.0 > size)
    throw InvalidSpec("synthetic: shape of radius " + std::to_string(r) + " does not fit a " +
                      std::to_string(spec.frame_size) + " px frame");

  const double lo = r + 0.5;
  const double hi = size - r - 0.5;
  const double travel = speed * (spec.clip_length - 1);

  Rng rng(spec.seed);
  DatasetIndex index;
  int label = 0;
  for (const auto& shape : spec.shapes)
    for (const auto& color : spec.colors)
      for (const auto& motion : spec.motions) {
        const auto dir = directions().at(motion);
        text::Caption caption{"a " + color + " " + shape + " moving " + motion,
                              label,
                              {{"shape", shape}, {"color", color}, {"motion", motion}}};
        for (int i = 0; i < spec.clips_per_class; ++i) {
          // Along the motion axis, start where the whole path fits if it can.
          auto start_on_axis = [&](double d) {
            if (d == 0.0) return rng.uniform(lo, hi);
            if (travel <= hi - lo) return d > 0 ? rng.uniform(lo, hi - travel) : rng.uniform(lo + travel, hi);
            return rng.uniform(lo, hi);
          };
          const double sx = start_on_axis(dir.first);
          const double sy = start_on_axis(dir.second);

          VideoClip clip;
          char id[32];
          std::snprintf(id, sizeof(id), "clip_%05zu", index.clips.size());
          clip.id = id;
          clip.caption = caption;
          clip.frames = nn::Tensor<float>({spec.clip_length, 3, spec.frame_size, spec.frame_size});
          const auto frame_numel = static_cast<std::size_t>(3) * spec.frame_size * spec.frame_size;
          for (int t = 0; t < spec.clip_length; ++t) {
            const auto [cx, cy] = trajectory({sx, sy}, dir, speed, t, lo, hi);
            rasterize(shape, palette().at(color), cx, cy, r, spec.frame_size,
                      clip.frames.values().subspan(t * frame_numel, frame_numel));
          }
          index.clips.push_back(std::move(clip));
        }
        ++label;
      }
  index.reindex();
  return index;
}

}  // namespace tivgan::data
