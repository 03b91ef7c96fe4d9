// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "tivgan/data/dataset.hpp"
#include "tivgan/errors.hpp"
#include "tivgan/util/image_io.hpp"

namespace tivgan::data {

namespace fs = std::filesystem;

std::span<const float> VideoClip::frame(int t) const {
  if (t < 0 || t >= length())
    throw InvalidInput("VideoClip::frame: index " + std::to_string(t) + " outside clip of " +
                       std::to_string(length()));
  return frames.values().subspan(static_cast<std::size_t>(t * frame_numel()),
                                 static_cast<std::size_t>(frame_numel()));
}

text::Caption DatasetIndex::class_caption(int label) const {
  if (label < 0 || label >= num_classes()) throw InvalidInput("class label " + std::to_string(label) + " unknown");
  return text::Caption{class_captions[static_cast<std::size_t>(label)], label, {}};
}

void DatasetIndex::reindex() {
  if (clips.empty()) throw InvalidInput("dataset: no clips");
  int max_label = -1;
  for (const auto& c : clips) {
    if (c.caption.class_label < 0) throw FormatError("dataset: negative class label for " + c.id);
    max_label = std::max(max_label, c.caption.class_label);
    if (c.frames.shape() != clips.front().frames.shape())
      throw FormatError("dataset: clip " + c.id + " has shape " + nn::shape_string(c.frames.shape()) +
                        ", expected " + nn::shape_string(clips.front().frames.shape()));
  }
  class_captions.assign(static_cast<std::size_t>(max_label + 1), {});
  clips_by_class.assign(static_cast<std::size_t>(max_label + 1), {});
  for (int i = 0; i < static_cast<int>(clips.size()); ++i) {
    const auto& cap = clips[static_cast<std::size_t>(i)].caption;
    auto& text = class_captions[static_cast<std::size_t>(cap.class_label)];
    if (text.empty()) text = cap.text;
    else if (text != cap.text)
      throw FormatError("dataset: class " + std::to_string(cap.class_label) + " has captions '" + text + "' and '" +
                        cap.text + "'");
    clips_by_class[static_cast<std::size_t>(cap.class_label)].push_back(i);
  }
  for (int k = 0; k <= max_label; ++k)
    if (clips_by_class[static_cast<std::size_t>(k)].empty())
      throw FormatError("dataset: class " + std::to_string(k) + " has no clips");
}

void write_dataset(const DatasetIndex& index, const fs::path& root) {
  fs::create_directories(root);
  std::ofstream tsv(root / "captions.tsv");
  if (!tsv) throw FormatError("cannot write " + (root / "captions.tsv").string());
  for (const auto& clip : index.clips) {
    const auto dir = root / clip.id;
    fs::create_directories(dir);
    for (int t = 0; t < clip.length(); ++t) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%04d.png", t + 1);
      write_png(dir / name, frame_to_image(clip.frame(t), clip.channels(), clip.frame_size(), clip.frame_size()));
    }
    tsv << clip.id << '\t' << clip.caption.text << '\t' << clip.caption.class_label << '\n';
  }
  if (!tsv) throw FormatError("failed writing " + (root / "captions.tsv").string());
}

DatasetIndex load_frames_dir(const fs::path& root, const LoadOptions& options) {
  const auto tsv_path = root / "captions.tsv";
  std::ifstream tsv(tsv_path);
  if (!tsv) throw FormatError("missing captions file " + tsv_path.string());

  DatasetIndex index;
  const int T = options.clip_length;
  const auto frame_numel = static_cast<std::size_t>(options.channels) * options.frame_size * options.frame_size;
  std::string line;
  int lineno = 0;
  std::vector<std::vector<fs::path>> pending;
  while (std::getline(tsv, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    if (fields.size() != 3)
      throw FormatError(tsv_path.string() + ":" + std::to_string(lineno) + ": expected clip_id<TAB>caption<TAB>label");
    int label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(tsv_path.string() + ":" + std::to_string(lineno) + ": bad class label '" + fields[2] + "'");
    }

    const auto dir = root / fields[0];
    std::vector<fs::path> frames;
    if (fs::is_directory(dir))
      for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".png" && e.path().filename().string().rfind("frame_", 0) == 0)
          frames.push_back(e.path());
    std::sort(frames.begin(), frames.end());
    if (static_cast<int>(frames.size()) < options.min_frames || static_cast<int>(frames.size()) < T) {
      index.warnings.push_back(fields[0] + ": " + std::to_string(frames.size()) + " frames, need " +
                               std::to_string(std::max(options.min_frames, T)));
      continue;
    }
    frames.resize(static_cast<std::size_t>(T));

    VideoClip clip;
    clip.id = fields[0];
    clip.caption = text::Caption{fields[1], label, {}};
    clip.frames = nn::Tensor<float>({T, options.channels, options.frame_size, options.frame_size});
    index.clips.push_back(std::move(clip));
    pending.push_back(std::move(frames));
  }

  // Decode frames; jobs are (clip, frame) pairs striped over workers.
  const std::size_t jobs = pending.size() * static_cast<std::size_t>(T);
  const auto workers = static_cast<std::size_t>(std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(1, options.threads)), 1, std::max<std::size_t>(1, jobs)));
  std::vector<std::exception_ptr> errors(workers);
  auto decode = [&](std::size_t w) {
    try {
      for (std::size_t j = w; j < jobs; j += workers) {
        const std::size_t c = j / static_cast<std::size_t>(T), t = j % static_cast<std::size_t>(T);
        const auto img = read_png(pending[c][t]);
        image_to_frame(img, options.channels, options.frame_size,
                       index.clips[c].frames.values().subspan(t * frame_numel, frame_numel));
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    decode(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(decode, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  index.reindex();
  return index;
}

}  // namespace tivgan::data
