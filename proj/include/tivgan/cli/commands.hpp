// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tivgan/data/dataset.hpp"
#include "tivgan/util/config.hpp"

namespace tivgan::cli {

namespace fs = std::filesystem;

struct DatasetGenOptions {
  data::SyntheticSpec spec;
  fs::path out;
  bool force = false;
};

/// Writes the synthetic dataset layout and prints a class summary.
void cmd_dataset_gen(const DatasetGenOptions& opt, std::ostream& log);

struct TrainOptions {
  std::optional<fs::path> config;
  /// Command-line keys; they override the config file.
  KeyValues overrides;
  std::optional<fs::path> dataset;
  fs::path out;
  bool force = false;
  /// Stop once this many iterations have run overall (checkpoint kept).
  std::optional<std::int64_t> stop_at;
  bool plot = false;
};

/// Files written to `out`: checkpoint.tivg (latest), stage_<s>.tivg at each
/// stage boundary, metrics.tsv, run.txt and loss.svg with --plot.
void cmd_train(const TrainOptions& opt, std::ostream& log);
void cmd_resume(const TrainOptions& opt, std::ostream& log);

struct GenerateOptions {
  fs::path checkpoint;
  std::string caption;
  int count = 1;
  std::uint64_t seed = 0;
  fs::path out;
  /// 0: the checkpoint stage's clip length.
  int frames = 0;
};

/// Per sample: sample_<i>/frame_0001.png ... and sample_<i>.gif.
void cmd_generate(const GenerateOptions& opt, std::ostream& log);

struct EvalOptions {
  fs::path checkpoint;
  std::optional<fs::path> dataset;
  /// Any of: fid, is, accuracy, nn.
  std::vector<std::string> metrics;
  fs::path out;
  std::uint64_t seed = 0;
  int fid_frames = 200;
  int clips_per_class = 25;
  /// Trained classifier files; trained on the dataset and cached in `out`
  /// when absent.
  std::optional<fs::path> clip_classifier;
  std::optional<fs::path> frame_extractor;
};

/// Writes out/report.tsv; `nn` also writes out/nn_<i>.png (generated | nearest).
void cmd_eval(const EvalOptions& opt, std::ostream& log);

/// Prints version, stage, iteration, parameter counts and config hash.
void cmd_inspect(const fs::path& checkpoint, std::ostream& log);

/// Line chart of the `total` column per discriminator from a metrics log.
void write_loss_svg(const fs::path& metrics_tsv, const fs::path& svg);

/// Hex FNV-1a of the normalized config dump.
std::string config_hash(const KeyValues& kv);

/// Worker count from TIVGAN_THREADS (default 1).
int thread_budget();

/// CLI entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace tivgan::cli
