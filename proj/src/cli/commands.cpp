// SPDX-License-Identifier: Apache-2.0
#include "tivgan/cli/commands.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "tivgan/curriculum/curriculum.hpp"
#include "tivgan/data/sampling.hpp"
#include "tivgan/errors.hpp"
#include "tivgan/eval/classifiers.hpp"
#include "tivgan/eval/metrics.hpp"
#include "tivgan/util/image_io.hpp"

namespace tivgan::cli {

namespace {

/// Exclusive lock on an output directory for the lifetime of a run.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / ".lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      if (errno == EEXIST)
        throw InvalidInput("output directory " + dir.string() + " is locked by another run (delete " + path_.string() +
                           " if that run is gone)");
      throw InvalidInput("cannot create lock " + path_.string() + ": " + std::strerror(errno));
    }
    const auto pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

std::string stage_label(int stage) { return stage == 0 ? "I" : "E" + std::to_string(stage); }

std::string frame_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d.png", t + 1);
  return buf;
}

std::string numbered(const char* prefix, int i, const char* suffix = "") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%03d%s", prefix, i, suffix);
  return buf;
}

data::DatasetIndex load_dataset(const fs::path& root, const curriculum::CurriculumConfig& cfg, std::ostream& log) {
  data::LoadOptions lo;
  lo.frame_size = cfg.arch.frame_size;
  lo.channels = cfg.arch.channels;
  lo.clip_length = std::max(data::kDefaultClipLength, 1 << cfg.n);
  lo.min_frames = lo.clip_length;
  lo.threads = thread_budget();
  auto index = data::load_frames_dir(root, lo);
  for (const auto& w : index.warnings) log << "warning: skipped " << w << '\n';
  log << "dataset " << root.string() << ": " << index.clips.size() << " clips, " << index.num_classes() << " classes\n";
  return index;
}

data::DatasetIndex truncate_clips(const data::DatasetIndex& index, int frames) {
  if (frames == index.clip_length()) return index;
  data::DatasetIndex out;
  for (const auto& c : index.clips) {
    data::VideoClip v{c.id, c.caption, nn::Tensor<float>({frames, c.channels(), c.frame_size(), c.frame_size()})};
    std::copy(c.frames.data(), c.frames.data() + frames * c.frame_numel(), v.frames.data());
    out.clips.push_back(std::move(v));
  }
  out.reindex();
  return out;
}

fs::path dataset_from_run(const TrainOptions& opt) {
  if (opt.dataset) return *opt.dataset;
  const auto run = opt.out / "run.txt";
  if (fs::exists(run))
    if (auto d = KeyValues::load(run).get("dataset")) return *d;
  throw InvalidInput("no dataset: pass --dataset");
}

void run_training(curriculum::CurriculumState& st, const data::DatasetIndex& index, const TrainOptions& opt,
                  bool resume, std::ostream& log) {
  const auto td = curriculum::prepare_training_data(index, st.pca);
  losses::MetricsLog metrics;
  if (resume) metrics.open(opt.out / "metrics.tsv", st.metrics_offset);
  else metrics.open(opt.out / "metrics.tsv");
  const auto latest = opt.out / "checkpoint.tivg";
  const auto total = st.config.total_iterations();

  curriculum::Hooks hooks;
  hooks.metrics = &metrics;
  if (opt.stop_at) hooks.stop_at = *opt.stop_at;
  hooks.after_iteration = [&](curriculum::CurriculumState& s) {
    if (s.config.checkpoint_every > 0 && s.global_iteration % s.config.checkpoint_every == 0)
      curriculum::save_checkpoint(s, latest);
    if (s.global_iteration % 250 == 0)
      log << "iteration " << s.global_iteration << "/" << total << " stage " << stage_label(s.stage) << std::endl;
  };
  hooks.at_boundary = [&](curriculum::CurriculumState& s) {
    curriculum::save_checkpoint(s, opt.out / ("stage_" + stage_label(s.stage) + ".tivg"));
    curriculum::save_checkpoint(s, latest);
    log << "stage " << stage_label(s.stage) << " done at iteration " << s.global_iteration << std::endl;
  };
  curriculum::train(st, td, hooks);
  curriculum::save_checkpoint(st, latest);
  if (opt.plot) write_loss_svg(opt.out / "metrics.tsv", opt.out / "loss.svg");
  log << "checkpoint " << latest.string() << " at iteration " << st.global_iteration << "/" << total << '\n';
}

}  // namespace

int thread_budget() {
  if (const char* env = std::getenv("TIVGAN_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw InvalidInput(std::string("TIVGAN_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

std::string config_hash(const KeyValues& kv) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(text::fnv1a64(kv.dump())));
  return buf;
}

void cmd_dataset_gen(const DatasetGenOptions& opt, std::ostream& log) {
  auto index = data::generate_synthetic_dataset(opt.spec);
  if (fs::exists(opt.out) && !fs::is_empty(opt.out)) {
    if (!opt.force) throw InvalidInput("target " + opt.out.string() + " is not empty; pass --force to overwrite");
    for (const auto& e : fs::directory_iterator(opt.out)) {
      const auto name = e.path().filename().string();
      if (name == "captions.tsv" || (e.is_directory() && name.rfind("clip_", 0) == 0)) fs::remove_all(e.path());
    }
  }
  data::write_dataset(index, opt.out);
  log << "wrote " << index.clips.size() << " clips in " << index.num_classes() << " classes to " << opt.out.string()
      << '\n';
  for (int k = 0; k < index.num_classes(); ++k)
    log << "  class " << k << "  " << index.clips_by_class[static_cast<std::size_t>(k)].size() << " clips  \""
        << index.class_captions[static_cast<std::size_t>(k)] << "\"\n";
}

void cmd_train(const TrainOptions& opt, std::ostream& log) {
  KeyValues kv = opt.config ? KeyValues::load(*opt.config) : KeyValues{};
  for (const auto& [k, v] : opt.overrides.entries()) kv.set(k, v);
  const auto cfg = curriculum::CurriculumConfig::from_kv(kv);
  cfg.validate();
  if (!opt.dataset) throw InvalidInput("train needs --dataset");
  fs::create_directories(opt.out);
  OutputLock lock(opt.out);
  if (fs::exists(opt.out / "checkpoint.tivg") && !opt.force)
    throw InvalidInput(opt.out.string() + " already holds a run; use resume or pass --force");
  if (opt.force) fs::remove(opt.out / "metrics.tsv");
  const auto index = load_dataset(*opt.dataset, cfg, log);
  {
    std::ofstream run(opt.out / "run.txt");
    run << "dataset = " << fs::absolute(*opt.dataset).string() << '\n';
  }
  log << "training " << cfg.total_iterations() << " iterations, stages " << curriculum::format_steps_mask(cfg.executed_stages())
      << ", config " << config_hash(cfg.to_kv()) << '\n';
  auto st = curriculum::initial_state(cfg, index);
  run_training(st, index, opt, false, log);
}

void cmd_resume(const TrainOptions& opt, std::ostream& log) {
  if (opt.config || !opt.overrides.entries().empty())
    throw InvalidInput("resume continues the stored config; drop --config and training flags");
  OutputLock lock(opt.out);
  auto st = curriculum::load_checkpoint(opt.out / "checkpoint.tivg");
  const auto index = load_dataset(dataset_from_run(opt), st.config, log);
  log << "resuming at iteration " << st.global_iteration << " stage " << stage_label(st.stage) << '\n';
  run_training(st, index, opt, true, log);
}

void cmd_generate(const GenerateOptions& opt, std::ostream& log) {
  if (opt.count < 1) throw InvalidInput("--count must be >= 1");
  auto st = curriculum::load_checkpoint(opt.checkpoint);
  const int frames = opt.frames > 0 ? opt.frames : st.frames_per_clip();
  const auto code = text::condition_code(st.pca, text::Caption{opt.caption, 0, {}});
  Rng rng(opt.seed);
  const auto clips = curriculum::generate_clips(st.models, code, opt.count, frames, rng);
  const int C = st.config.arch.channels, S = st.config.arch.frame_size;
  const auto frame_numel = static_cast<std::size_t>(C) * S * S;
  fs::create_directories(opt.out);
  for (int i = 0; i < opt.count; ++i) {
    const auto dir = opt.out / numbered("sample_", i);
    fs::create_directories(dir);
    std::vector<Image8> images;
    for (int t = 0; t < frames; ++t) {
      const std::span<const float> f(clips.data() + (static_cast<std::size_t>(i) * frames + t) * frame_numel, frame_numel);
      images.push_back(frame_to_image(f, C, S, S));
      write_png(dir / frame_name(t), images.back());
    }
    write_gif(opt.out / numbered("sample_", i, ".gif"), images);
  }
  log << "wrote " << opt.count << " samples of " << frames << " frames for \"" << opt.caption << "\" to "
      << opt.out.string() << '\n';
}

void cmd_eval(const EvalOptions& opt, std::ostream& log) {
  static const std::vector<std::string> known{"fid", "is", "accuracy", "nn"};
  for (const auto& m : opt.metrics)
    if (std::find(known.begin(), known.end(), m) == known.end())
      throw InvalidInput("unknown metric '" + m + "' (choose from fid, is, accuracy, nn)");
  auto wants = [&](const char* m) { return std::find(opt.metrics.begin(), opt.metrics.end(), m) != opt.metrics.end(); };
  auto st = curriculum::load_checkpoint(opt.checkpoint);
  const auto& arch = st.config.arch;
  const int C = arch.channels, S = arch.frame_size;
  const int frames = st.frames_per_clip();
  fs::create_directories(opt.out);

  std::optional<data::DatasetIndex> index;
  if (opt.dataset) index = load_dataset(*opt.dataset, st.config, log);
  auto need_dataset = [&](const std::string& metric, const std::optional<fs::path>& classifier) {
    if (!index && !(classifier && fs::exists(*classifier)))
      throw InvalidInput("metric '" + metric + "' needs a trained classifier: pass --dataset to train one" +
                         " or point to an existing classifier file");
  };

  // Generated clips: clips_per_class for each class caption.
  std::vector<text::EmbeddedText> codes;
  if (index)
    for (int k = 0; k < index->num_classes(); ++k) codes.push_back(text::condition_code(st.pca, index->class_caption(k)));
  Rng rng(opt.seed);
  nn::Tensor<float> generated;
  std::vector<int> labels;
  if (!codes.empty()) {
    generated = nn::Tensor<float>({static_cast<std::int64_t>(codes.size()) * opt.clips_per_class, frames * C, S, S});
    const auto per_class = static_cast<std::int64_t>(opt.clips_per_class) * frames * C * S * S;
    for (std::size_t k = 0; k < codes.size(); ++k) {
      const auto clips = curriculum::generate_clips(st.models, codes[k], opt.clips_per_class, frames, rng);
      std::copy(clips.data(), clips.data() + per_class, generated.data() + static_cast<std::int64_t>(k) * per_class);
      labels.insert(labels.end(), static_cast<std::size_t>(opt.clips_per_class), static_cast<int>(k));
    }
  }

  std::vector<std::pair<std::string, double>> report;
  eval::ClassifierTraining tc;
  tc.seed = 0;
  if (wants("is") || wants("accuracy")) {
    need_dataset(wants("is") ? "is" : "accuracy", opt.clip_classifier);
    if (!index) throw InvalidInput("generated clips need dataset captions: pass --dataset");
    // The classifier sees clips of the generated length.
    const auto clipped = truncate_clips(*index, frames);
    Rng init(tc.seed);
    eval::Clip3DClassifier clf(C, S, index->num_classes(), tc.width, init);
    const auto file =
        opt.clip_classifier.value_or(opt.out / ("clip_classifier_t" + std::to_string(frames) + ".bin"));
    if (fs::exists(file)) {
      eval::load_params(file, clf.params());
    } else {
      log << "training clip classifier on " << index->clips.size() << " clips of " << frames << " frames" << std::endl;
      clf.train(clipped, tc);
      eval::save_params(file, clf.params());
    }
    const auto probs = clf.probabilities(generated, C);
    if (wants("is")) {
      const auto is = eval::inception_score(probs, std::min<int>(10, static_cast<int>(probs.rows())));
      report.emplace_back("inception_score", is.mean);
      report.emplace_back("inception_score_std", is.std);
    }
    if (wants("accuracy")) {
      report.emplace_back("accuracy", eval::classification_accuracy(probs, labels));
      report.emplace_back("accuracy_in_set", clf.in_set_accuracy(clipped));
    }
  }
  if (wants("fid") || wants("nn")) {
    if (!index) throw InvalidInput("metrics fid and nn need real frames: pass --dataset");
  }
  if (wants("fid")) {
    Rng init(tc.seed);
    eval::FrameFeatureExtractor fx(C, S, index->num_classes(), tc.width, 64, init);
    const auto file = opt.frame_extractor.value_or(opt.out / "frame_extractor.bin");
    if (fs::exists(file)) {
      eval::load_params(file, fx.params());
    } else {
      log << "training frame feature extractor" << std::endl;
      fx.train(*index, tc);
      eval::save_params(file, fx.params());
    }
    const int n = opt.fid_frames;
    const auto fnum = static_cast<std::size_t>(C) * S * S;
    const auto gen_clips = generated.dim(0);
    nn::Tensor<float> fake({n, C, S, S}), real({n, C, S, S});
    Rng pick(opt.seed + 1);
    for (int i = 0; i < n; ++i) {
      const auto clip = i % gen_clips;
      const auto t = (i / gen_clips) % frames;
      const float* src = generated.data() + (clip * frames + t) * static_cast<std::int64_t>(fnum);
      std::copy(src, src + fnum, fake.data() + static_cast<std::size_t>(i) * fnum);
      const auto& rc = index->clips[static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(index->clips.size()) - 1))];
      const auto rf = data::sample_real_frame(rc, pick);
      std::copy(rf.data(), rf.data() + fnum, real.data() + static_cast<std::size_t>(i) * fnum);
    }
    report.emplace_back("fid", eval::compute_fid(eval::fit_stats(fx.features(real)), eval::fit_stats(fx.features(fake))));
  }
  if (wants("nn")) {
    std::vector<std::span<const float>> train_frames;
    for (const auto& c : index->clips)
      for (int t = 0; t < c.length(); ++t) train_frames.push_back(c.frame(t));
    const auto fnum = static_cast<std::size_t>(C) * S * S;
    const int shown = static_cast<int>(std::min<std::int64_t>(8, generated.dim(0)));
    double mean_distance = 0.0;
    for (int i = 0; i < shown; ++i) {
      // Spread the audit over classes.
      const auto clip = static_cast<std::int64_t>(i) * generated.dim(0) / shown;
      const std::span<const float> query(generated.data() + clip * frames * static_cast<std::int64_t>(fnum), fnum);
      const auto nb = eval::nearest_neighbor(query, train_frames);
      mean_distance += nb.distance / shown;
      const std::vector<Image8> pair{frame_to_image(query, C, S, S),
                                     frame_to_image(train_frames[static_cast<std::size_t>(nb.index)], C, S, S)};
      write_png(opt.out / numbered("nn_", i, ".png"), hstack(pair));
    }
    report.emplace_back("nn_mean_distance", mean_distance);
  }
  const auto path = opt.out / "report.tsv";
  eval::write_report(path, report, config_hash(st.config.to_kv()));
  for (const auto& [name, value] : report) log << name << '\t' << value << '\n';
  log << "report " << path.string() << '\n';
}

void cmd_inspect(const fs::path& checkpoint, std::ostream& log) {
  auto st = curriculum::load_checkpoint(checkpoint);
  auto count = [](const std::vector<nn::Parameter<float>*>& ps) {
    std::int64_t n = 0;
    for (const auto* p : ps) n += p->value.numel();
    return n;
  };
  std::vector<nn::Parameter<float>*> g, r;
  st.models.generator.collect(g);
  st.models.recurrent.collect(r);
  log << "format version  " << curriculum::kCheckpointVersion << '\n'
      << "stage           " << stage_label(st.stage) << '\n'
      << "stage iteration " << st.stage_iteration << "/" << st.config.budget(st.stage) << '\n'
      << "iteration       " << st.global_iteration << "/" << st.config.total_iterations() << '\n'
      << "frames per clip " << st.frames_per_clip() << '\n'
      << "frame size      " << st.config.arch.channels << "x" << st.config.arch.frame_size << "x" << st.config.arch.frame_size << '\n'
      << "params G        " << count(g) << '\n'
      << "params R        " << count(r) << '\n'
      << "params D_I      " << count(st.models.image_disc_params()) << " (input channels " << st.models.image_disc.in_channels() << ")\n";
  if (st.models.step_disc)
    log << "params " << st.models.step_disc->label() << "     " << count(st.models.step_disc_params()) << " (input channels "
        << st.models.step_disc->in_channels() << ")\n";
  else
    log << "step disc       none\n";
  log << "config hash     " << config_hash(st.config.to_kv()) << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Step-by-step evolutionary text-to-video GAN"};
  app.require_subcommand(1);

  DatasetGenOptions gen_opt;
  std::string shapes, colors, motions;
  auto* dataset_gen = app.add_subcommand("dataset-gen", "Write a synthetic moving-shapes dataset");
  dataset_gen->add_option("--out", gen_opt.out, "Target directory")->required();
  dataset_gen->add_option("--seed", gen_opt.spec.seed, "Random seed");
  dataset_gen->add_option("--frame-size", gen_opt.spec.frame_size, "Frame side in pixels");
  dataset_gen->add_option("--clips-per-class", gen_opt.spec.clips_per_class, "Clips per class");
  dataset_gen->add_option("--clip-length", gen_opt.spec.clip_length, "Frames per clip");
  dataset_gen->add_option("--speed", gen_opt.spec.speed, "Pixels per frame (0: frame_size / 32)");
  dataset_gen->add_option("--radius", gen_opt.spec.radius, "Shape half-extent (0: frame_size / 8)");
  dataset_gen->add_option("--shapes", shapes, "Comma list of circle,square,triangle");
  dataset_gen->add_option("--colors", colors, "Comma list of color names");
  dataset_gen->add_option("--motions", motions, "Comma list of left,right,up,down");
  dataset_gen->add_flag("--force", gen_opt.force, "Overwrite an existing dataset");

  TrainOptions train_opt;
  std::string config_path, dataset_path, steps_mask;
  std::int64_t stop_at = -1;
  std::vector<std::string> sets;
  auto add_training_flags = [&](CLI::App* cmd, bool with_schedule) {
    cmd->add_option("--out", train_opt.out, "Run directory")->required();
    cmd->add_option("--dataset", dataset_path, "Dataset root (frame directories and captions.tsv)");
    cmd->add_option("--stop-at", stop_at, "Stop after this many iterations overall");
    cmd->add_flag("--plot", train_opt.plot, "Also write loss.svg");
    if (!with_schedule) return;
    cmd->add_option("--config", config_path, "Key = value config file");
    auto kv = [&](const char* flag, const char* key, const char* help) {
      cmd->add_option_function<std::string>(flag, [&, key](const std::string& v) { train_opt.overrides.set(key, v); }, help);
    };
    kv("--seed", "seed", "Random seed");
    kv("--n", "n", "Number of evolutionary steps");
    kv("--iters-stage1", "iters_stage1", "Single-image stage iterations");
    kv("--iters-per-step", "iters_per_step", "Iterations per evolutionary step");
    kv("--frame-size", "frame_size", "Frame side in pixels");
    kv("--batch-size", "batch_size", "Batch size");
    cmd->add_option("--steps-mask", steps_mask, "Executed stages, e.g. 0,2,4 (0 is the single-image stage)");
    cmd->add_flag_callback("--no-isp", [&] { train_opt.overrides.set("use_isp", "false"); }, "Disable independent samples pairing");
    cmd->add_flag_callback("--no-eq1-init", [&] { train_opt.overrides.set("use_eq1_init", "false"); },
                           "Fresh random step discriminators instead of inherited weights");
    cmd->add_flag_callback("--non-saturating", [&] { train_opt.overrides.set("non_saturating", "true"); },
                           "Generator minimizes -log D(fake)");
    cmd->add_option("--set", sets, "Extra key=value config entries");
    cmd->add_flag("--force", train_opt.force, "Replace an existing run");
  };
  auto* train = app.add_subcommand("train", "Train from scratch");
  add_training_flags(train, true);
  auto* resume = app.add_subcommand("resume", "Continue a run from its latest checkpoint");
  add_training_flags(resume, false);

  GenerateOptions generate_opt;
  auto* generate = app.add_subcommand("generate", "Generate clips for a caption");
  generate->add_option("--checkpoint", generate_opt.checkpoint, "Checkpoint file")->required();
  generate->add_option("--caption", generate_opt.caption, "Caption text")->required();
  generate->add_option("--count", generate_opt.count, "Number of clips");
  generate->add_option("--seed", generate_opt.seed, "Noise seed");
  generate->add_option("--frames", generate_opt.frames, "Frames per clip (default: checkpoint stage)");
  generate->add_option("--out", generate_opt.out, "Output directory")->required();

  EvalOptions eval_opt;
  std::string metrics = "fid,is,accuracy,nn";
  std::string eval_dataset, clip_clf, frame_fx;
  auto* evaluate = app.add_subcommand("eval", "Evaluate a checkpoint");
  evaluate->add_option("--checkpoint", eval_opt.checkpoint, "Checkpoint file")->required();
  evaluate->add_option("--dataset", eval_dataset, "Real dataset root");
  evaluate->add_option("--metrics", metrics, "Comma list of fid,is,accuracy,nn");
  evaluate->add_option("--out", eval_opt.out, "Report directory")->required();
  evaluate->add_option("--seed", eval_opt.seed, "Noise seed");
  evaluate->add_option("--count", eval_opt.clips_per_class, "Generated clips per class");
  evaluate->add_option("--fid-frames", eval_opt.fid_frames, "Frames per side for FID");
  evaluate->add_option("--clip-classifier", clip_clf, "Clip classifier file (trained and saved when missing)");
  evaluate->add_option("--frame-extractor", frame_fx, "Frame feature extractor file (trained and saved when missing)");

  fs::path inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Summarize a checkpoint");
  inspect->add_option("checkpoint", inspect_path, "Checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    auto split = [](const std::string& s) {
      std::vector<std::string> out;
      std::stringstream ss(s);
      for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
      return out;
    };
    if (dataset_gen->parsed()) {
      if (!shapes.empty()) gen_opt.spec.shapes = split(shapes);
      if (!colors.empty()) gen_opt.spec.colors = split(colors);
      if (!motions.empty()) gen_opt.spec.motions = split(motions);
      cmd_dataset_gen(gen_opt, std::cout);
    } else if (train->parsed() || resume->parsed()) {
      if (!config_path.empty()) train_opt.config = config_path;
      if (!dataset_path.empty()) train_opt.dataset = dataset_path;
      if (!steps_mask.empty()) train_opt.overrides.set("steps_mask", steps_mask);
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw InvalidInput("--set expects key=value, got '" + s + "'");
        train_opt.overrides.set(s.substr(0, eq), s.substr(eq + 1));
      }
      if (stop_at >= 0) train_opt.stop_at = stop_at;
      if (train->parsed()) cmd_train(train_opt, std::cout);
      else cmd_resume(train_opt, std::cout);
    } else if (generate->parsed()) {
      cmd_generate(generate_opt, std::cout);
    } else if (evaluate->parsed()) {
      eval_opt.metrics = split(metrics);
      if (!eval_dataset.empty()) eval_opt.dataset = eval_dataset;
      if (!clip_clf.empty()) eval_opt.clip_classifier = clip_clf;
      if (!frame_fx.empty()) eval_opt.frame_extractor = frame_fx;
      cmd_eval(eval_opt, std::cout);
    } else if (inspect->parsed()) {
      cmd_inspect(inspect_path, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace tivgan::cli
