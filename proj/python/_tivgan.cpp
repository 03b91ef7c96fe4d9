// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tivgan/cli/commands.hpp"
#include "tivgan/curriculum/curriculum.hpp"
#include "tivgan/errors.hpp"
#include "tivgan/eval/metrics.hpp"
#include "tivgan/text/pca.hpp"

namespace py = pybind11;
using namespace tivgan;

namespace {

py::array_t<float> to_numpy(const nn::Tensor<float>& t, std::vector<py::ssize_t> shape) {
  py::array_t<float> out(shape);
  std::copy(t.data(), t.data() + t.numel(), out.mutable_data());
  return out;
}

Eigen::MatrixXd to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a, const char* what) {
  if (a.ndim() != 2) throw InvalidInput(std::string(what) + ": expected a 2-D array");
  Eigen::MatrixXd m(a.shape(0), a.shape(1));
  const auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i)
    for (py::ssize_t j = 0; j < a.shape(1); ++j) m(i, j) = r(i, j);
  return m;
}

// Holds a loaded checkpoint for repeated sampling.
class Checkpoint {
 public:
  explicit Checkpoint(const std::filesystem::path& path) : st_(curriculum::load_checkpoint(path)) {}

  int stage() const { return st_.stage; }
  std::int64_t iteration() const { return st_.global_iteration; }
  int frames_per_clip() const { return st_.frames_per_clip(); }
  std::map<std::string, std::string> config() const { return st_.config.to_kv().entries(); }

  // [count, frames, C, H, W] in [-1, 1].
  py::array_t<float> generate(const std::string& caption, int count, int frames, std::uint64_t seed) {
    if (frames == 0) frames = st_.frames_per_clip();
    const auto code = text::condition_code(st_.pca, text::Caption{caption, -1, {}});
    Rng rng(seed);
    nn::Tensor<float> clips;
    {
      py::gil_scoped_release release;
      clips = curriculum::generate_clips(st_.models, code, count, frames, rng);
    }
    const auto& a = st_.config.arch;
    return to_numpy(clips, {count, frames, a.channels, a.frame_size, a.frame_size});
  }

 private:
  curriculum::CurriculumState st_;
};

}  // namespace

PYBIND11_MODULE(_tivgan, m) {
  m.doc() = "Step-by-step evolutionary text-to-video GAN";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def(
      "synthetic_dataset",
      [](int frame_size, int clips_per_class, std::uint64_t seed) {
        data::SyntheticSpec spec;
        spec.frame_size = frame_size;
        spec.clips_per_class = clips_per_class;
        spec.seed = seed;
        const auto index = data::generate_synthetic_dataset(spec);
        const auto& first = index.clips.front();
        const auto n = static_cast<py::ssize_t>(index.clips.size());
        py::array_t<float> frames({n, static_cast<py::ssize_t>(first.length()), static_cast<py::ssize_t>(first.channels()),
                                   static_cast<py::ssize_t>(first.frame_size()), static_cast<py::ssize_t>(first.frame_size())});
        std::vector<int> labels;
        std::vector<std::string> captions;
        float* dst = frames.mutable_data();
        for (const auto& c : index.clips) {
          dst = std::copy(c.frames.data(), c.frames.data() + c.frames.numel(), dst);
          labels.push_back(c.caption.class_label);
          captions.push_back(c.caption.text);
        }
        py::dict out;
        out["frames"] = frames;
        out["labels"] = labels;
        out["captions"] = captions;
        out["class_captions"] = index.class_captions;
        return out;
      },
      py::arg("frame_size") = 64, py::arg("clips_per_class") = 50, py::arg("seed") = 0,
      "Moving-shapes clips: frames [N, T, C, H, W], labels and captions.");

  m.def(
      "encode_caption",
      [](const std::string& caption, int dim) { return text::encode_caption(text::Caption{caption, -1, {}}, dim).values; },
      py::arg("caption"), py::arg("dim") = text::kDefaultRawDim, "Hashed, L2-normalized caption features.");

  m.def(
      "fid",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
        return eval::compute_fid(eval::fit_stats(to_matrix(a, "fid")), eval::fit_stats(to_matrix(b, "fid")));
      },
      py::arg("features_a"), py::arg("features_b"), "Frechet distance between Gaussian fits of two feature sets.");

  m.def(
      "inception_score",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& p, int splits) {
        const auto s = eval::inception_score(to_matrix(p, "inception_score"), splits);
        return py::make_tuple(s.mean, s.std);
      },
      py::arg("probabilities"), py::arg("splits") = 10, "(mean, std) over splits.");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "tivgan");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        py::gil_scoped_release release;
        return cli::run(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns its exit code.");

  py::class_<Checkpoint>(m, "Checkpoint")
      .def(py::init<const std::filesystem::path&>(), py::arg("path"))
      .def_property_readonly("stage", &Checkpoint::stage)
      .def_property_readonly("iteration", &Checkpoint::iteration)
      .def_property_readonly("frames_per_clip", &Checkpoint::frames_per_clip)
      .def_property_readonly("config", &Checkpoint::config)
      .def("generate", &Checkpoint::generate, py::arg("caption"), py::arg("count") = 1, py::arg("frames") = 0,
           py::arg("seed") = 0);
}
