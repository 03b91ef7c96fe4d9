// SPDX-License-Identifier: Apache-2.0
#include "tivgan/text/pca.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "tivgan/errors.hpp"

namespace tivgan::text {

PcaModel fit_pca(const Eigen::MatrixXd& samples, int d) {
  const auto n = samples.rows();
  const auto dim = samples.cols();
  if (d <= 0) throw InvalidInput("fit_pca: d must be positive");
  if (d > dim)
    throw InvalidInput("fit_pca: d = " + std::to_string(d) + " exceeds input dimension " + std::to_string(dim));
  if (n < 2) throw InvalidInput("fit_pca: need at least 2 samples, got " + std::to_string(n));
  if (!samples.allFinite()) throw InvalidInput("fit_pca: non-finite sample");

  PcaModel model;
  model.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("fit_pca: eigendecomposition failed");
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] > values[b]; });

  model.components.resize(d, dim);
  model.explained_variance.resize(d);
  for (int r = 0; r < d; ++r) {
    const auto src = order[static_cast<std::size_t>(r)];
    Eigen::VectorXd v = vectors.col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    model.components.row(r) = v.transpose();
    model.explained_variance[r] = std::max(0.0, values[src]);
  }
  return model;
}

PcaModel fit_pca(std::span<const RawEmbedding> embeddings, int d) {
  if (embeddings.empty()) throw InvalidInput("fit_pca: no embeddings");
  const auto dim = embeddings.front().values.size();
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(embeddings.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].values.size() != dim) throw InvalidInput("fit_pca: embeddings differ in dimension");
    for (std::size_t j = 0; j < dim; ++j)
      samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = embeddings[i].values[j];
  }
  return fit_pca(samples, d);
}

EmbeddedText project(const PcaModel& pca, const RawEmbedding& raw) {
  if (static_cast<Eigen::Index>(raw.values.size()) != pca.mean.size())
    throw InvalidInput("project: embedding has dimension " + std::to_string(raw.values.size()) +
                       ", PCA expects " + std::to_string(pca.mean.size()));
  const Eigen::Map<const Eigen::VectorXd> x(raw.values.data(), static_cast<Eigen::Index>(raw.values.size()));
  const Eigen::VectorXd code = pca.components * (x - pca.mean);
  return EmbeddedText{std::vector<double>(code.data(), code.data() + code.size())};
}

EmbeddedText embed_caption(const PcaModel& pca, const Caption& caption) {
  return project(pca, encode_caption(caption, pca.input_dim()));
}

EmbeddedText whiten(const PcaModel& pca, const EmbeddedText& code) {
  if (static_cast<Eigen::Index>(code.values.size()) != pca.explained_variance.size())
    throw InvalidInput("whiten: code has dimension " + std::to_string(code.values.size()) + ", PCA has " +
                       std::to_string(pca.explained_variance.size()));
  const auto& var = pca.explained_variance;
  const double floor = var.size() > 0 ? 1e-6 * var[0] : 0.0;
  const auto informative = (var.array() > floor && var.array() > 0.0).count();
  EmbeddedText out = code;
  if (informative == 0) {
    std::fill(out.values.begin(), out.values.end(), 0.0);
    return out;
  }
  const double gain = std::sqrt(static_cast<double>(var.size()) / static_cast<double>(informative));
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double v = var[static_cast<Eigen::Index>(i)];
    out.values[i] = v > floor && v > 0.0 ? gain * out.values[i] / std::sqrt(v) : 0.0;
  }
  return out;
}

EmbeddedText condition_code(const PcaModel& pca, const Caption& caption) {
  return whiten(pca, embed_caption(pca, caption));
}

}  // namespace tivgan::text
