// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tivgan/errors.hpp"
#include "tivgan/text/caption.hpp"
#include "tivgan/text/pca.hpp"
#include "tivgan/util/rng.hpp"

using namespace tivgan;
using namespace tivgan::text;

TEST_CASE("tokenize lowercases and splits on punctuation") {
  CHECK(tokenize("A Red-circle, moving LEFT!") == std::vector<std::string>{"a", "red", "circle", "moving", "left"});
  CHECK(tokenize("  ").empty());
}

TEST_CASE("caption encoding") {
  const auto a = encode_caption(Caption{"a red circle moving left", 0, {}});
  const auto b = encode_caption(Caption{"A red circle, moving left.", 3, {{"shape", "circle"}}});
  CHECK(a.values == b.values);
  double norm = 0;
  for (double v : a.values) norm += v * v;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.values.size() == static_cast<std::size_t>(kDefaultRawDim));
  // Word order matters through the bigrams.
  CHECK(encode_caption(Caption{"moving left red circle", 0, {}}).values != a.values);
  CHECK_THROWS_AS(encode_caption(Caption{"!!", 0, {}}), InvalidInput);
  CHECK_THROWS_AS(encode_caption(Caption{"ok", 0, {}}, 0), InvalidInput);
}

TEST_CASE("pca agrees with a Jacobi eigendecomposition") {
  Rng rng(11);
  const int n = 30, dim = 6, d = 3;
  Eigen::MatrixXd x(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) x(i, j) = rng.normal() * (j + 1);
  const auto model = fit_pca(x, d);

  oracle::Mat cov(dim, std::vector<long double>(dim, 0.0L));
  std::vector<long double> mu(dim, 0.0L);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) mu[j] += x(i, j) / n;
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) cov[a][b] += (x(i, a) - mu[a]) * (x(i, b) - mu[b]) / (n - 1);
  const auto [values, vectors] = oracle::jacobi_eigen(cov);
  for (int r = 0; r < d; ++r) {
    CHECK(model.explained_variance[r] == doctest::Approx(static_cast<double>(values[r])).epsilon(1e-10));
    long double dot = 0;
    for (int j = 0; j < dim; ++j) dot += model.components(r, j) * vectors[j][r];
    CHECK(std::fabs(std::fabs(dot) - 1) < 1e-10);
  }
  for (int r = 0; r + 1 < d; ++r) CHECK(model.explained_variance[r] >= model.explained_variance[r + 1]);
  const Eigen::MatrixXd gram = model.components * model.components.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pca projection of the mean is zero") {
  std::vector<RawEmbedding> raws;
  for (const char* s : {"a red circle moving left", "a green circle moving left", "a red square moving up",
                        "a blue triangle moving down"})
    raws.push_back(encode_caption(Caption{s, 0, {}}, 32));
  const auto model = fit_pca(raws, 6);
  CHECK(model.output_dim() == 6);
  RawEmbedding mean{std::vector<double>(model.mean.data(), model.mean.data() + model.mean.size())};
  for (double v : project(model, mean).values) CHECK(std::abs(v) < 1e-12);
  // Only three directions carry variance for four samples.
  CHECK(model.explained_variance[3] < 1e-12);
  CHECK(model.explained_variance[2] > 1e-6);
}

TEST_CASE("pca input validation") {
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Zero(1, 3), 1), InvalidInput);
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Zero(5, 3), 4), InvalidInput);
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Zero(5, 3), 0), InvalidInput);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(5, 3);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(fit_pca(bad, 1), InvalidInput);
  const auto model = fit_pca(Eigen::MatrixXd::Random(5, 3), 2);
  CHECK_THROWS_AS(project(model, RawEmbedding{{1.0, 2.0}}), InvalidInput);
}

TEST_CASE("whitened codes carry d / r variance per informative coordinate") {
  const std::vector<std::string> captions{"a red circle moving left", "a red circle moving right",
                                          "a green circle moving left", "a green circle moving right",
                                          "a blue square moving up"};
  std::vector<RawEmbedding> raws;
  for (const auto& s : captions) raws.push_back(encode_caption(Caption{s, 0, {}}, 32));
  const auto model = fit_pca(raws, 6);
  std::vector<double> sum(6, 0.0), sq(6, 0.0);
  for (const auto& s : captions) {
    const auto c = condition_code(model, Caption{s, 0, {}});
    for (int j = 0; j < 6; ++j) {
      sum[j] += c.values[j];
      sq[j] += c.values[j] * c.values[j];
    }
  }
  const double n = static_cast<double>(captions.size());
  // Four informative coordinates out of six.
  for (int j = 0; j < 4; ++j) CHECK((sq[j] - sum[j] * sum[j] / n) / (n - 1) == doctest::Approx(1.5).epsilon(1e-9));
  // Five samples span four directions; the rest are zeroed, not amplified.
  for (int j = 4; j < 6; ++j) CHECK(sq[j] == 0.0);
  CHECK_THROWS_AS(whiten(model, EmbeddedText{{1.0}}), InvalidInput);
}
