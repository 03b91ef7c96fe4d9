// SPDX-License-Identifier: Apache-2.0
#include <cctype>
#include <cmath>
#include <cstdint>

#include "tivgan/errors.hpp"
#include "tivgan/text/caption.hpp"

namespace tivgan::text {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

void add_feature(std::vector<double>& bins, const std::string& feature, double weight) {
  const std::uint64_t h = fnv1a64(feature);
  const auto bin = static_cast<std::size_t>(h % bins.size());
  bins[bin] += (h >> 63) ? -weight : weight;
}

}  // namespace

RawEmbedding encode_caption(const Caption& caption, int dim) {
  if (dim <= 0) throw InvalidInput("encode_caption: embedding dimension must be positive");
  const auto tokens = tokenize(caption.text);
  if (tokens.empty()) throw InvalidInput("encode_caption: empty caption");

  std::vector<double> bins(static_cast<std::size_t>(dim), 0.0);
  for (const auto& t : tokens) add_feature(bins, "u:" + t, 1.0);
  std::string prev = "<s>";
  for (const auto& t : tokens) {
    add_feature(bins, "b:" + prev + ' ' + t, 1.0);
    prev = t;
  }
  add_feature(bins, "b:" + prev + " </s>", 1.0);

  double norm = 0.0;
  for (double v : bins) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& v : bins) v /= norm;
  return RawEmbedding{std::move(bins)};
}

}  // namespace tivgan::text
