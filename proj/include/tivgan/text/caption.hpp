// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tivgan::text {

inline constexpr int kDefaultRawDim = 256;

struct Caption {
  std::string text;
  int class_label = 0;
  std::vector<std::pair<std::string, std::string>> attributes;
};

/// Hashed caption features, unit L2 norm.
struct RawEmbedding {
  std::vector<double> values;
};

/// PCA-reduced caption code that conditions every network.
struct EmbeddedText {
  std::vector<double> values;
};

/// Lower-cased alphanumeric tokens of `text`.
std::vector<std::string> tokenize(const std::string& text);

/// Signed feature hashing of unigrams and boundary-marked bigrams into `dim`
/// bins, then L2-normalized. Pure: depends on nothing but the caption text,
/// so a typed caption and a dataset caption with attributes agree.
RawEmbedding encode_caption(const Caption& caption, int dim = kDefaultRawDim);

/// 64-bit FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(const std::string& s);

}  // namespace tivgan::text
