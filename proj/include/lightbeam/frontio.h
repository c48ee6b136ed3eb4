// Copyright (c) 2026 LightBeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "lightbeam/common.h"

namespace lightbeam {

inline constexpr std::string_view kBlankToken = "<blank>";
inline constexpr std::string_view kSpaceToken = "<sp>";

/// Output token inventory of the acoustic model: phonemes plus the CTC
/// blank and the word-boundary token.
class Vocabulary {
 public:
  /// Validates uniqueness, non-empty tokens and presence of the reserved
  /// tokens; throws FormatError otherwise.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  TokenId blank_id() const { return blank_id_; }
  TokenId space_id() const { return space_id_; }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<TokenId> find(std::string_view token) const;
  bool is_phoneme(TokenId id) const { return id != blank_id_ && id != space_id_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId blank_id_ = 0;
  TokenId space_id_ = 0;
};

Vocabulary load_vocab(const std::filesystem::path& path);

/// Row-major T x V matrix.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

struct RawLogits {
  Matrix<float> frames;
  float frame_duration_ms = 0.0f;

  std::size_t num_frames() const { return frames.rows(); }
};

/// Acoustically scaled log-probabilities, the matrix the decoder consumes.
struct LogProbMatrix {
  Matrix<double> frames;

  std::size_t num_frames() const { return frames.rows(); }
  std::size_t num_tokens() const { return frames.cols(); }
};

/// Reads LBLT binary or the JSON test format (by content). Throws FormatError
/// on bad magic/version, ShapeError on a column count that differs from the
/// vocabulary and ValueError on non-finite entries.
RawLogits load_logits(const std::filesystem::path& path, const Vocabulary& vocab);

/// Writes the LBLT binary format.
void save_logits(const std::filesystem::path& path, const RawLogits& logits);

/// alpha * log_softmax(raw), row by row.
LogProbMatrix scale_log_softmax(const RawLogits& raw, double acoustic_scale);

struct DecodeConfig {
  double acoustic_scale = 1.0;
  int beam_size = 16;
  int ortho_beams = 3;
  double beam_prune_threshold = 20.0;
  double homophone_prune_threshold = 4.0;
  double token_insertion_bonus = 0.0;
  double word_boundary_bonus = 0.0;
  double ngram_weight = 1.0;
  double llm_weight = 1.0;
  int llm_rescore_interval = 10;
  int llm_chunk_size = 256;

  /// Throws ConfigError when any field is out of range.
  void validate() const;

  static DecodeConfig b2t24();
  static DecodeConfig b2t25();
  static DecodeConfig profile(std::string_view name);

  bool operator==(const DecodeConfig&) const = default;
};

nlohmann::ordered_json to_json(const DecodeConfig& config);

/// Builds a config from a JSON object; an optional "profile" key selects
/// the base values and every other key overrides one field.
DecodeConfig config_from_json(const nlohmann::json& j);
DecodeConfig load_config(const std::filesystem::path& path);

}  // namespace lightbeam
