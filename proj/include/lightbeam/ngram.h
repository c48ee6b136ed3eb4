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

#include <atomic>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lightbeam/common.h"

namespace lightbeam {

using WordId = std::uint32_t;

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

struct NGramEntry {
  double log_prob = 0.0;  // natural log
  double backoff = 0.0;   // natural log
};

/// Backoff n-gram model read from ARPA text. Scores are converted from
/// log10 to natural log on load.
class NGramModel {
 public:
  int order() const { return order_; }
  bool unk_present() const { return unk_present_; }
  std::size_t num_words() const { return words_.size(); }
  std::size_t num_ngrams(int n) const { return tables_.at(n - 1).size(); }

  std::optional<WordId> word_id(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(id); }
  WordId bos_id() const { return bos_id_; }
  WordId eos_id() const { return eos_id_; }
  std::optional<WordId> unk_id() const;
  /// True when the word has its own unigram entry.
  bool listed(WordId id) const { return id < listed_.size() && listed_[id]; }

  /// Entry for an n-gram of length 1..order, or nullptr. Every call counts
  /// as one probability-table lookup.
  const NGramEntry* find(std::span<const WordId> ngram) const;

  std::uint64_t lookup_count() const { return lookups_.load(std::memory_order_relaxed); }
  void reset_lookup_count() const { lookups_.store(0, std::memory_order_relaxed); }

  NGramModel() = default;
  NGramModel(const NGramModel&) = delete;
  NGramModel& operator=(const NGramModel&) = delete;
  NGramModel(NGramModel&& other) noexcept;
  NGramModel& operator=(NGramModel&& other) noexcept;

 private:
  friend NGramModel parse_arpa(std::string_view text);

  struct KeyHash {
    std::size_t operator()(const std::vector<WordId>& key) const noexcept;
  };
  using Table = std::unordered_map<std::vector<WordId>, NGramEntry, KeyHash>;

  WordId intern(const std::string& word);

  int order_ = 0;
  bool unk_present_ = false;
  std::vector<std::string> words_;
  std::vector<bool> listed_;
  std::unordered_map<std::string, WordId> word_index_;
  std::vector<Table> tables_;
  WordId bos_id_ = 0;
  WordId eos_id_ = 0;
  mutable std::atomic<std::uint64_t> lookups_{0};
};

/// Parses ARPA text. Throws FormatError (with a line number where one
/// applies) on malformed input.
NGramModel parse_arpa(std::string_view text);

/// Reads an ARPA file, transparently gunzipping when the file starts with
/// the gzip magic bytes.
NGramModel load_arpa(const std::filesystem::path& path);

/// Append-only registry of LM histories. Id 0 is the begin-of-sentence
/// history.
class LmStateRegistry {
 public:
  explicit LmStateRegistry(const NGramModel& model);

  LmStateId intern(const std::vector<WordId>& history);
  const std::vector<WordId>& history(LmStateId id) const;
  bool contains(LmStateId id) const { return id < histories_.size(); }
  std::size_t size() const { return histories_.size(); }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<WordId>& key) const noexcept;
  };
  std::vector<std::vector<WordId>> histories_;
  std::unordered_map<std::vector<WordId>, LmStateId, KeyHash> index_;
};

struct WordScore {
  double log_prob = kNegInf;  // natural log
  LmStateId next_state = 0;
};

/// Memo of (state, word) -> (score, successor).
class TransitionCache {
 public:
  const WordScore* find(LmStateId state, WordId word) const;
  void insert(LmStateId state, WordId word, WordScore value);
  std::size_t size() const { return map_.size(); }
  void clear() { map_.clear(); }

 private:
  std::unordered_map<std::uint64_t, WordScore> map_;
};

/// Backoff score of `word` after the history registered as `state`, in
/// natural log. An unknown word maps to <unk> when the model has it and to
/// kNegInf otherwise. Results are memoised in `cache` when it is non-null.
/// Throws std::logic_error for an unregistered state.
WordScore score_word(const NGramModel& model, LmStateRegistry& registry, TransitionCache* cache,
                     LmStateId state, std::string_view word);

/// Sum of score_word along `words` starting from begin-of-sentence,
/// optionally followed by </s>. Natural log.
double score_sequence(const NGramModel& model, std::span<const std::string> words,
                      bool include_eos);

/// Per-session bundle of the mutable parts used while decoding.
class NGramSession {
 public:
  explicit NGramSession(const NGramModel& model, bool use_cache = true)
      : model_(&model), registry_(model), use_cache_(use_cache) {}

  WordScore score_word(LmStateId state, std::string_view word) {
    return lightbeam::score_word(*model_, registry_, use_cache_ ? &cache_ : nullptr, state,
                                 word);
  }
  LmStateId bos_state() const { return 0; }
  const NGramModel& model() const { return *model_; }
  LmStateRegistry& registry() { return registry_; }
  TransitionCache& cache() { return cache_; }

 private:
  const NGramModel* model_;
  LmStateRegistry registry_;
  TransitionCache cache_;
  bool use_cache_;
};

}  // namespace lightbeam
