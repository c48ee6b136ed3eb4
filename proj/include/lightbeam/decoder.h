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

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lightbeam/common.h"
#include "lightbeam/frontio.h"
#include "lightbeam/lexicon.h"
#include "lightbeam/ngram.h"
#include "lightbeam/scorer.h"

namespace lightbeam {

/// 128-bit polynomial hash of a collapsed label sequence, kept as two
/// independent 64-bit lanes.
struct Hash128 {
  std::uint64_t a = 0;
  std::uint64_t b = 0;

  bool operator==(const Hash128&) const = default;
};

struct Hash128Hasher {
  std::size_t operator()(const Hash128& h) const noexcept {
    return static_cast<std::size_t>(h.a ^ (h.b * 0x9E3779B97F4A7C15ull));
  }
};

/// Hash of the empty sequence.
Hash128 empty_hash();
/// Hash of `h`'s sequence with `token` appended.
Hash128 extend_hash(Hash128 h, TokenId token);
/// Hash of a whole label sequence; equals folding extend_hash from empty.
Hash128 hash_labels(std::span<const TokenId> labels);

/// Append-only trie of word sequences shared by all beams of a session.
class WordHistory {
 public:
  using NodeId = std::uint32_t;
  static constexpr NodeId kEmpty = 0;

  WordHistory();

  /// Node for `parent` followed by `word`; an existing node is reused.
  NodeId append(NodeId parent, const std::string& word);
  NodeId parent(NodeId node) const { return nodes_.at(node).parent; }
  const std::string& word(NodeId node) const { return nodes_.at(node).word; }
  std::size_t size() const { return nodes_.size(); }

  std::vector<std::string> words(NodeId node) const;
  /// Words joined by single spaces; "" for the empty history.
  std::string text(NodeId node) const;

 private:
  struct Node {
    NodeId parent;
    std::string word;
  };
  struct KeyHash {
    std::size_t operator()(const std::pair<NodeId, std::string>& k) const noexcept;
  };
  std::vector<Node> nodes_;
  std::unordered_map<std::pair<NodeId, std::string>, NodeId, KeyHash> index_;
};

/// One spelling hypothesis nested under an acoustic beam.
struct OrthoEntry {
  double lm_total = 0.0;  // weighted LM running total
  LmStateId lm_state = 0;
  WordHistory::NodeId history = WordHistory::kEmpty;
  char punct = '\0';  // set by the final rescoring pass only
};

/// Active beams plus the frame-major label and parent buffers.
class BeamSet {
 public:
  void reset(std::size_t max_frames, std::size_t beam_size);

  std::size_t size() const { return scores.size(); }
  std::size_t frames() const { return frames_; }
  std::size_t beam_size() const { return beam_size_; }

  TokenId label(std::size_t t, std::size_t j) const { return labels_[t * beam_size_ + j]; }
  std::uint32_t parent(std::size_t t, std::size_t j) const { return parents_[t * beam_size_ + j]; }

  /// Frame-level token path of active beam `j`, recovered through the
  /// parent pointers.
  std::vector<TokenId> path(std::size_t j) const;

  std::vector<double> scores;
  std::vector<TokenId> last_tokens;
  std::vector<Hash128> hashes;
  std::vector<StateId> prefix_states;
  std::vector<std::vector<OrthoEntry>> ortho;

 private:
  friend class Decoder;

  std::size_t beam_size_ = 0;
  std::size_t max_frames_ = 0;
  std::size_t frames_ = 0;
  std::vector<TokenId> labels_;
  std::vector<std::uint32_t> parents_;
};

/// Instrumentation hooks, all no-ops by default.
class DecodeObserver {
 public:
  virtual ~DecodeObserver() = default;
  /// Materialized beams of frame `t` just before hash merging.
  virtual void before_recombine(std::size_t /*t*/, std::span<const Hash128> /*hashes*/,
                                std::span<const double> /*scores*/) {}
  virtual void after_step(std::size_t /*t*/, const BeamSet& /*beams*/) {}
  /// `scores_before` is indexed like beams before any dead beam was dropped.
  virtual void after_llm(std::size_t /*t*/, bool /*final*/,
                         std::span<const double> /*scores_before*/,
                         std::span<const double> /*scores_after*/) {}
  virtual void after_closure(const BeamSet& /*beams*/) {}
};

struct DecodeOptions {
  bool use_transition_cache = true;
  /// When false only the end-of-utterance rescoring pass runs.
  bool intermediate_fusion = true;
  DecodeObserver* observer = nullptr;
};

struct Hypothesis {
  std::string text;
  double score = 0.0;

  bool operator==(const Hypothesis&) const = default;
};

struct DecodeResult {
  std::string text;
  double score = 0.0;
  std::vector<Hypothesis> nbest;
  std::size_t frame_count = 0;
  double wall_time_s = 0.0;
  std::size_t llm_events = 0;  // non-final rescoring passes
};

/// Lexicon-constrained CTC beam search with n-gram shallow fusion and
/// periodic rescoring by an external scorer. One instance per session.
///
/// A null scorer disables rescoring entirely, including final punctuation.
class Decoder {
 public:
  Decoder(const DecodeConfig& config, const TransitionTable& table, const Vocabulary& vocab,
          const NGramModel& ngram, Scorer* scorer, DecodeOptions options = {});

  /// Starts an utterance of at most `max_frames` frames.
  void init_beams(std::size_t max_frames);

  /// Consumes one frame of log-probabilities. Throws EmptyBeamError when
  /// nothing survives.
  void step(std::span<const double> row);

  /// Word-boundary fusion for active beam `j` with the given completions.
  /// Returns false when every candidate was out of vocabulary and the beam
  /// was killed.
  bool apply_ngram(std::size_t j, std::span<const EntryId> completions);

  /// Rescores every ortho entry of every active beam.
  void apply_llm(bool final);

  /// End-of-utterance closure followed by the final rescoring pass.
  void finish();

  DecodeResult result() const;

  const BeamSet& beams() const { return beams_; }
  const WordHistory& history() const { return history_; }
  NGramSession& ngram() { return ngram_; }
  std::size_t frame() const { return t_; }
  std::size_t llm_events() const { return llm_events_; }

  /// Text of an ortho entry including any punctuation.
  std::string entry_text(const OrthoEntry& e) const;

 private:
  void recombine(std::size_t t);
  void drop_dead();
  // Keeps the listed active beams, in that order.
  void keep(std::span<const std::size_t> idx);

  DecodeConfig config_;
  const TransitionTable* table_;
  TokenId blank_;
  TokenId space_;
  Scorer* scorer_;
  DecodeOptions options_;
  NGramSession ngram_;
  WordHistory history_;
  BeamSet beams_;
  std::vector<std::string> surfaces_;  // lowercased, per lexicon entry
  std::size_t t_ = 0;
  std::size_t llm_events_ = 0;
};

/// Runs a full utterance. Throws ShapeError when D is empty or its width
/// differs from the vocabulary.
DecodeResult decode(const LogProbMatrix& D, const DecodeConfig& config,
                    const TransitionTable& table, const Vocabulary& vocab,
                    const NGramModel& ngram, Scorer* scorer, DecodeOptions options = {});

}  // namespace lightbeam
