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

#include <array>
#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lightbeam/common.h"
#include "lightbeam/ngram.h"

namespace lightbeam {

// Candidate sentence-final punctuation, in tie-break order.
inline constexpr std::array<std::string_view, 3> kEndPunctuation = {".", "?", "!"};

enum class RequestKind { kScore, kScoreEos };

struct ScoreRequest {
  std::uint64_t id = 0;
  RequestKind kind = RequestKind::kScore;
  std::vector<std::string> texts;

  bool operator==(const ScoreRequest&) const = default;
};

struct ScoreResponse {
  std::uint64_t id = 0;
  std::vector<double> scores;
  std::vector<std::string> puncts;      // only for kScoreEos
  std::optional<std::string> error;     // set by a peer that failed the request

  bool operator==(const ScoreResponse&) const = default;
};

// Newline-delimited JSON framing. Encoded strings carry no trailing newline.
std::string encode_request(const ScoreRequest& request);
ScoreRequest decode_request(std::string_view line);
std::string encode_response(const ScoreResponse& response);
ScoreResponse decode_response(std::string_view line);

/// Something that evaluates one batch of already-deduplicated texts.
class Scorer {
 public:
  virtual ~Scorer() = default;

  /// Evaluates one request; the response id must echo the request id.
  virtual ScoreResponse evaluate(const ScoreRequest& request) = 0;

  std::uint64_t next_request_id() { return next_id_++; }

 private:
  std::uint64_t next_id_ = 1;
};

struct EosScore {
  std::string punct;
  double score = 0.0;

  bool operator==(const EosScore&) const = default;
};

/// Natural-log full-sequence scores for `texts`, order preserved. Duplicates
/// are scored once and broadcast; unique texts are sent in batches of at
/// most `chunk_size`. Throws ScorerError on transport failure, a peer error
/// or a malformed reply.
std::vector<double> score_texts(Scorer& scorer, std::span<const std::string> texts,
                                std::size_t chunk_size);

/// Best sentence-final punctuation and the score of text+punct, per text.
std::vector<EosScore> score_eos(Scorer& scorer, std::span<const std::string> texts,
                                std::size_t chunk_size = 256);

/// Deterministic in-process scorer used in tests and benchmarks.
///
/// Table mode: exact lookup, falling back to minus the word count.
/// N-gram mode: score_sequence on the given model; "score_eos" variants are
/// scored with </s> and with the punctuation mark as a word when the model
/// lists it. Function mode: any callable, applied to text and text+punct.
class StubScorer : public Scorer {
 public:
  using TextFn = std::function<double(const std::string&)>;

  explicit StubScorer(std::map<std::string, double> table);
  explicit StubScorer(const NGramModel& model);
  explicit StubScorer(TextFn score_fn);

  ScoreResponse evaluate(const ScoreRequest& request) override;

  double score_text(const std::string& text) const;
  EosScore score_text_eos(const std::string& text) const;

  /// Sleep this long per evaluated batch; models a remote scorer's cost.
  void set_batch_latency(std::chrono::microseconds latency) { latency_ = latency; }

  std::uint64_t texts_evaluated() const { return texts_evaluated_.load(); }
  std::uint64_t batches_evaluated() const { return batches_evaluated_.load(); }

  /// JSON object mapping text to score.
  static std::unique_ptr<StubScorer> from_json_file(const std::string& path);

 private:
  double score_variant(const std::string& text, std::string_view punct) const;

  std::map<std::string, double> table_;
  const NGramModel* model_ = nullptr;
  TextFn fn_;
  std::chrono::microseconds latency_{0};
  std::atomic<std::uint64_t> texts_evaluated_{0};
  std::atomic<std::uint64_t> batches_evaluated_{0};
};

/// Client for an external scorer process speaking the JSON-lines protocol,
/// either a child process on stdin/stdout or a TCP peer.
class SidecarScorer : public Scorer {
 public:
  /// Spawns `command` through /bin/sh.
  static std::unique_ptr<SidecarScorer> spawn(const std::string& command,
                                              std::chrono::milliseconds timeout);
  /// Connects to "host:port".
  static std::unique_ptr<SidecarScorer> connect(const std::string& address,
                                                std::chrono::milliseconds timeout);

  ~SidecarScorer() override;
  SidecarScorer(const SidecarScorer&) = delete;
  SidecarScorer& operator=(const SidecarScorer&) = delete;

  ScoreResponse evaluate(const ScoreRequest& request) override;

 private:
  SidecarScorer(int read_fd, int write_fd, int child_pid, std::chrono::milliseconds timeout);

  void write_line(std::uint64_t id, const std::string& line);
  std::string read_line(std::uint64_t id);

  int read_fd_;
  int write_fd_;
  int child_pid_;
  std::chrono::milliseconds timeout_;
  std::string pending_;
};

/// Timeout for scorer round trips: LIGHTBEAM_SCORER_TIMEOUT_S if set, else 60 s.
std::chrono::milliseconds scorer_timeout_from_env();

/// Serves the protocol from `in_fd` to `out_fd` with `scorer` until EOF.
/// Malformed lines get an error response; the loop keeps running.
void serve_scorer(Scorer& scorer, int in_fd, int out_fd);

/// Listens on "host:port" and serves one connection at a time, forever.
[[noreturn]] void serve_scorer_tcp(Scorer& scorer, const std::string& address);

}  // namespace lightbeam
