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

#include "lightbeam/scorer.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"

namespace lightbeam {

namespace {

using nlohmann::json;

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

const char* kind_name(RequestKind kind) {
  return kind == RequestKind::kScore ? "score" : "score_eos";
}

bool is_end_punct(std::string_view p) {
  return std::find(kEndPunctuation.begin(), kEndPunctuation.end(), p) != kEndPunctuation.end();
}

// Unique texts in first-seen order plus, for every input, its unique index.
struct Dedup {
  std::vector<std::string> unique;
  std::vector<std::size_t> slot;
};

Dedup dedup(std::span<const std::string> texts) {
  Dedup d;
  std::unordered_map<std::string_view, std::size_t> seen;
  d.slot.reserve(texts.size());
  for (const auto& t : texts) {
    auto [it, inserted] = seen.emplace(t, d.unique.size());
    if (inserted) d.unique.push_back(t);
    d.slot.push_back(it->second);
  }
  return d;
}

ScoreResponse checked_evaluate(Scorer& scorer, RequestKind kind, std::vector<std::string> batch) {
  ScoreRequest req{scorer.next_request_id(), kind, std::move(batch)};
  ScoreResponse resp = scorer.evaluate(req);
  if (resp.error) throw ScorerError(req.id, "peer error: " + *resp.error);
  if (resp.id != req.id) {
    throw ScorerError(req.id, "response id " + std::to_string(resp.id) + " does not match");
  }
  if (resp.scores.size() != req.texts.size()) {
    throw ScorerError(req.id, "expected " + std::to_string(req.texts.size()) + " scores, got " +
                                  std::to_string(resp.scores.size()));
  }
  for (double s : resp.scores) {
    if (std::isnan(s)) throw ScorerError(req.id, "NaN score");
  }
  if (kind == RequestKind::kScoreEos) {
    if (resp.puncts.size() != req.texts.size()) {
      throw ScorerError(req.id, "missing punctuation in score_eos response");
    }
    for (const auto& p : resp.puncts) {
      if (!is_end_punct(p)) throw ScorerError(req.id, "invalid punctuation '" + p + "'");
    }
  }
  return resp;
}

template <typename Fn>
void for_each_batch(const std::vector<std::string>& unique, std::size_t chunk_size, Fn&& fn) {
  if (chunk_size == 0) throw std::invalid_argument("chunk_size must be positive");
  for (std::size_t begin = 0; begin < unique.size(); begin += chunk_size) {
    std::size_t end = std::min(unique.size(), begin + chunk_size);
    fn(begin, std::vector<std::string>(unique.begin() + static_cast<std::ptrdiff_t>(begin),
                                       unique.begin() + static_cast<std::ptrdiff_t>(end)));
  }
}

}  // namespace

std::string encode_request(const ScoreRequest& r) {
  json j = {{"id", r.id}, {"kind", kind_name(r.kind)}, {"texts", r.texts}};
  return j.dump();
}

ScoreRequest decode_request(std::string_view line) {
  try {
    json j = json::parse(line);
    ScoreRequest r;
    r.id = j.at("id").get<std::uint64_t>();
    auto kind = j.at("kind").get<std::string>();
    if (kind == "score") {
      r.kind = RequestKind::kScore;
    } else if (kind == "score_eos") {
      r.kind = RequestKind::kScoreEos;
    } else {
      throw FormatError("unknown request kind '" + kind + "'");
    }
    r.texts = j.at("texts").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed request: ") + e.what());
  }
}

std::string encode_response(const ScoreResponse& r) {
  json j = {{"id", r.id}};
  if (r.error) {
    j["error"] = *r.error;
    return j.dump();
  }
  j["scores"] = r.scores;
  if (!r.puncts.empty()) j["puncts"] = r.puncts;
  return j.dump();
}

ScoreResponse decode_response(std::string_view line) {
  try {
    json j = json::parse(line);
    ScoreResponse r;
    r.id = j.at("id").get<std::uint64_t>();
    if (j.contains("error")) {
      r.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
      return r;
    }
    for (const auto& s : j.at("scores")) {
      // JSON has no -inf; a peer may send null for an impossible text.
      r.scores.push_back(s.is_null() ? kNegInf : s.get<double>());
    }
    if (j.contains("puncts")) r.puncts = j["puncts"].get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed response: ") + e.what());
  }
}

std::vector<double> score_texts(Scorer& scorer, std::span<const std::string> texts,
                                std::size_t chunk_size) {
  Dedup d = dedup(texts);
  std::vector<double> unique_scores(d.unique.size());
  for_each_batch(d.unique, chunk_size, [&](std::size_t offset, std::vector<std::string> batch) {
    ScoreResponse resp = checked_evaluate(scorer, RequestKind::kScore, std::move(batch));
    std::copy(resp.scores.begin(), resp.scores.end(),
              unique_scores.begin() + static_cast<std::ptrdiff_t>(offset));
  });
  std::vector<double> out;
  out.reserve(texts.size());
  for (std::size_t slot : d.slot) out.push_back(unique_scores[slot]);
  return out;
}

std::vector<EosScore> score_eos(Scorer& scorer, std::span<const std::string> texts,
                                std::size_t chunk_size) {
  Dedup d = dedup(texts);
  std::vector<EosScore> unique_scores(d.unique.size());
  for_each_batch(d.unique, chunk_size, [&](std::size_t offset, std::vector<std::string> batch) {
    ScoreResponse resp = checked_evaluate(scorer, RequestKind::kScoreEos, std::move(batch));
    for (std::size_t i = 0; i < resp.scores.size(); ++i) {
      unique_scores[offset + i] = {resp.puncts[i], resp.scores[i]};
    }
  });
  std::vector<EosScore> out;
  out.reserve(texts.size());
  for (std::size_t slot : d.slot) out.push_back(unique_scores[slot]);
  return out;
}

StubScorer::StubScorer(std::map<std::string, double> table) : table_(std::move(table)) {}

StubScorer::StubScorer(const NGramModel& model) : model_(&model) {}

StubScorer::StubScorer(TextFn score_fn) : fn_(std::move(score_fn)) {}

std::unique_ptr<StubScorer> StubScorer::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    json j = json::parse(in);
    return std::make_unique<StubScorer>(j.get<std::map<std::string, double>>());
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

double StubScorer::score_variant(const std::string& text, std::string_view punct) const {
  if (fn_) return fn_(text + std::string(punct));
  if (model_) {
    std::vector<std::string> words = split_words(text);
    bool eos = !punct.empty();
    if (eos && model_->word_id(punct) && model_->listed(*model_->word_id(punct))) {
      words.emplace_back(punct);
    }
    return score_sequence(*model_, words, eos);
  }
  std::string key = text + std::string(punct);
  auto it = table_.find(key);
  if (it != table_.end()) return it->second;
  return 0.0 - static_cast<double>(split_words(key).size());
}

double StubScorer::score_text(const std::string& text) const { return score_variant(text, ""); }

EosScore StubScorer::score_text_eos(const std::string& text) const {
  EosScore best{std::string(kEndPunctuation[0]), score_variant(text, kEndPunctuation[0])};
  for (std::size_t i = 1; i < kEndPunctuation.size(); ++i) {
    double s = score_variant(text, kEndPunctuation[i]);
    if (s > best.score) best = {std::string(kEndPunctuation[i]), s};
  }
  return best;
}

ScoreResponse StubScorer::evaluate(const ScoreRequest& request) {
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  batches_evaluated_.fetch_add(1);
  texts_evaluated_.fetch_add(request.texts.size());
  ScoreResponse resp;
  resp.id = request.id;
  resp.scores.reserve(request.texts.size());
  for (const auto& t : request.texts) {
    if (request.kind == RequestKind::kScore) {
      resp.scores.push_back(score_text(t));
    } else {
      EosScore e = score_text_eos(t);
      resp.scores.push_back(e.score);
      resp.puncts.push_back(e.punct);
    }
  }
  return resp;
}

std::chrono::milliseconds scorer_timeout_from_env() {
  const char* env = std::getenv("LIGHTBEAM_SCORER_TIMEOUT_S");
  if (env && *env) {
    char* end = nullptr;
    double seconds = std::strtod(env, &end);
    if (end != env && seconds > 0.0 && std::isfinite(seconds)) {
      return std::chrono::milliseconds(static_cast<std::int64_t>(seconds * 1000.0));
    }
  }
  return std::chrono::seconds(60);
}

}  // namespace lightbeam
