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

#include "lightbeam/decoder.h"

#include <algorithm>
#include <cctype>
#include <chrono>

namespace lightbeam {

namespace {

// Per-lane seed and multiplier. Tokens enter as id + 1 so that id 0 still
// changes the hash.
constexpr std::uint64_t kSeedA = 0x243F6A8885A308D3ull;
constexpr std::uint64_t kSeedB = 0x13198A2E03707344ull;
constexpr std::uint64_t kMulA = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kMulB = 0xC2B2AE3D27D4EB4Full;

std::string lowercase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

struct Candidate {
  double score;
  std::uint32_t parent;
  TokenId token;
};

bool ranks_before(const Candidate& x, const Candidate& y) {
  if (x.score != y.score) return x.score > y.score;
  if (x.parent != y.parent) return x.parent < y.parent;
  return x.token < y.token;
}

bool entry_before(const OrthoEntry& x, const OrthoEntry& y) { return x.lm_total > y.lm_total; }

template <typename T>
void select(std::vector<T>& v, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(std::move(v[i]));
  v = std::move(out);
}

}  // namespace

Hash128 empty_hash() { return {kSeedA, kSeedB}; }

Hash128 extend_hash(Hash128 h, TokenId token) {
  std::uint64_t x = static_cast<std::uint64_t>(token) + 1;
  return {h.a * kMulA + x, h.b * kMulB + x};
}

Hash128 hash_labels(std::span<const TokenId> labels) {
  Hash128 h = empty_hash();
  for (TokenId t : labels) h = extend_hash(h, t);
  return h;
}

std::size_t WordHistory::KeyHash::operator()(
    const std::pair<NodeId, std::string>& k) const noexcept {
  return std::hash<std::string>()(k.second) ^ (static_cast<std::size_t>(k.first) * kMulA);
}

WordHistory::WordHistory() { nodes_.push_back({kEmpty, ""}); }

WordHistory::NodeId WordHistory::append(NodeId parent, const std::string& word) {
  if (parent >= nodes_.size()) throw std::out_of_range("unknown history node");
  auto [it, inserted] = index_.emplace(std::make_pair(parent, word),
                                       static_cast<NodeId>(nodes_.size()));
  if (inserted) nodes_.push_back({parent, word});
  return it->second;
}

std::vector<std::string> WordHistory::words(NodeId node) const {
  std::vector<std::string> out;
  while (node != kEmpty) {
    out.push_back(nodes_.at(node).word);
    node = nodes_[node].parent;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string WordHistory::text(NodeId node) const {
  std::string out;
  for (const auto& w : words(node)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

void BeamSet::reset(std::size_t max_frames, std::size_t beam_size) {
  beam_size_ = beam_size;
  max_frames_ = max_frames;
  frames_ = 0;
  labels_.assign(max_frames * beam_size, 0);
  parents_.assign(max_frames * beam_size, 0);
  scores.clear();
  last_tokens.clear();
  hashes.clear();
  prefix_states.clear();
  ortho.clear();
}

std::vector<TokenId> BeamSet::path(std::size_t j) const {
  std::vector<TokenId> out(frames_);
  for (std::size_t t = frames_; t-- > 0;) {
    out[t] = label(t, j);
    j = parent(t, j);
  }
  return out;
}

Decoder::Decoder(const DecodeConfig& config, const TransitionTable& table,
                 const Vocabulary& vocab, const NGramModel& ngram, Scorer* scorer,
                 DecodeOptions options)
    : config_(config),
      table_(&table),
      blank_(vocab.blank_id()),
      space_(vocab.space_id()),
      scorer_(scorer),
      options_(options),
      ngram_(ngram, options.use_transition_cache) {
  config_.validate();
  if (table.num_tokens() != vocab.size()) {
    throw ShapeError("transition table has " + std::to_string(table.num_tokens()) +
                     " columns but the vocabulary has " + std::to_string(vocab.size()) +
                     " tokens");
  }
  surfaces_.reserve(table.num_entries());
  for (EntryId e = 0; e < table.num_entries(); ++e) {
    surfaces_.push_back(lowercase(table.entry_surface(e)));
  }
}

void Decoder::init_beams(std::size_t max_frames) {
  history_ = WordHistory();
  beams_.reset(max_frames, static_cast<std::size_t>(config_.beam_size));
  beams_.scores.push_back(0.0);
  beams_.last_tokens.push_back(blank_);
  beams_.hashes.push_back(empty_hash());
  beams_.prefix_states.push_back(table_->root());
  beams_.ortho.push_back({OrthoEntry{0.0, ngram_.bos_state(), WordHistory::kEmpty, '\0'}});
  t_ = 0;
  llm_events_ = 0;
}

void Decoder::keep(std::span<const std::size_t> idx) {
  select(beams_.scores, idx);
  select(beams_.last_tokens, idx);
  select(beams_.hashes, idx);
  select(beams_.prefix_states, idx);
  select(beams_.ortho, idx);
  if (beams_.frames_ == 0) return;
  // The newest row is indexed like the active beams; keep it in step.
  std::size_t t = beams_.frames_ - 1;
  std::vector<TokenId> labels;
  std::vector<std::uint32_t> parents;
  for (std::size_t i : idx) {
    labels.push_back(beams_.label(t, i));
    parents.push_back(beams_.parent(t, i));
  }
  for (std::size_t n = 0; n < idx.size(); ++n) {
    beams_.labels_[t * beams_.beam_size_ + n] = labels[n];
    beams_.parents_[t * beams_.beam_size_ + n] = parents[n];
  }
}

void Decoder::drop_dead() {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < beams_.size(); ++j) {
    if (!is_dead(beams_.scores[j])) idx.push_back(j);
  }
  if (idx.size() != beams_.size()) keep(idx);
}

void Decoder::recombine(std::size_t t) {
  if (options_.observer) options_.observer->before_recombine(t, beams_.hashes, beams_.scores);
  // Each group sits where its hash first appeared and holds its best member.
  std::unordered_map<Hash128, std::size_t, Hash128Hasher> group;
  std::vector<std::size_t> winner;
  for (std::size_t j = 0; j < beams_.size(); ++j) {
    auto [it, inserted] = group.emplace(beams_.hashes[j], winner.size());
    if (inserted) {
      winner.push_back(j);
    } else if (beams_.scores[j] > beams_.scores[winner[it->second]]) {
      winner[it->second] = j;
    }
  }
  if (winner.size() != beams_.size()) keep(winner);
}

void Decoder::step(std::span<const double> row) {
  if (t_ >= beams_.max_frames_) throw std::logic_error("step past the last frame");
  const std::size_t V = table_->num_tokens();
  if (row.size() != V) {
    throw ShapeError("frame has " + std::to_string(row.size()) + " columns, expected " +
                     std::to_string(V));
  }
  const std::size_t K = beams_.size();
  const double beta = config_.token_insertion_bonus;
  const double gamma = config_.word_boundary_bonus;

  std::vector<bool> mask = table_->valid_mask(beams_.prefix_states, beams_.last_tokens, blank_);
  std::vector<Candidate> cands;
  cands.reserve(K * V);
  for (std::size_t i = 0; i < K; ++i) {
    const TokenId last = beams_.last_tokens[i];
    for (TokenId v = 0; v < V; ++v) {
      double s = beams_.scores[i] + row[v];
      if (v != blank_ && v != last) s += (v == space_) ? gamma : beta;
      if (!mask[i * V + v] || is_dead(s)) continue;
      cands.push_back({s, static_cast<std::uint32_t>(i), v});
    }
  }
  if (cands.empty()) {
    throw EmptyBeamError("every candidate was pruned at frame " + std::to_string(t_));
  }

  const std::size_t k = beams_.beam_size_;
  if (cands.size() > k) {
    std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end(),
                     ranks_before);
    cands.resize(k);
  }
  std::sort(cands.begin(), cands.end(), ranks_before);
  const double cutoff = cands.front().score - config_.beam_prune_threshold;
  while (cands.back().score < cutoff) cands.pop_back();

  // Materialize into fresh per-beam arrays; the parents' data stays intact
  // until every child has been built.
  const std::size_t t = t_;
  const std::size_t n = cands.size();
  std::vector<double> scores(n);
  std::vector<TokenId> last_tokens(n);
  std::vector<Hash128> hashes(n);
  std::vector<StateId> states(n);
  std::vector<std::vector<OrthoEntry>> ortho(n);
  std::vector<StateId> boundary_from;  // pre-advance state of each new space
  std::vector<std::size_t> boundary_beams;
  for (std::size_t j = 0; j < n; ++j) {
    const Candidate& c = cands[j];
    const std::size_t i = c.parent;
    const TokenId v = c.token;
    scores[j] = c.score;
    ortho[j] = beams_.ortho[i];
    beams_.labels_[t * k + j] = v;
    beams_.parents_[t * k + j] = c.parent;
    if (v != blank_ && v != beams_.last_tokens[i]) {
      hashes[j] = extend_hash(beams_.hashes[i], v);
      states[j] = table_->advance_unchecked(beams_.prefix_states[i], v);
      if (v == space_) {
        boundary_beams.push_back(j);
        boundary_from.push_back(beams_.prefix_states[i]);
      }
    } else {
      hashes[j] = beams_.hashes[i];
      states[j] = beams_.prefix_states[i];
    }
    last_tokens[j] = (v == blank_) ? beams_.last_tokens[i] : v;
  }
  beams_.scores = std::move(scores);
  beams_.last_tokens = std::move(last_tokens);
  beams_.hashes = std::move(hashes);
  beams_.prefix_states = std::move(states);
  beams_.ortho = std::move(ortho);
  beams_.frames_ = t + 1;

  for (std::size_t b = 0; b < boundary_beams.size(); ++b) {
    apply_ngram(boundary_beams[b], table_->completions(boundary_from[b]));
  }
  drop_dead();
  recombine(t);
  if (beams_.size() == 0) {
    throw EmptyBeamError("every beam left the lexicon at frame " + std::to_string(t));
  }
  ++t_;
  if (options_.observer) options_.observer->after_step(t, beams_);

  const auto r = static_cast<std::size_t>(config_.llm_rescore_interval);
  if (scorer_ && options_.intermediate_fusion && t > 0 && t % r == 0) {
    apply_llm(false);
    ++llm_events_;
  }
}

bool Decoder::apply_ngram(std::size_t j, std::span<const EntryId> completions) {
  auto& entries = beams_.ortho.at(j);
  const double old_best = entries.front().lm_total;
  const double omega = config_.ngram_weight;

  std::vector<OrthoEntry> next;
  std::unordered_map<WordHistory::NodeId, std::size_t> seen;
  for (const OrthoEntry& e : entries) {
    for (EntryId c : completions) {
      const std::string& word = surfaces_.at(c);
      WordScore ws = ngram_.score_word(e.lm_state, word);
      if (is_dead(ws.log_prob)) continue;
      OrthoEntry cand{e.lm_total + omega * ws.log_prob, ws.next_state,
                      history_.append(e.history, word), '\0'};
      // Spelling variants of one word land on the same history node.
      auto [it, inserted] = seen.emplace(cand.history, next.size());
      if (inserted) {
        next.push_back(cand);
      } else if (cand.lm_total > next[it->second].lm_total) {
        next[it->second] = cand;
      }
    }
  }
  if (next.empty()) {
    entries.clear();
    beams_.scores[j] = kNegInf;
    return false;
  }
  std::stable_sort(next.begin(), next.end(), entry_before);
  if (next.size() > static_cast<std::size_t>(config_.ortho_beams)) {
    next.resize(static_cast<std::size_t>(config_.ortho_beams));
  }
  const double cutoff = next.front().lm_total - config_.homophone_prune_threshold;
  while (next.back().lm_total < cutoff) next.pop_back();
  beams_.scores[j] += next.front().lm_total - old_best;
  entries = std::move(next);
  return true;
}

void Decoder::apply_llm(bool final) {
  if (!scorer_) return;
  std::vector<std::string> texts;
  for (const auto& entries : beams_.ortho) {
    for (const auto& e : entries) {
      if (e.history != WordHistory::kEmpty) texts.push_back(history_.text(e.history));
    }
  }
  const auto chunk = static_cast<std::size_t>(config_.llm_chunk_size);
  std::vector<double> llm(texts.size());
  std::vector<std::string> puncts;
  if (final) {
    auto eos = score_eos(*scorer_, texts, chunk);
    for (std::size_t n = 0; n < eos.size(); ++n) {
      llm[n] = eos[n].score;
      puncts.push_back(eos[n].punct);
    }
  } else if (!texts.empty()) {
    llm = score_texts(*scorer_, texts, chunk);
  }

  const std::vector<double> before = beams_.scores;
  const double phi = config_.llm_weight;
  std::size_t n = 0;
  for (std::size_t j = 0; j < beams_.size(); ++j) {
    auto& entries = beams_.ortho[j];
    const double old_best = entries.front().lm_total;
    for (auto& e : entries) {
      if (e.history == WordHistory::kEmpty) {
        e.lm_total = 0.0;
        continue;
      }
      e.lm_total = phi * llm[n];
      if (final) e.punct = puncts[n].front();
      ++n;
    }
    std::stable_sort(entries.begin(), entries.end(), entry_before);
    beams_.scores[j] += entries.front().lm_total - old_best;
  }
  if (options_.observer) options_.observer->after_llm(t_, final, before, beams_.scores);
  drop_dead();
  if (beams_.size() == 0) throw EmptyBeamError("rescoring left no live beam");
}

void Decoder::finish() {
  // Mid-word beams end with an implicit boundary when a word completes
  // there and are dropped otherwise.
  for (std::size_t j = 0; j < beams_.size(); ++j) {
    const StateId s = beams_.prefix_states[j];
    if (s == table_->root()) continue;
    auto completions = table_->completions(s);
    if (completions.empty() || !apply_ngram(j, completions)) {
      beams_.scores[j] = kNegInf;
      continue;
    }
    beams_.hashes[j] = extend_hash(beams_.hashes[j], space_);
    beams_.prefix_states[j] = table_->root();
    beams_.last_tokens[j] = space_;
  }
  drop_dead();
  recombine(t_);
  if (beams_.size() == 0) {
    throw EmptyBeamError("no hypothesis ends on a complete word");
  }
  if (options_.observer) options_.observer->after_closure(beams_);
  apply_llm(true);
}

std::string Decoder::entry_text(const OrthoEntry& e) const {
  std::string text = history_.text(e.history);
  if (e.punct != '\0') text += e.punct;
  return text;
}

DecodeResult Decoder::result() const {
  if (beams_.size() == 0) throw EmptyBeamError("no active beam");
  std::size_t best = 0;
  for (std::size_t j = 1; j < beams_.size(); ++j) {
    if (beams_.scores[j] > beams_.scores[best]) best = j;
  }
  DecodeResult r;
  r.text = entry_text(beams_.ortho[best].front());
  r.score = beams_.scores[best];
  r.frame_count = beams_.frames();
  r.llm_events = llm_events_;

  // Every ortho entry as a sentence: its beam's score with the best entry's
  // total swapped for its own. The best beam goes first so rank 1 is r.text.
  std::vector<std::size_t> order{best};
  for (std::size_t j = 0; j < beams_.size(); ++j) {
    if (j != best) order.push_back(j);
  }
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t j : order) {
    const auto& entries = beams_.ortho[j];
    for (const auto& e : entries) {
      double score = &e == &entries.front()
                         ? beams_.scores[j]
                         : beams_.scores[j] - entries.front().lm_total + e.lm_total;
      std::string text = entry_text(e);
      auto [it, inserted] = seen.emplace(text, r.nbest.size());
      if (inserted) {
        r.nbest.push_back({std::move(text), score});
      } else if (score > r.nbest[it->second].score) {
        r.nbest[it->second].score = score;
      }
    }
  }
  std::stable_sort(r.nbest.begin(), r.nbest.end(),
                   [](const Hypothesis& x, const Hypothesis& y) { return x.score > y.score; });
  return r;
}

DecodeResult decode(const LogProbMatrix& D, const DecodeConfig& config,
                    const TransitionTable& table, const Vocabulary& vocab,
                    const NGramModel& ngram, Scorer* scorer, DecodeOptions options) {
  if (D.num_frames() == 0) throw ShapeError("empty log-probability matrix");
  if (D.num_tokens() != vocab.size()) {
    throw ShapeError("matrix has " + std::to_string(D.num_tokens()) +
                     " columns but the vocabulary has " + std::to_string(vocab.size()));
  }
  auto start = std::chrono::steady_clock::now();
  Decoder decoder(config, table, vocab, ngram, scorer, options);
  decoder.init_beams(D.num_frames());
  for (std::size_t t = 0; t < D.num_frames(); ++t) decoder.step(D.frames.row(t));
  decoder.finish();
  DecodeResult r = decoder.result();
  r.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace lightbeam
