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

#include "lightbeam/oracle.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace lightbeam {

std::vector<TokenId> collapse_ctc(std::span<const TokenId> path, TokenId blank_id) {
  std::vector<TokenId> out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i > 0 && path[i] == path[i - 1]) continue;
    if (path[i] != blank_id) out.push_back(path[i]);
  }
  return out;
}

std::vector<TokenId> collapse_emissions(std::span<const TokenId> path, TokenId blank_id) {
  std::vector<TokenId> out;
  for (TokenId t : path) {
    if (t == blank_id) continue;
    if (!out.empty() && out.back() == t) continue;
    out.push_back(t);
  }
  return out;
}

namespace {

struct Spelling {
  double total = 0.0;
  LmStateId state = 0;
  std::vector<std::string> words;
  std::string punct;
};

struct Hyp {
  std::vector<TokenId> labels;
  double score = 0.0;
  std::vector<Spelling> spellings;
};

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

class Reference {
 public:
  Reference(const DecodeConfig& config, const Lexicon& lexicon, const Vocabulary& vocab,
            const NGramModel& ngram, const StubScorer* scorer)
      : cfg_(config),
        lexicon_(lexicon),
        blank_(vocab.blank_id()),
        space_(vocab.space_id()),
        session_(ngram, false),
        scorer_(scorer) {
    for (const auto& e : lexicon.entries) {
      std::string s = e.surface;
      for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      surfaces_.push_back(s);
    }
  }

  Hyp start() {
    Hyp h;
    h.spellings.push_back({0.0, session_.bos_state(), {}, ""});
    return h;
  }

  // Extends `h` by one frame emitting `v`. False when the extension leaves
  // the lexicon or every spelling goes out of vocabulary.
  bool extend(const Hyp& h, TokenId v, double logp, Hyp& out) {
    TokenId last = h.labels.empty() ? blank_ : h.labels.back();
    out = h;
    out.score += logp;
    if (v == blank_ || v == last) return true;
    std::vector<TokenId> word = current_word(h.labels);
    if (v == space_) {
      std::vector<std::size_t> done = completing(word);
      if (done.empty()) return false;
      out.score += cfg_.word_boundary_bonus;
      out.labels.push_back(v);
      return fuse(out, done);
    }
    word.push_back(v);
    if (!is_prefix(word)) return false;
    out.score += cfg_.token_insertion_bonus;
    out.labels.push_back(v);
    return true;
  }

  // Implicit boundary for a hypothesis ending mid-word.
  bool close(Hyp& h) {
    std::vector<TokenId> word = current_word(h.labels);
    if (word.empty()) return true;
    std::vector<std::size_t> done = completing(word);
    if (done.empty() || !fuse(h, done)) return false;
    h.labels.push_back(space_);
    return true;
  }

  void rescore(std::vector<Hyp>& hyps, bool final) {
    if (!scorer_) return;
    std::vector<Hyp> kept;
    for (Hyp& h : hyps) {
      double old_best = h.spellings[0].total;
      for (Spelling& s : h.spellings) {
        if (s.words.empty()) {
          s.total = 0.0;
        } else if (final) {
          EosScore e = scorer_->score_text_eos(join(s.words));
          s.total = cfg_.llm_weight * e.score;
          s.punct = e.punct;
        } else {
          s.total = cfg_.llm_weight * scorer_->score_text(join(s.words));
        }
      }
      std::stable_sort(h.spellings.begin(), h.spellings.end(),
                       [](const Spelling& a, const Spelling& b) { return a.total > b.total; });
      h.score += h.spellings[0].total - old_best;
      if (!is_dead(h.score)) kept.push_back(std::move(h));
    }
    hyps = std::move(kept);
  }

  static std::string text(const Hyp& h) {
    return join(h.spellings[0].words) + h.spellings[0].punct;
  }

 private:
  std::vector<TokenId> current_word(const std::vector<TokenId>& labels) const {
    std::vector<TokenId> word;
    for (TokenId t : labels) {
      if (t == space_) {
        word.clear();
      } else {
        word.push_back(t);
      }
    }
    return word;
  }

  bool is_prefix(const std::vector<TokenId>& word) const {
    for (const auto& e : lexicon_.entries) {
      if (e.phonemes.size() >= word.size() &&
          std::equal(word.begin(), word.end(), e.phonemes.begin())) {
        return true;
      }
    }
    return false;
  }

  std::vector<std::size_t> completing(const std::vector<TokenId>& word) const {
    std::vector<std::size_t> out;
    if (word.empty()) return out;
    for (std::size_t i = 0; i < lexicon_.entries.size(); ++i) {
      if (lexicon_.entries[i].phonemes == word) out.push_back(i);
    }
    return out;
  }

  bool fuse(Hyp& h, const std::vector<std::size_t>& entries) {
    std::vector<Spelling> cands;
    for (const Spelling& s : h.spellings) {
      for (std::size_t e : entries) {
        const std::string& w = surfaces_[e];
        WordScore ws = session_.score_word(s.state, w);
        if (is_dead(ws.log_prob)) continue;
        Spelling c{s.total + cfg_.ngram_weight * ws.log_prob, ws.next_state, s.words, ""};
        c.words.push_back(w);
        auto same = std::find_if(cands.begin(), cands.end(),
                                 [&](const Spelling& x) { return x.words == c.words; });
        if (same == cands.end()) {
          cands.push_back(std::move(c));
        } else if (c.total > same->total) {
          *same = std::move(c);
        }
      }
    }
    if (cands.empty()) return false;
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Spelling& a, const Spelling& b) { return a.total > b.total; });
    if (cands.size() > static_cast<std::size_t>(cfg_.ortho_beams)) {
      cands.resize(static_cast<std::size_t>(cfg_.ortho_beams));
    }
    double floor = cands[0].total - cfg_.homophone_prune_threshold;
    while (cands.back().total < floor) cands.pop_back();
    h.score += cands[0].total - h.spellings[0].total;
    h.spellings = std::move(cands);
    return true;
  }

  const DecodeConfig& cfg_;
  const Lexicon& lexicon_;
  TokenId blank_;
  TokenId space_;
  NGramSession session_;
  const StubScorer* scorer_;
  std::vector<std::string> surfaces_;
};

// Keeps, per label sequence, the first hypothesis with the highest score.
std::vector<Hyp> merge(std::vector<Hyp> hyps) {
  std::vector<Hyp> out;
  std::map<std::vector<TokenId>, std::size_t> where;
  for (Hyp& h : hyps) {
    auto it = where.find(h.labels);
    if (it == where.end()) {
      where.emplace(h.labels, out.size());
      out.push_back(std::move(h));
    } else if (h.score > out[it->second].score) {
      out[it->second] = std::move(h);
    }
  }
  return out;
}

void check_size(const LogProbMatrix& D, const Vocabulary& vocab) {
  if (D.num_frames() == 0) throw ShapeError("empty log-probability matrix");
  if (D.num_tokens() != vocab.size()) throw ShapeError("matrix width differs from vocabulary");
  double paths = std::pow(static_cast<double>(D.num_tokens()), static_cast<double>(D.num_frames()));
  if (paths > 1e7) {
    throw SizeError("instance has " + std::to_string(paths) + " paths, limit is 1e7");
  }
}

OracleResult best_of(const std::vector<Hyp>& hyps, std::size_t peak) {
  OracleResult r;
  r.hypotheses = peak;
  for (const Hyp& h : hyps) {
    if (h.score > r.score) {
      r.score = h.score;
      r.text = Reference::text(h);
    }
  }
  if (is_dead(r.score)) throw EmptyBeamError("no complete hypothesis");
  return r;
}

}  // namespace

OracleResult exhaustive_decode(const LogProbMatrix& D, const DecodeConfig& config,
                               const Lexicon& lexicon, const Vocabulary& vocab,
                               const NGramModel& ngram, const StubScorer* scorer) {
  check_size(D, vocab);
  Reference ref(config, lexicon, vocab, ngram, scorer);
  std::vector<Hyp> hyps{ref.start()};
  std::size_t peak = 1;
  const auto r = static_cast<std::size_t>(config.llm_rescore_interval);
  for (std::size_t t = 0; t < D.num_frames(); ++t) {
    std::vector<Hyp> next;
    for (const Hyp& h : hyps) {
      for (TokenId v = 0; v < D.num_tokens(); ++v) {
        Hyp n;
        if (ref.extend(h, v, D.frames(t, v), n)) next.push_back(std::move(n));
      }
    }
    hyps = merge(std::move(next));
    peak = std::max(peak, hyps.size());
    if (t > 0 && t % r == 0) ref.rescore(hyps, false);
  }
  std::vector<Hyp> closed;
  for (Hyp& h : hyps) {
    if (ref.close(h)) closed.push_back(std::move(h));
  }
  hyps = merge(std::move(closed));
  ref.rescore(hyps, true);
  return best_of(hyps, peak);
}

OracleResult enumerate_paths_decode(const LogProbMatrix& D, const DecodeConfig& config,
                                    const Lexicon& lexicon, const Vocabulary& vocab,
                                    const NGramModel& ngram, const StubScorer* scorer) {
  check_size(D, vocab);
  Reference ref(config, lexicon, vocab, ngram, scorer);
  const std::size_t T = D.num_frames();
  const std::size_t V = D.num_tokens();
  std::vector<TokenId> path(T, 0);
  std::vector<Hyp> finals;
  for (;;) {
    Hyp h = ref.start();
    bool alive = true;
    for (std::size_t t = 0; t < T && alive; ++t) {
      Hyp n;
      alive = ref.extend(h, path[t], D.frames(t, path[t]), n);
      h = std::move(n);
    }
    if (alive && ref.close(h)) finals.push_back(std::move(h));
    // Next path in lexicographic order, frame 0 most significant.
    std::size_t t = T;
    while (t > 0 && ++path[t - 1] == V) path[--t] = 0;
    if (t == 0) break;
  }
  std::vector<Hyp> one;
  OracleResult best;
  for (Hyp& h : finals) {
    one.assign(1, std::move(h));
    ref.rescore(one, true);
    if (!one.empty() && one[0].score > best.score) {
      best.score = one[0].score;
      best.text = Reference::text(one[0]);
    }
  }
  best.hypotheses = finals.size();
  if (is_dead(best.score)) throw EmptyBeamError("no complete hypothesis");
  return best;
}

std::string build_toy_arpa(const std::vector<ToyNGram>& spec) {
  if (spec.empty()) throw ValueError("toy ARPA spec is empty");
  std::size_t order = 0;
  std::set<std::vector<std::string>> present;
  for (const auto& g : spec) {
    if (g.words.empty()) throw ValueError("toy ARPA n-gram with no words");
    if (!present.insert(g.words).second) {
      throw ValueError("duplicate n-gram '" + join(g.words) + "'");
    }
    order = std::max(order, g.words.size());
  }
  for (const auto& g : spec) {
    for (const auto& w : g.words) {
      if (!present.count({w})) throw ValueError("word '" + w + "' has no unigram");
    }
    if (g.words.size() > 1) {
      std::vector<std::string> history(g.words.begin(), g.words.end() - 1);
      if (!present.count(history)) {
        throw ValueError("history of '" + join(g.words) + "' is not listed");
      }
    }
  }
  auto num = [](double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
  };
  std::string out = "\n\\data\\\n";
  for (std::size_t n = 1; n <= order; ++n) {
    std::size_t count = std::count_if(spec.begin(), spec.end(),
                                      [n](const ToyNGram& g) { return g.words.size() == n; });
    out += "ngram " + std::to_string(n) + "=" + std::to_string(count) + "\n";
  }
  for (std::size_t n = 1; n <= order; ++n) {
    out += "\n\\" + std::to_string(n) + "-grams:\n";
    for (const auto& g : spec) {
      if (g.words.size() != n) continue;
      out += num(g.log10_prob) + "\t" + join(g.words);
      if (g.backoff) out += "\t" + num(*g.backoff);
      out += "\n";
    }
  }
  out += "\n\\end\\\n";
  return out;
}

}  // namespace lightbeam
