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

#include "support.h"

#include <cstdio>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

namespace lightbeam::testing {

fs::path make_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  fs::path dir = fs::temp_directory_path() /
                 ("lightbeam_" + tag + "_" + std::to_string(getpid()) + "_" +
                  std::to_string(counter.fetch_add(1)));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Vocabulary make_vocab(const std::vector<std::string>& phonemes) {
  std::vector<std::string> tokens{std::string(kBlankToken)};
  tokens.insert(tokens.end(), phonemes.begin(), phonemes.end());
  tokens.emplace_back(kSpaceToken);
  return Vocabulary(tokens);
}

std::vector<std::string> phoneme_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("P" + std::to_string(i));
  return out;
}

LogProbMatrix one_hot(const std::vector<TokenId>& path, std::size_t num_tokens, double peak) {
  RawLogits raw;
  raw.frames = Matrix<float>(path.size(), num_tokens, 0.0f);
  for (std::size_t t = 0; t < path.size(); ++t) raw.frames(t, path[t]) = static_cast<float>(peak);
  return scale_log_softmax(raw, 1.0);
}

LogProbMatrix random_logprobs(std::mt19937_64& rng, std::size_t frames, std::size_t num_tokens,
                              double spread, double acoustic_scale) {
  std::normal_distribution<float> noise(0.0f, static_cast<float>(spread));
  RawLogits raw;
  raw.frames = Matrix<float>(frames, num_tokens);
  for (auto& x : raw.frames.data()) x = noise(rng);
  return scale_log_softmax(raw, acoustic_scale);
}

std::vector<TokenId> random_pronunciation(std::mt19937_64& rng, const Vocabulary& vocab,
                                          std::size_t min_len, std::size_t max_len) {
  std::vector<TokenId> phonemes;
  for (TokenId t = 0; t < vocab.size(); ++t) {
    if (vocab.is_phoneme(t)) phonemes.push_back(t);
  }
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, phonemes.size() - 1);
  std::vector<TokenId> out;
  std::size_t n = len(rng);
  while (out.size() < n) {
    TokenId p = phonemes[pick(rng)];
    if (!out.empty() && out.back() == p) continue;
    out.push_back(p);
  }
  return out;
}

std::string random_arpa(std::mt19937_64& rng, const std::vector<std::string>& words, int order,
                        bool with_unk, double ngram_density) {
  std::uniform_real_distribution<double> uni(-2.0, -0.3);
  std::uniform_real_distribution<double> cond(-1.5, -0.05);
  std::uniform_real_distribution<double> bow(-0.8, 0.0);
  std::bernoulli_distribution keep(ngram_density);
  auto maybe_bow = [&](int n) -> std::optional<double> {
    if (n < order) return bow(rng);
    return std::nullopt;
  };

  std::vector<ToyNGram> spec;
  spec.push_back({{"<s>"}, -99.0, maybe_bow(1)});
  spec.push_back({{"</s>"}, uni(rng), std::nullopt});
  if (with_unk) spec.push_back({{"<unk>"}, uni(rng), std::nullopt});
  for (const auto& w : words) spec.push_back({{w}, uni(rng), maybe_bow(1)});

  std::vector<std::string> histories{"<s>"};
  histories.insert(histories.end(), words.begin(), words.end());
  std::vector<std::string> targets = words;
  targets.emplace_back("</s>");

  std::vector<std::vector<std::string>> prev;
  for (const auto& h : histories) prev.push_back({h});
  for (int n = 2; n <= order; ++n) {
    std::vector<std::vector<std::string>> cur;
    for (const auto& h : prev) {
      if (h.back() == "</s>") continue;
      for (const auto& w : targets) {
        if (!keep(rng)) continue;
        auto g = h;
        g.push_back(w);
        spec.push_back({g, cond(rng), w == "</s>" ? std::nullopt : maybe_bow(n)});
        cur.push_back(g);
      }
    }
    prev = std::move(cur);
    if (prev.empty()) break;
  }
  return build_toy_arpa(spec);
}

std::vector<std::string> surface_words(const Lexicon& lexicon) {
  std::vector<std::string> out;
  for (const auto& e : lexicon.entries) {
    std::string s = e.surface;
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

namespace {

std::string pron_text(const Vocabulary& vocab, const std::vector<TokenId>& p) {
  std::string s;
  for (TokenId t : p) s += " " + vocab.token(t);
  return s;
}

}  // namespace

TinyInstance random_tiny_instance(std::mt19937_64& rng, std::size_t max_frames) {
  static const std::vector<std::pair<std::string, std::string>> pairs = {
      {"ant", "aunt"}, {"sea", "see"}, {"pair", "pear"}, {"won", "one"}};
  static const std::vector<std::string> others = {"bee", "tea", "dew", "ode", "ray"};

  TinyInstance inst;
  std::uniform_int_distribution<std::size_t> pair_pick(0, pairs.size() - 1);
  std::uniform_int_distribution<std::size_t> extra(0, 2);
  auto pair = pairs[pair_pick(rng)];
  std::vector<std::string> extras = others;
  std::shuffle(extras.begin(), extras.end(), rng);
  extras.resize(extra(rng));

  std::set<std::vector<TokenId>> used;
  auto fresh = [&] {
    for (;;) {
      auto p = random_pronunciation(rng, inst.vocab, 1, 3);
      if (used.insert(p).second) return p;
    }
  };
  auto shared = fresh();
  std::string text = pair.first + pron_text(inst.vocab, shared) + "\n" + pair.second +
                     pron_text(inst.vocab, shared) + "\n";
  for (const auto& w : extras) text += w + pron_text(inst.vocab, fresh()) + "\n";
  inst.lexicon = parse_lexicon(text, inst.vocab);
  inst.table = build_transition_table(inst.lexicon, inst.vocab);

  auto words = surface_words(inst.lexicon);
  std::bernoulli_distribution coin(0.3);
  std::vector<std::string> lm_words = words;
  bool with_unk = coin(rng);
  if (with_unk && lm_words.size() > 2) lm_words.pop_back();  // that word maps to <unk>
  inst.lm = parse_arpa(random_arpa(rng, lm_words, 3, with_unk, 0.5));
  inst.scorer_lm = parse_arpa(random_arpa(rng, words, 2, false, 0.6));

  std::uniform_real_distribution<double> bonus(0.0, 2.0);
  std::uniform_real_distribution<double> weight(0.3, 1.5);
  std::uniform_real_distribution<double> scale(0.4, 1.2);
  DecodeConfig& c = inst.config;
  c.acoustic_scale = scale(rng);
  c.beam_size = 256;
  c.beam_prune_threshold = 1e9;
  c.homophone_prune_threshold = 1e9;
  c.ortho_beams = 4;
  c.token_insertion_bonus = bonus(rng);
  c.word_boundary_bonus = bonus(rng);
  c.ngram_weight = weight(rng);
  c.llm_weight = weight(rng);
  c.llm_rescore_interval = 2;
  c.llm_chunk_size = 256;

  std::uniform_int_distribution<std::size_t> frames(1, max_frames);
  inst.D = random_logprobs(rng, frames(rng), inst.vocab.size(), 2.0, c.acoustic_scale);
  return inst;
}

MediumInstance random_medium_instance(std::mt19937_64& rng, std::size_t frames) {
  MediumInstance inst;
  inst.vocab = make_vocab(phoneme_names(6));
  std::set<std::vector<TokenId>> used;
  auto fresh = [&] {
    for (;;) {
      auto p = random_pronunciation(rng, inst.vocab, 1, 4);
      if (used.insert(p).second) return p;
    }
  };
  std::string text;
  for (int i = 0; i < 10; ++i) text += "w" + std::to_string(i) + pron_text(inst.vocab, fresh()) + "\n";
  // Two homophone groups, one of them a spelling variant.
  auto h1 = fresh();
  text += "hx" + pron_text(inst.vocab, h1) + "\nhy" + pron_text(inst.vocab, h1) + "\n";
  auto h2 = fresh();
  text += "hz" + pron_text(inst.vocab, h2) + "\nhz(2)" + pron_text(inst.vocab, h2) + "\n";
  inst.lexicon = parse_lexicon(text, inst.vocab);
  inst.table = build_transition_table(inst.lexicon, inst.vocab);

  auto words = surface_words(inst.lexicon);
  inst.lm = parse_arpa(random_arpa(rng, words, 3, true, 0.3));
  inst.scorer_lm = parse_arpa(random_arpa(rng, words, 2, false, 0.5));

  std::uniform_real_distribution<double> bonus(0.0, 2.0);
  std::uniform_real_distribution<double> weight(0.3, 1.5);
  DecodeConfig& c = inst.config;
  c.beam_size = 16;
  c.beam_prune_threshold = 12.0;
  c.homophone_prune_threshold = 3.0;
  c.ortho_beams = 3;
  c.token_insertion_bonus = bonus(rng);
  c.word_boundary_bonus = bonus(rng);
  c.ngram_weight = weight(rng);
  c.llm_weight = weight(rng);
  c.llm_rescore_interval = 4;

  // A noisy rendition of random words so that most frames carry signal.
  std::vector<TokenId> path;
  std::uniform_int_distribution<std::size_t> pick(0, inst.lexicon.entries.size() - 1);
  std::bernoulli_distribution blank(0.3);
  while (path.size() < frames) {
    for (TokenId p : inst.lexicon.entries[pick(rng)].phonemes) {
      path.push_back(p);
      if (blank(rng)) path.push_back(inst.vocab.blank_id());
    }
    path.push_back(inst.vocab.space_id());
  }
  path.resize(frames);
  std::normal_distribution<float> noise(0.0f, 1.5f);
  RawLogits raw;
  raw.frames = Matrix<float>(frames, inst.vocab.size());
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t v = 0; v < inst.vocab.size(); ++v) raw.frames(t, v) = noise(rng);
    raw.frames(t, path[t]) += 4.0f;
  }
  inst.D = scale_log_softmax(raw, c.acoustic_scale);
  return inst;
}

double path_acoustic_score(const LogProbMatrix& D, const std::vector<TokenId>& path,
                           const DecodeConfig& config, TokenId blank, TokenId space) {
  double s = 0.0;
  TokenId last = blank;
  for (std::size_t t = 0; t < path.size(); ++t) {
    TokenId v = path[t];
    s += D.frames(t, v);
    if (v != blank && v != last) {
      s += (v == space) ? config.word_boundary_bonus : config.token_insertion_bonus;
    }
    if (v != blank) last = v;
  }
  return s;
}

ForcedFixture forced_fixture(std::size_t n) {
  static const std::vector<std::string> names = {
      "alpha", "bravo",  "charlie", "delta",  "echo",   "foxtrot", "golf",
      "hotel", "india",  "juliet",  "kilo",   "lima",   "mike",    "november",
      "oscar", "papa",   "quebec",  "romeo",  "sierra", "tango",   "uniform",
      "victor", "whiskey", "xray",  "yankee", "zulu"};
  if (n > names.size()) throw std::invalid_argument("forced fixture is limited to 26 words");
  ForcedFixture f;
  f.vocab = make_vocab(phoneme_names(10));
  std::mt19937_64 rng(20240601);
  std::set<std::vector<TokenId>> used;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<TokenId> p;
    do {
      p = random_pronunciation(rng, f.vocab, 2, 5);
    } while (!used.insert(p).second);
    f.lexicon_text += names[i] + pron_text(f.vocab, p) + "\n";
  }
  f.lexicon = parse_lexicon(f.lexicon_text, f.vocab);
  f.table = build_transition_table(f.lexicon, f.vocab);
  std::vector<ToyNGram> spec{{{"<s>"}, -99.0, 0.0}, {{"</s>"}, -1.0, std::nullopt}};
  for (std::size_t i = 0; i < n; ++i) spec.push_back({{names[i]}, -1.3, std::nullopt});
  f.arpa_text = build_toy_arpa(spec);
  f.lm = parse_arpa(f.arpa_text);
  return f;
}

LogProbMatrix spell(const ForcedFixture& f, const LexiconEntry& entry, bool trailing_space) {
  std::vector<TokenId> path = entry.phonemes;
  if (trailing_space) path.push_back(f.vocab.space_id());
  return one_hot(path, f.vocab.size());
}

std::vector<std::string> write_forced_corpus(const fs::path& dir, std::size_t utterances,
                                             std::size_t repeat) {
  auto f = forced_fixture();
  std::string vocab;
  for (std::size_t i = 0; i < f.vocab.size(); ++i) {
    vocab += f.vocab.token(static_cast<TokenId>(i)) + "\n";
  }
  write_file(dir / "vocab.txt", vocab);
  write_file(dir / "lexicon.txt", f.lexicon_text);
  write_file(dir / "lm.arpa", f.arpa_text);
  write_file(dir / "stub.json", "{}");
  fs::create_directories(dir / "logits");
  std::vector<std::string> refs;
  std::string ref_text;
  for (std::size_t u = 0; u < utterances; ++u) {
    const auto& e = f.lexicon.entries[u % f.lexicon.entries.size()];
    std::vector<TokenId> path;
    std::string ref;
    for (std::size_t r = 0; r < repeat; ++r) {
      path.insert(path.end(), e.phonemes.begin(), e.phonemes.end());
      path.push_back(f.vocab.space_id());
      ref += (r ? " " : "") + e.surface;
    }
    RawLogits raw;
    raw.frame_duration_ms = 80.0f;
    raw.frames = Matrix<float>(path.size(), f.vocab.size(), 0.0f);
    for (std::size_t t = 0; t < path.size(); ++t) raw.frames(t, path[t]) = 10.0f;
    char name[32];
    std::snprintf(name, sizeof(name), "utt%03zu.lblt", u);
    save_logits(dir / "logits" / name, raw);
    refs.push_back(ref);
    ref_text += ref + "\n";
  }
  write_file(dir / "ref.txt", ref_text);
  return refs;
}

std::string toy_arpa_text() {
  return R"(
\data\
ngram 1=6
ngram 2=4
ngram 3=2

\1-grams:
-1.0	<unk>
-99	<s>	-0.5
-0.7	</s>
-0.6	a	-0.3
-0.8	b	-0.2
-0.9	c	-0.4

\2-grams:
-0.3	<s> a	-0.1
-0.4	a b	-0.25
-0.5	b c
-0.2	a </s>

\3-grams:
-0.15	<s> a b
-0.05	a b c

\end\
)";
}

}  // namespace lightbeam::testing
