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

#include <gtest/gtest.h>
#include <zlib.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "lightbeam/ngram.h"
#include "support.h"

namespace lightbeam {
namespace {

constexpr double kLn10 = std::numbers::ln10;

// Walks `words` from <s> and returns the natural-log score of the last one.
double last_word_score(NGramSession& s, const std::vector<std::string>& words) {
  LmStateId state = s.bos_state();
  WordScore ws;
  for (const auto& w : words) {
    ws = s.score_word(state, w);
    state = ws.next_state;
  }
  return ws.log_prob;
}

double after(NGramSession& s, const std::vector<WordId>& history, std::string_view word) {
  return s.score_word(s.registry().intern(history), word).log_prob;
}

TEST(NGram, ParsesToyModel) {
  NGramModel m = parse_arpa(testing::toy_arpa_text());
  EXPECT_EQ(m.order(), 3);
  EXPECT_TRUE(m.unk_present());
  EXPECT_EQ(m.num_ngrams(1), 6u);
  EXPECT_EQ(m.num_ngrams(2), 4u);
  EXPECT_EQ(m.num_ngrams(3), 2u);
  WordId a = *m.word_id("a");
  WordId b = *m.word_id("b");
  const NGramEntry* e = m.find(std::vector<WordId>{a, b});
  ASSERT_NE(e, nullptr);
  EXPECT_NEAR(e->log_prob, -0.4 * kLn10, 1e-12);
  EXPECT_NEAR(e->backoff, -0.25 * kLn10, 1e-12);
}

TEST(NGram, HandComputedBackoff) {
  NGramModel m = parse_arpa(testing::toy_arpa_text());
  NGramSession s(m);
  WordId bos = m.bos_id(), a = *m.word_id("a"), b = *m.word_id("b"), c = *m.word_id("c");
  struct Case {
    std::vector<WordId> history;
    std::string word;
    double log10;
  };
  std::vector<Case> cases = {
      {{bos}, "a", -0.3},
      {{bos, a}, "b", -0.15},
      {{a, b}, "c", -0.05},
      {{bos}, "b", -0.5 + -0.8},
      {{bos, a}, "c", -0.1 + -0.3 + -0.9},
      {{bos, a}, "</s>", -0.1 + -0.2},
      {{a, b}, "a", -0.25 + -0.2 + -0.6},
      {{bos}, "zebra", -0.5 + -1.0},
      {{b, c}, "c", -0.4 + -0.9},
      {{c}, "a", -0.4 + -0.6},
      {{b, c}, "</s>", -0.4 + -0.7},
      {{bos, a}, "a", -0.1 + -0.3 + -0.6},
      {{a, b}, "b", -0.25 + -0.2 + -0.8},
  };
  for (const auto& k : cases) {
    EXPECT_NEAR(after(s, k.history, k.word), k.log10 * kLn10, 1e-9) << k.word;
  }
}

TEST(NGram, SequenceMatchesHandSum) {
  NGramModel m = parse_arpa(testing::toy_arpa_text());
  std::vector<std::string> w{"a", "b", "c"};
  double expect = (-0.3 - 0.15 - 0.05 + (-0.4 - 0.7)) * kLn10;
  EXPECT_NEAR(score_sequence(m, w, true), expect, 1e-9);
  EXPECT_NEAR(score_sequence(m, w, false), (-0.3 - 0.15 - 0.05) * kLn10, 1e-9);
  NGramSession s(m);
  EXPECT_NEAR(last_word_score(s, w), -0.05 * kLn10, 1e-9);
}

TEST(NGram, UnknownWithoutUnkIsImpossible) {
  NGramModel m = parse_arpa(
      "\\data\\\nngram 1=3\n\n\\1-grams:\n-99 <s>\n-0.5 </s>\n-0.3 a\n\\end\\\n");
  EXPECT_FALSE(m.unk_present());
  NGramSession s(m);
  EXPECT_EQ(s.score_word(s.bos_state(), "zebra").log_prob, kNegInf);
  EXPECT_NEAR(s.score_word(s.bos_state(), "a").log_prob, -0.3 * kLn10, 1e-12);
  EXPECT_EQ(s.score_word(s.bos_state(), "a").next_state, s.registry().intern({}));
}

TEST(NGram, SuccessorStateIsLongestListedSuffix) {
  NGramModel m = parse_arpa(testing::toy_arpa_text());
  NGramSession s(m);
  WordId a = *m.word_id("a"), b = *m.word_id("b"), c = *m.word_id("c");
  auto st = s.score_word(s.bos_state(), "a").next_state;
  EXPECT_EQ(s.registry().history(st), (std::vector<WordId>{m.bos_id(), a}));
  st = s.score_word(st, "b").next_state;
  EXPECT_EQ(s.registry().history(st), (std::vector<WordId>{a, b}));
  st = s.score_word(st, "c").next_state;
  // "b c" is listed, "a b c" is longer than order-1.
  EXPECT_EQ(s.registry().history(st), (std::vector<WordId>{b, c}));
  st = s.score_word(st, "a").next_state;
  EXPECT_EQ(s.registry().history(st), (std::vector<WordId>{a}));
  EXPECT_THROW(s.score_word(999, "a"), std::logic_error);
}

TEST(NGram, MalformedInputs) {
  const std::string ok = "\\data\\\nngram 1=2\n\n\\1-grams:\n-1 <s>\n-1 a\n\\end\\\n";
  EXPECT_NO_THROW(parse_arpa(ok));
  EXPECT_THROW(parse_arpa("\\data\\\nngram 1=3\n\\1-grams:\n-1 <s>\n-1 a\n\\end\\\n"),
               FormatError);
  EXPECT_THROW(parse_arpa("\\data\\\nngram 1=2\n\\1-grams:\n-1 <s>\n-1 a\n"), FormatError);
  EXPECT_THROW(parse_arpa("\\data\\\nngram 1=2\n\\1-grams:\n-1 <s>\nfoo a\n\\end\\\n"),
               FormatError);
  EXPECT_THROW(parse_arpa("\\data\\\nngram 1=2\n\\1-grams:\n-1 <s>\n0.5 a\n\\end\\\n"),
               FormatError);
  EXPECT_THROW(parse_arpa("\\data\\\nngram 1=1\nngram 2=1\n\\1-grams:\n-1 a\n\\2-grams:\n-1 a b\n"
                          "\\end\\\n"),
               FormatError);
  try {
    parse_arpa("\\data\\\nngram 1=2\n\\1-grams:\n-1 <s>\n-1 a b c\n\\end\\\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos);
  }
}

TEST(NGram, LoadsGzip) {
  auto dir = testing::make_temp_dir("arpa_gz");
  std::string text = testing::toy_arpa_text();
  gzFile gz = gzopen((dir / "lm.arpa.gz").c_str(), "wb");
  ASSERT_NE(gz, nullptr);
  gzwrite(gz, text.data(), static_cast<unsigned>(text.size()));
  gzclose(gz);
  testing::write_file(dir / "lm.arpa", text);
  NGramModel g = load_arpa(dir / "lm.arpa.gz");
  NGramModel p = load_arpa(dir / "lm.arpa");
  EXPECT_EQ(g.num_ngrams(3), p.num_ngrams(3));
  std::vector<std::string> w{"a", "b", "c", "a"};
  EXPECT_EQ(score_sequence(g, w, true), score_sequence(p, w, true));
}

TEST(NGram, CacheSavesLookupsAndIsTransparent) {
  NGramModel m = parse_arpa(testing::toy_arpa_text());
  NGramSession cached(m, true);
  NGramSession plain(m, false);
  std::vector<std::string> words{"a", "b", "c", "zz", "a", "b", "a", "</s>"};
  m.reset_lookup_count();
  for (int rep = 0; rep < 3; ++rep) {
    LmStateId st = cached.bos_state();
    for (const auto& w : words) st = cached.score_word(st, w).next_state;
  }
  auto with_cache = m.lookup_count();
  m.reset_lookup_count();
  for (int rep = 0; rep < 3; ++rep) {
    LmStateId st = plain.bos_state();
    for (const auto& w : words) st = plain.score_word(st, w).next_state;
  }
  auto without = m.lookup_count();
  EXPECT_LT(with_cache * 2, without);
  EXPECT_EQ(last_word_score(cached, words), last_word_score(plain, words));
}

// Independent reader and recursive backoff over word strings.
class ReferenceLm {
 public:
  explicit ReferenceLm(const std::string& arpa) {
    std::istringstream in(arpa);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line.rfind("ngram ", 0) == 0 || line == "\\data\\") continue;
      if (line == "\\end\\") break;
      if (line[0] == '\\') {
        n = line[1] - '0';
        order_ = std::max(order_, n);
        continue;
      }
      std::istringstream f(line);
      double lp;
      f >> lp;
      std::vector<std::string> g(static_cast<std::size_t>(n));
      for (auto& w : g) f >> w;
      double bo = 0.0;
      f >> bo;
      table_[g] = {lp, bo};
    }
  }

  double prob(std::vector<std::string> context, const std::string& word) const {
    std::string w = table_.count({word}) ? word : "<unk>";
    if (!table_.count({w})) return -HUGE_VAL;
    while (context.size() > static_cast<std::size_t>(order_ - 1)) context.erase(context.begin());
    return recurse(context, w);
  }

  double sentence(const std::vector<std::string>& words, bool eos) const {
    std::vector<std::string> ctx{"<s>"};
    double total = 0.0;
    for (const auto& w : words) {
      total += prob(ctx, w);
      ctx.push_back(table_.count({w}) ? w : "<unk>");
    }
    if (eos) total += prob(ctx, "</s>");
    return total;
  }

 private:
  double recurse(const std::vector<std::string>& ctx, const std::string& w) const {
    auto g = ctx;
    g.push_back(w);
    if (auto it = table_.find(g); it != table_.end()) return it->second.first;
    if (ctx.empty()) return -HUGE_VAL;
    double bo = 0.0;
    if (auto it = table_.find(ctx); it != table_.end()) bo = it->second.second;
    return bo + recurse({ctx.begin() + 1, ctx.end()}, w);
  }

  int order_ = 0;
  std::map<std::vector<std::string>, std::pair<double, double>> table_;
};

TEST(NGram, AgreesWithRecursiveBackoff) {
  std::mt19937_64 rng(5);
  std::vector<std::string> vocab{"x", "y", "z", "w", "v"};
  for (int trial = 0; trial < 30; ++trial) {
    int order = 1 + static_cast<int>(trial % 4);
    bool with_unk = trial % 2 == 0;
    std::string text = testing::random_arpa(rng, vocab, order, with_unk, 0.4);
    NGramModel m = parse_arpa(text);
    ReferenceLm ref(text);
    std::uniform_int_distribution<int> len(0, 8);
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size());
    for (int s = 0; s < 20; ++s) {
      std::vector<std::string> words(static_cast<std::size_t>(len(rng)));
      for (auto& w : words) {
        std::size_t i = pick(rng);
        w = i == vocab.size() ? "oov" : vocab[i];
      }
      bool has_oov = std::find(words.begin(), words.end(), "oov") != words.end();
      double got = score_sequence(m, words, true);
      if (has_oov && !with_unk) {
        EXPECT_LE(got, kDeadScore);
        continue;
      }
      EXPECT_NEAR(got, ref.sentence(words, true) * kLn10, 1e-9) << text;
    }
  }
}

TEST(NGram, SessionSumsMatchScoreSequence) {
  std::mt19937_64 rng(9);
  std::vector<std::string> vocab{"p", "q", "r"};
  NGramModel m = parse_arpa(testing::random_arpa(rng, vocab, 4, true, 0.6));
  NGramSession s(m);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> words(7);
    for (auto& w : words) w = vocab[pick(rng)];
    LmStateId st = s.bos_state();
    double total = 0.0;
    for (const auto& w : words) {
      auto r = s.score_word(st, w);
      total += r.log_prob;
      st = r.next_state;
    }
    EXPECT_NEAR(total, score_sequence(m, words, false), 1e-9);
    EXPECT_LE(s.registry().history(st).size(), 3u);
  }
}

}  // namespace
}  // namespace lightbeam
