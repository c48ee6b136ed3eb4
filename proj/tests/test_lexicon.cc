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

#include <map>
#include <random>
#include <set>

#include "lightbeam/lexicon.h"
#include "support.h"

namespace lightbeam {
namespace {

Vocabulary ant_vocab() { return Vocabulary({"<blank>", "AE", "N", "T", "<sp>"}); }

TEST(StripVariant, Cases) {
  EXPECT_EQ(strip_variant("read(2)"), "read");
  EXPECT_EQ(strip_variant("ant"), "ant");
  EXPECT_EQ(strip_variant("a(10)"), "a");
  EXPECT_EQ(strip_variant("x(2)(3)"), "x(2)");
  EXPECT_EQ(strip_variant("(2)"), "(2)");
  EXPECT_EQ(strip_variant("f(a)"), "f(a)");
  EXPECT_EQ(strip_variant("b()"), "b()");
}

TEST(Lexicon, ParsesEntries) {
  auto v = Vocabulary({"<blank>", "AE", "N", "T", "R", "EH", "D", "<sp>"});
  Lexicon lex = parse_lexicon(";;; comment\nant AE N T\n\naunt AE N T\nread(2) R EH D\n", v);
  ASSERT_EQ(lex.entries.size(), 3u);
  EXPECT_EQ(lex.entries[0].key, "ant");
  EXPECT_EQ(lex.entries[0].surface, "ant");
  EXPECT_EQ(lex.entries[0].phonemes, (std::vector<TokenId>{1, 2, 3}));
  EXPECT_EQ(lex.entries[1].phonemes, lex.entries[0].phonemes);
  EXPECT_EQ(lex.entries[2].key, "read(2)");
  EXPECT_EQ(lex.entries[2].surface, "read");
}

TEST(Lexicon, Errors) {
  auto v = ant_vocab();
  try {
    parse_lexicon("ant AE N T\nbad AE Q\n", v);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_lexicon("ant AE N T\nant AE N\n", v), FormatError);
  EXPECT_THROW(parse_lexicon("ant AE <sp>\n", v), FormatError);
  EXPECT_THROW(parse_lexicon("ant <blank>\n", v), FormatError);
  EXPECT_THROW(parse_lexicon("ant\n", v), FormatError);
  EXPECT_THROW(build_transition_table(Lexicon{}, v), ValueError);
}

TEST(TransitionTable, AntExample) {
  auto v = ant_vocab();
  auto tt = build_transition_table(parse_lexicon("ant AE N T\n", v), v);
  ASSERT_EQ(tt.num_states(), 5u);
  EXPECT_EQ(tt.cells().size(), 25u);
  StateId ae = tt.advance(tt.root(), 1);
  StateId aen = tt.advance(ae, 2);
  StateId aent = tt.advance(aen, 3);
  EXPECT_EQ(ae, 1u);
  EXPECT_EQ(aen, 2u);
  EXPECT_EQ(aent, 3u);
  EXPECT_EQ(tt.sink(), 4u);
  ASSERT_EQ(tt.completions(aent).size(), 1u);
  EXPECT_EQ(tt.entry_key(tt.completions(aent)[0]), "ant");
  EXPECT_TRUE(tt.completions(tt.root()).empty());
  EXPECT_TRUE(tt.completions(ae).empty());
  EXPECT_EQ(tt.advance(tt.root(), 3), tt.sink());
  EXPECT_EQ(tt.advance(aent, 4), tt.root());
  EXPECT_EQ(tt.advance(aen, 4), tt.sink());
  for (TokenId t = 0; t < 5; ++t) EXPECT_EQ(tt.advance(tt.sink(), t), tt.sink());
  for (StateId s = 0; s < 5; ++s) EXPECT_EQ(tt.advance(s, 0), tt.sink());
  EXPECT_THROW(tt.advance(5, 0), std::out_of_range);
  EXPECT_THROW(tt.advance(0, 5), std::out_of_range);
}

TEST(TransitionTable, HomophonesShareState) {
  auto v = ant_vocab();
  auto tt = build_transition_table(parse_lexicon("ant AE N T\naunt AE N T\n", v), v);
  EXPECT_EQ(tt.num_states(), 5u);
  auto c = tt.completions(3);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(tt.entry_key(c[0]), "ant");
  EXPECT_EQ(tt.entry_key(c[1]), "aunt");
}

TEST(TransitionTable, ValidMask) {
  auto v = ant_vocab();
  auto tt = build_transition_table(parse_lexicon("ant AE N T\n", v), v);
  std::vector<StateId> states{tt.root(), 1, 3, tt.root()};
  std::vector<TokenId> last{0, 1, 3, 4};
  auto m = tt.valid_mask(states, last, v.blank_id());
  auto row = [&](std::size_t i) {
    std::vector<bool> r;
    for (std::size_t t = 0; t < 5; ++t) r.push_back(m[i * 5 + t]);
    return r;
  };
  EXPECT_EQ(row(0), (std::vector<bool>{true, true, false, false, false}));
  EXPECT_EQ(row(1), (std::vector<bool>{true, true, true, false, false}));
  EXPECT_EQ(row(2), (std::vector<bool>{true, false, false, true, true}));
  EXPECT_EQ(row(3), (std::vector<bool>{true, true, false, false, true}));
}

TEST(TransitionTable, SaveLoadRoundTrip) {
  auto dir = testing::make_temp_dir("lbtt");
  auto v = Vocabulary({"<blank>", "AE", "N", "T", "R", "EH", "D", "<sp>"});
  auto tt = build_transition_table(parse_lexicon("ant AE N T\naunt AE N T\nread(2) R EH D\n", v),
                                   v);
  tt.save(dir / "t.lbtt");
  auto back = TransitionTable::load(dir / "t.lbtt");
  EXPECT_TRUE(back == tt);
  EXPECT_EQ(back.entry_surface(2), "read");
  EXPECT_EQ(testing::read_file(dir / "t.lbtt").substr(0, 4), "LBTT");
  std::string bytes = testing::read_file(dir / "t.lbtt");
  bytes[0] = 'X';
  testing::write_file(dir / "bad.lbtt", bytes);
  EXPECT_THROW(TransitionTable::load(dir / "bad.lbtt"), FormatError);
}

// Pointer-free reference trie: a prefix is a node iff some entry starts with it.
class ReferenceTrie {
 public:
  ReferenceTrie(const Lexicon& lex, TokenId space) : space_(space) {
    for (std::size_t i = 0; i < lex.entries.size(); ++i) {
      const auto& p = lex.entries[i].phonemes;
      for (std::size_t n = 0; n <= p.size(); ++n) prefixes_.insert({p.begin(), p.begin() + n});
      words_[p].push_back(static_cast<EntryId>(i));
    }
  }
  // nullopt plays the sink.
  std::optional<std::vector<TokenId>> advance(const std::vector<TokenId>& prefix,
                                              TokenId token) const {
    if (token == space_) {
      if (words_.count(prefix)) return std::vector<TokenId>{};
      return std::nullopt;
    }
    auto next = prefix;
    next.push_back(token);
    if (prefixes_.count(next)) return next;
    return std::nullopt;
  }
  std::vector<EntryId> completions(const std::vector<TokenId>& prefix) const {
    auto it = words_.find(prefix);
    return it == words_.end() ? std::vector<EntryId>{} : it->second;
  }
  std::size_t size() const { return prefixes_.size(); }

 private:
  TokenId space_;
  std::set<std::vector<TokenId>> prefixes_;
  std::map<std::vector<TokenId>, std::vector<EntryId>> words_;
};

TEST(TransitionTable, AgreesWithReferenceTrie) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto v = testing::make_vocab(testing::phoneme_names(5));
    std::string text;
    std::uniform_int_distribution<int> nwords(1, 50);
    int n = nwords(rng);
    for (int i = 0; i < n; ++i) {
      text += "w" + std::to_string(i);
      for (TokenId p : testing::random_pronunciation(rng, v, 1, 5)) text += " " + v.token(p);
      text += "\n";
    }
    Lexicon lex = parse_lexicon(text, v);
    auto tt = build_transition_table(lex, v);
    ReferenceTrie ref(lex, v.space_id());
    EXPECT_EQ(tt.num_states(), ref.size() + 1);
    std::size_t total_phonemes = 0;
    for (const auto& e : lex.entries) total_phonemes += e.phonemes.size();
    EXPECT_LE(tt.num_states(), total_phonemes + 2);

    // Exhaustive over reachable (prefix, token) pairs.
    std::vector<std::pair<std::vector<TokenId>, StateId>> frontier{{{}, tt.root()}};
    std::set<StateId> seen{tt.root()};
    while (!frontier.empty()) {
      auto [prefix, state] = frontier.back();
      frontier.pop_back();
      auto comps = tt.completions(state);
      EXPECT_EQ(std::vector<EntryId>(comps.begin(), comps.end()), ref.completions(prefix));
      for (TokenId t = 1; t < v.size(); ++t) {
        auto expect = ref.advance(prefix, t);
        StateId got = tt.advance(state, t);
        if (!expect) {
          EXPECT_EQ(got, tt.sink());
          continue;
        }
        ASSERT_NE(got, tt.sink());
        if (t == v.space_id()) {
          EXPECT_EQ(got, tt.root());
        } else if (seen.insert(got).second) {
          frontier.push_back({*expect, got});
        }
      }
    }
    EXPECT_EQ(seen.size(), tt.num_states() - 1);  // every non-sink state reachable

    for (const auto& e : lex.entries) {
      StateId s = tt.root();
      for (TokenId p : e.phonemes) {
        s = tt.advance(s, p);
        ASSERT_NE(s, tt.sink());
      }
      EXPECT_EQ(tt.advance(s, v.space_id()), tt.root());
    }
  }
}

TEST(TransitionTable, BlankAlwaysValid) {
  std::mt19937_64 rng(3);
  auto v = testing::make_vocab(testing::phoneme_names(4));
  std::string text;
  for (int i = 0; i < 10; ++i) {
    text += "w" + std::to_string(i);
    for (TokenId p : testing::random_pronunciation(rng, v, 1, 4)) text += " " + v.token(p);
    text += "\n";
  }
  auto tt = build_transition_table(parse_lexicon(text, v), v);
  std::vector<StateId> states;
  std::vector<TokenId> last;
  for (StateId s = 0; s < tt.num_states(); ++s) {
    for (TokenId t = 0; t < v.size(); ++t) {
      states.push_back(s);
      last.push_back(t);
    }
  }
  auto m = tt.valid_mask(states, last, v.blank_id());
  for (std::size_t i = 0; i < states.size(); ++i) {
    EXPECT_TRUE(m[i * v.size() + v.blank_id()]);
    EXPECT_TRUE(m[i * v.size() + last[i]]);
  }
}

}  // namespace
}  // namespace lightbeam
