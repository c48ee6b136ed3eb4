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

// Fixtures shared by the unit and acceptance tests.

#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lightbeam/decoder.h"
#include "lightbeam/frontio.h"
#include "lightbeam/lexicon.h"
#include "lightbeam/ngram.h"
#include "lightbeam/oracle.h"

namespace lightbeam::testing {

namespace fs = std::filesystem;

/// Fresh empty directory under the system temp dir.
fs::path make_temp_dir(const std::string& tag);
void write_file(const fs::path& path, const std::string& text);
std::string read_file(const fs::path& path);

/// "<blank>", then `phonemes`, then "<sp>".
Vocabulary make_vocab(const std::vector<std::string>& phonemes);

/// Phoneme names P0..P{n-1}.
std::vector<std::string> phoneme_names(std::size_t n);

/// Log-softmax of logits that put `peak` on the given token per frame and
/// 0 elsewhere.
LogProbMatrix one_hot(const std::vector<TokenId>& path, std::size_t num_tokens,
                      double peak = 10.0);

/// Log-softmax of N(0, spread^2) logits scaled by `acoustic_scale`.
LogProbMatrix random_logprobs(std::mt19937_64& rng, std::size_t frames, std::size_t num_tokens,
                              double spread = 2.0, double acoustic_scale = 1.0);

/// Random pronunciation with no two adjacent equal phonemes.
std::vector<TokenId> random_pronunciation(std::mt19937_64& rng, const Vocabulary& vocab,
                                          std::size_t min_len, std::size_t max_len);

/// Random backoff model over `words` (plus <s>, </s>) up to `order`, every
/// word listed as a unigram. Optionally lists <unk>.
std::string random_arpa(std::mt19937_64& rng, const std::vector<std::string>& words,
                        int order, bool with_unk = false, double ngram_density = 0.5);

/// Words of a lexicon, lowercased surfaces, in entry order without repeats.
std::vector<std::string> surface_words(const Lexicon& lexicon);

/// Tiny decoding problem of the kind used for oracle checks.
struct TinyInstance {
  Vocabulary vocab{std::vector<std::string>{"<blank>", "A", "B", "C", "<sp>"}};
  Lexicon lexicon;
  TransitionTable table;
  NGramModel lm;
  NGramModel scorer_lm;
  DecodeConfig config;
  LogProbMatrix D;
};

/// |V| = 5 (three phonemes), at most four words with one homophone pair,
/// T in [1, max_frames], exhaustive beam settings, random weights.
TinyInstance random_tiny_instance(std::mt19937_64& rng, std::size_t max_frames = 6);

/// A medium-sized random problem for property checks with real pruning.
struct MediumInstance {
  Vocabulary vocab{std::vector<std::string>{"<blank>", "P0", "<sp>"}};
  Lexicon lexicon;
  TransitionTable table;
  NGramModel lm;
  NGramModel scorer_lm;
  DecodeConfig config;
  LogProbMatrix D;
};

MediumInstance random_medium_instance(std::mt19937_64& rng, std::size_t frames = 24);

/// Sum of D along `path` plus the insertion bonuses it earns under the
/// decoder's repeat rule.
double path_acoustic_score(const LogProbMatrix& D, const std::vector<TokenId>& path,
                           const DecodeConfig& config, TokenId blank, TokenId space);

/// Vocabulary, lexicon and unigram model of `n` fixed words with distinct
/// pronunciations over ten phonemes.
struct ForcedFixture {
  Vocabulary vocab{std::vector<std::string>{"<blank>", "P0", "<sp>"}};
  Lexicon lexicon;
  TransitionTable table;
  NGramModel lm;
  std::string lexicon_text;
  std::string arpa_text;
};

ForcedFixture forced_fixture(std::size_t n = 20);

/// One-hot frames for the word's phonemes followed by a space.
LogProbMatrix spell(const ForcedFixture& f, const LexiconEntry& entry, bool trailing_space = true);

/// Writes vocab.txt, lexicon.txt, lm.arpa, stub.json, ref.txt and
/// logits/uttN.lblt for `utterances` forced utterances, each repeating one
/// fixture word `repeat` times. Returns the reference lines.
std::vector<std::string> write_forced_corpus(const fs::path& dir, std::size_t utterances = 3,
                                             std::size_t repeat = 1);

/// The hand-checkable model used by the n-gram tests, in ARPA text.
std::string toy_arpa_text();

}  // namespace lightbeam::testing
