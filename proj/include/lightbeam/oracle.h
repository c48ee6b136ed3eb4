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

// Slow reference implementations used by the tests. Nothing here is on the
// decoding path.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lightbeam/common.h"
#include "lightbeam/frontio.h"
#include "lightbeam/lexicon.h"
#include "lightbeam/ngram.h"
#include "lightbeam/scorer.h"

namespace lightbeam {

/// Standard CTC collapse: merge runs, then delete blanks.
/// [a,a,blank,a,b] -> [a,a,b].
std::vector<TokenId> collapse_ctc(std::span<const TokenId> path, TokenId blank_id);

/// The decoder's label rule: delete blanks, then merge runs, so a blank
/// does not separate two equal tokens. [a,a,blank,a,b] -> [a,b].
std::vector<TokenId> collapse_emissions(std::span<const TokenId> path, TokenId blank_id);

struct OracleResult {
  std::string text;
  double score = kNegInf;
  std::size_t hypotheses = 0;  // largest live hypothesis count seen
};

/// Frame-synchronous exhaustive search with explicit label sequences and no
/// beam limits: every hypothesis is extended by every token, and
/// hypotheses with equal labels are merged by max after each frame. Word
/// validity is checked against the raw lexicon entries. Rescoring follows
/// the same schedule as the decoder. A null scorer disables rescoring.
///
/// Throws SizeError when |V|^T exceeds 1e7.
OracleResult exhaustive_decode(const LogProbMatrix& D, const DecodeConfig& config,
                               const Lexicon& lexicon, const Vocabulary& vocab,
                               const NGramModel& ngram, const StubScorer* scorer);

/// Scores every frame-level path independently and returns the best one.
/// No intermediate rescoring is done, so it matches the decoder only when
/// the rescoring interval exceeds T. Same size limit.
OracleResult enumerate_paths_decode(const LogProbMatrix& D, const DecodeConfig& config,
                                    const Lexicon& lexicon, const Vocabulary& vocab,
                                    const NGramModel& ngram, const StubScorer* scorer);

struct ToyNGram {
  std::vector<std::string> words;
  double log10_prob = 0.0;
  std::optional<double> backoff;  // log10; omitted means none written
};

/// ARPA text for the listed n-grams. Throws ValueError when an n-gram's
/// history or one of its words has no entry of its own.
std::string build_toy_arpa(const std::vector<ToyNGram>& spec);

}  // namespace lightbeam
