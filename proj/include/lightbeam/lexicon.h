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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lightbeam/common.h"
#include "lightbeam/frontio.h"

namespace lightbeam {

struct LexiconEntry {
  std::string key;      // e.g. "read(2)"
  std::string surface;  // e.g. "read"
  std::vector<TokenId> phonemes;
};

struct Lexicon {
  std::vector<LexiconEntry> entries;
};

/// "read(2)" -> "read". Only one trailing "(digits)" group is removed.
std::string strip_variant(std::string_view lexicon_key);

/// One entry per line: key followed by whitespace-separated phoneme tokens.
/// Blank lines and lines starting with ";;;" are skipped.
Lexicon load_lexicon(const std::filesystem::path& path, const Vocabulary& vocab);
Lexicon parse_lexicon(std::string_view text, const Vocabulary& vocab);

/// Dense S x V successor table over the lexicon prefix trie.
///
/// Row 0 is the root (empty prefix); the last row is the absorbing sink.
/// Rows are numbered breadth-first with children visited in token order.
/// The space column leads back to root exactly from states at which some
/// entry completes; the blank column always points at the sink and is never
/// consulted by the decoder.
class TransitionTable {
 public:
  static constexpr StateId kRoot = 0;

  TransitionTable() = default;
  TransitionTable(std::size_t num_states, std::size_t num_tokens, StateId sink,
                  std::vector<StateId> cells, std::vector<std::vector<EntryId>> completions,
                  std::vector<std::string> entry_keys);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_tokens() const { return num_tokens_; }
  StateId root() const { return kRoot; }
  StateId sink() const { return sink_; }

  /// Bounds-checked lookup; throws std::out_of_range.
  StateId advance(StateId state, TokenId token) const;
  StateId advance_unchecked(StateId state, TokenId token) const {
    return cells_[static_cast<std::size_t>(state) * num_tokens_ + token];
  }

  std::span<const EntryId> completions(StateId state) const;

  const std::string& entry_key(EntryId id) const { return entry_keys_.at(id); }
  const std::string& entry_surface(EntryId id) const { return entry_surfaces_.at(id); }
  std::size_t num_entries() const { return entry_keys_.size(); }
  const std::vector<StateId>& cells() const { return cells_; }

  /// mask[i * V + v] for K beams, row-major.
  std::vector<bool> valid_mask(std::span<const StateId> states,
                               std::span<const TokenId> last_tokens, TokenId blank_id) const;

  void save(const std::filesystem::path& path) const;
  static TransitionTable load(const std::filesystem::path& path);

  bool operator==(const TransitionTable& other) const;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_tokens_ = 0;
  StateId sink_ = 0;
  std::vector<StateId> cells_;
  std::vector<std::vector<EntryId>> completions_;
  std::vector<std::string> entry_keys_;
  std::vector<std::string> entry_surfaces_;
};

/// Compiles the lexicon into its transition table. Throws ValueError on an
/// empty lexicon.
TransitionTable build_transition_table(const Lexicon& lexicon, const Vocabulary& vocab);

}  // namespace lightbeam
