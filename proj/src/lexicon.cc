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

#include "lightbeam/lexicon.h"

#include <array>
#include <cctype>
#include <cstring>
#include <deque>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <unordered_set>

namespace lightbeam {

namespace {

constexpr std::array<char, 4> kTableMagic = {'L', 'B', 'T', 'T'};
constexpr std::uint32_t kTableVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::istream& in, const std::string& name) {
  std::uint32_t v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw FormatError(name + ": truncated LBTT file");
  }
  return v;
}

}  // namespace

std::string strip_variant(std::string_view key) {
  if (key.size() < 3 || key.back() != ')') return std::string(key);
  std::size_t open = key.rfind('(');
  if (open == std::string_view::npos || open == 0 || open + 2 > key.size() - 1) {
    return std::string(key);
  }
  for (std::size_t i = open + 1; i + 1 < key.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(key[i]))) return std::string(key);
  }
  return std::string(key.substr(0, open));
}

Lexicon parse_lexicon(std::string_view text, const Vocabulary& vocab) {
  Lexicon lex;
  std::unordered_set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key) || key.rfind(";;;", 0) == 0) continue;
    LexiconEntry entry;
    entry.key = key;
    entry.surface = strip_variant(key);
    std::string tok;
    while (fields >> tok) {
      auto id = vocab.find(tok);
      if (!id) {
        throw FormatError("lexicon line " + std::to_string(line_no) + ": unknown phoneme '" +
                          tok + "'");
      }
      if (!vocab.is_phoneme(*id)) {
        throw FormatError("lexicon line " + std::to_string(line_no) +
                          ": reserved token used as phoneme");
      }
      entry.phonemes.push_back(*id);
    }
    if (entry.phonemes.empty()) {
      throw FormatError("lexicon line " + std::to_string(line_no) + ": no phonemes");
    }
    if (!seen.insert(key).second) {
      throw FormatError("lexicon line " + std::to_string(line_no) + ": duplicate key '" + key +
                        "'");
    }
    lex.entries.push_back(std::move(entry));
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_lexicon(text, vocab);
}

TransitionTable::TransitionTable(std::size_t num_states, std::size_t num_tokens, StateId sink,
                                 std::vector<StateId> cells,
                                 std::vector<std::vector<EntryId>> completions,
                                 std::vector<std::string> entry_keys)
    : num_states_(num_states),
      num_tokens_(num_tokens),
      sink_(sink),
      cells_(std::move(cells)),
      completions_(std::move(completions)),
      entry_keys_(std::move(entry_keys)) {
  if (cells_.size() != num_states_ * num_tokens_ || completions_.size() != num_states_ ||
      sink_ >= num_states_) {
    throw FormatError("inconsistent transition table dimensions");
  }
  entry_surfaces_.reserve(entry_keys_.size());
  for (const auto& k : entry_keys_) entry_surfaces_.push_back(strip_variant(k));
}

StateId TransitionTable::advance(StateId state, TokenId token) const {
  if (state >= num_states_ || token >= num_tokens_) {
    throw std::out_of_range("transition table index out of range");
  }
  return advance_unchecked(state, token);
}

std::span<const EntryId> TransitionTable::completions(StateId state) const {
  return completions_.at(state);
}

std::vector<bool> TransitionTable::valid_mask(std::span<const StateId> states,
                                              std::span<const TokenId> last_tokens,
                                              TokenId blank_id) const {
  if (states.size() != last_tokens.size()) {
    throw std::invalid_argument("valid_mask: states and last_tokens differ in length");
  }
  std::vector<bool> mask(states.size() * num_tokens_);
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (TokenId v = 0; v < num_tokens_; ++v) {
      mask[i * num_tokens_ + v] =
          v == blank_id || v == last_tokens[i] || advance(states[i], v) != sink_;
    }
  }
  return mask;
}

bool TransitionTable::operator==(const TransitionTable& o) const {
  return num_states_ == o.num_states_ && num_tokens_ == o.num_tokens_ && sink_ == o.sink_ &&
         cells_ == o.cells_ && completions_ == o.completions_ && entry_keys_ == o.entry_keys_;
}

TransitionTable build_transition_table(const Lexicon& lexicon, const Vocabulary& vocab) {
  if (lexicon.entries.empty()) throw ValueError("cannot build a table from an empty lexicon");
  const std::size_t V = vocab.size();

  // Pointer trie first; numbered breadth-first afterwards.
  struct Node {
    std::map<TokenId, std::size_t> children;
    std::vector<EntryId> words;
  };
  std::vector<Node> trie(1);
  for (EntryId e = 0; e < lexicon.entries.size(); ++e) {
    std::size_t node = 0;
    for (TokenId p : lexicon.entries[e].phonemes) {
      if (p >= V || !vocab.is_phoneme(p)) throw ValueError("lexicon phoneme id out of range");
      auto it = trie[node].children.find(p);
      if (it == trie[node].children.end()) {
        trie.push_back({});
        it = trie[node].children.emplace(p, trie.size() - 1).first;
      }
      node = it->second;
    }
    trie[node].words.push_back(e);
  }

  std::vector<StateId> order(trie.size());
  std::vector<std::size_t> bfs;
  bfs.reserve(trie.size());
  bfs.push_back(0);
  for (std::size_t head = 0; head < bfs.size(); ++head) {
    order[bfs[head]] = static_cast<StateId>(head);
    for (const auto& [tok, child] : trie[bfs[head]].children) bfs.push_back(child);
  }

  const std::size_t S = trie.size() + 1;
  const auto sink = static_cast<StateId>(S - 1);
  std::vector<StateId> cells(S * V, sink);
  std::vector<std::vector<EntryId>> completions(S);
  for (std::size_t n = 0; n < trie.size(); ++n) {
    StateId s = order[n];
    for (const auto& [tok, child] : trie[n].children) cells[s * V + tok] = order[child];
    completions[s] = trie[n].words;
    if (!trie[n].words.empty()) cells[s * V + vocab.space_id()] = TransitionTable::kRoot;
  }

  std::vector<std::string> keys;
  keys.reserve(lexicon.entries.size());
  for (const auto& e : lexicon.entries) keys.push_back(e.key);
  return TransitionTable(S, V, sink, std::move(cells), std::move(completions), std::move(keys));
}

void TransitionTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(kTableMagic.data(), kTableMagic.size());
  put_u32(out, kTableVersion);
  put_u32(out, static_cast<std::uint32_t>(num_states_));
  put_u32(out, static_cast<std::uint32_t>(num_tokens_));
  put_u32(out, sink_);
  out.write(reinterpret_cast<const char*>(cells_.data()),
            static_cast<std::streamsize>(cells_.size() * sizeof(StateId)));
  std::uint32_t records = 0;
  for (const auto& c : completions_) records += c.empty() ? 0 : 1;
  put_u32(out, records);
  for (StateId s = 0; s < num_states_; ++s) {
    if (completions_[s].empty()) continue;
    put_u32(out, s);
    put_u32(out, static_cast<std::uint32_t>(completions_[s].size()));
    for (EntryId e : completions_[s]) put_u32(out, e);
  }
  put_u32(out, static_cast<std::uint32_t>(entry_keys_.size()));
  for (const auto& k : entry_keys_) {
    put_u32(out, static_cast<std::uint32_t>(k.size()));
    out.write(k.data(), static_cast<std::streamsize>(k.size()));
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

TransitionTable TransitionTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string name = path.string();
  if (!in) throw FormatError("cannot open " + name);
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kTableMagic) {
    throw FormatError(name + ": bad magic (expected LBTT)");
  }
  if (get_u32(in, name) != kTableVersion) throw FormatError(name + ": unsupported version");
  std::uint32_t S = get_u32(in, name);
  std::uint32_t V = get_u32(in, name);
  std::uint32_t sink = get_u32(in, name);
  std::vector<StateId> cells(static_cast<std::size_t>(S) * V);
  if (!in.read(reinterpret_cast<char*>(cells.data()),
               static_cast<std::streamsize>(cells.size() * sizeof(StateId)))) {
    throw FormatError(name + ": truncated table body");
  }
  for (StateId c : cells) {
    if (c >= S) throw FormatError(name + ": state id out of range");
  }
  std::vector<std::vector<EntryId>> completions(S);
  std::uint32_t records = get_u32(in, name);
  for (std::uint32_t r = 0; r < records; ++r) {
    std::uint32_t s = get_u32(in, name);
    std::uint32_t count = get_u32(in, name);
    if (s >= S) throw FormatError(name + ": completion state out of range");
    for (std::uint32_t i = 0; i < count; ++i) completions[s].push_back(get_u32(in, name));
  }
  std::uint32_t num_keys = get_u32(in, name);
  std::vector<std::string> keys(num_keys);
  for (auto& k : keys) {
    k.resize(get_u32(in, name));
    if (!in.read(k.data(), static_cast<std::streamsize>(k.size()))) {
      throw FormatError(name + ": truncated entry table");
    }
  }
  for (const auto& c : completions) {
    for (EntryId e : c) {
      if (e >= num_keys) throw FormatError(name + ": completion entry out of range");
    }
  }
  return TransitionTable(S, V, sink, std::move(cells), std::move(completions), std::move(keys));
}

}  // namespace lightbeam
