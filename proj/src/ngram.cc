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

#include "lightbeam/ngram.h"

#include <zlib.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lightbeam {

namespace {

std::size_t hash_words(const std::vector<WordId>& key) {
  // FNV-1a over the ids.
  std::uint64_t h = 1469598103934665603ULL;
  for (WordId w : key) {
    h ^= w;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  // from_chars for double needs GCC 11+, which is our floor.
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

FormatError arpa_error(std::size_t line, const std::string& what) {
  return FormatError("ARPA line " + std::to_string(line) + ": " + what);
}

std::string gunzip_file(const std::filesystem::path& path) {
  gzFile gz = gzopen(path.c_str(), "rb");
  if (!gz) throw FormatError("cannot open " + path.string());
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(gz, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(n));
  bool failed = n < 0;
  gzclose(gz);
  if (failed) throw FormatError(path.string() + ": corrupt gzip stream");
  return out;
}

constexpr double kLn10 = std::numbers::ln10;

}  // namespace

std::size_t NGramModel::KeyHash::operator()(const std::vector<WordId>& key) const noexcept {
  return hash_words(key);
}

std::size_t LmStateRegistry::KeyHash::operator()(const std::vector<WordId>& key) const noexcept {
  return hash_words(key);
}

NGramModel::NGramModel(NGramModel&& o) noexcept
    : order_(o.order_),
      unk_present_(o.unk_present_),
      words_(std::move(o.words_)),
      listed_(std::move(o.listed_)),
      word_index_(std::move(o.word_index_)),
      tables_(std::move(o.tables_)),
      bos_id_(o.bos_id_),
      eos_id_(o.eos_id_),
      lookups_(o.lookups_.load()) {}

NGramModel& NGramModel::operator=(NGramModel&& o) noexcept {
  order_ = o.order_;
  unk_present_ = o.unk_present_;
  words_ = std::move(o.words_);
  listed_ = std::move(o.listed_);
  word_index_ = std::move(o.word_index_);
  tables_ = std::move(o.tables_);
  bos_id_ = o.bos_id_;
  eos_id_ = o.eos_id_;
  lookups_.store(o.lookups_.load());
  return *this;
}

std::optional<WordId> NGramModel::word_id(std::string_view word) const {
  auto it = word_index_.find(std::string(word));
  if (it == word_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<WordId> NGramModel::unk_id() const {
  if (!unk_present_) return std::nullopt;
  return word_id(kUnk);
}

WordId NGramModel::intern(const std::string& word) {
  auto [it, inserted] = word_index_.emplace(word, static_cast<WordId>(words_.size()));
  if (inserted) {
    words_.push_back(word);
    listed_.push_back(false);
  }
  return it->second;
}

const NGramEntry* NGramModel::find(std::span<const WordId> ngram) const {
  lookups_.fetch_add(1, std::memory_order_relaxed);
  if (ngram.empty() || ngram.size() > tables_.size()) return nullptr;
  const auto& table = tables_[ngram.size() - 1];
  auto it = table.find(std::vector<WordId>(ngram.begin(), ngram.end()));
  return it == table.end() ? nullptr : &it->second;
}

NGramModel parse_arpa(std::string_view text) {
  NGramModel model;
  model.bos_id_ = model.intern(std::string(kBos));
  model.eos_id_ = model.intern(std::string(kEos));

  std::vector<std::size_t> declared;
  std::vector<std::size_t> seen;
  enum class Section { kPreamble, kData, kNgrams, kEnd } section = Section::kPreamble;
  int current = 0;
  bool saw_unk = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size() && section != Section::kEnd) {
    if (pos == text.size()) break;
    std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                         : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line == "\\data\\") {
      if (section != Section::kPreamble) throw arpa_error(line_no, "duplicate \\data\\");
      section = Section::kData;
      continue;
    }
    if (line == "\\end\\") {
      if (section == Section::kPreamble) throw arpa_error(line_no, "\\end\\ before \\data\\");
      section = Section::kEnd;
      continue;
    }
    if (line.front() == '\\') {
      // "\N-grams:"
      int n = 0;
      auto res = std::from_chars(line.data() + 1, line.data() + line.size(), n);
      if (res.ec != std::errc() || std::string_view(res.ptr, line.data() + line.size() - res.ptr) !=
                                       "-grams:") {
        throw arpa_error(line_no, "unrecognised section header");
      }
      if (section == Section::kPreamble) throw arpa_error(line_no, "missing \\data\\");
      if (n < 1 || static_cast<std::size_t>(n) > declared.size()) {
        throw arpa_error(line_no, "section for undeclared order " + std::to_string(n));
      }
      if (n != current + 1) throw arpa_error(line_no, "n-gram sections out of order");
      if (current > 0 && seen[current - 1] != declared[current - 1]) {
        throw arpa_error(line_no, std::to_string(current) + "-gram count mismatch: declared " +
                                      std::to_string(declared[current - 1]) + ", found " +
                                      std::to_string(seen[current - 1]));
      }
      current = n;
      section = Section::kNgrams;
      continue;
    }

    switch (section) {
      case Section::kPreamble:
        continue;  // free text before \data\ is allowed
      case Section::kData: {
        // "ngram N=count"
        if (line.rfind("ngram ", 0) != 0) throw arpa_error(line_no, "expected 'ngram N=count'");
        auto body = trim(line.substr(6));
        auto eq = body.find('=');
        if (eq == std::string_view::npos) throw arpa_error(line_no, "expected 'ngram N=count'");
        std::size_t n = 0, count = 0;
        auto a = trim(body.substr(0, eq));
        auto b = trim(body.substr(eq + 1));
        if (std::from_chars(a.data(), a.data() + a.size(), n).ec != std::errc() ||
            std::from_chars(b.data(), b.data() + b.size(), count).ec != std::errc()) {
          throw arpa_error(line_no, "bad n-gram count");
        }
        if (n != declared.size() + 1) throw arpa_error(line_no, "n-gram counts out of order");
        declared.push_back(count);
        seen.push_back(0);
        model.tables_.emplace_back();
        continue;
      }
      case Section::kNgrams: {
        auto fields = split_ws(line);
        const auto n = static_cast<std::size_t>(current);
        if (fields.size() != n + 1 && fields.size() != n + 2) {
          throw arpa_error(line_no, "expected " + std::to_string(n + 1) + " or " +
                                        std::to_string(n + 2) + " fields");
        }
        NGramEntry entry;
        double lp = 0.0, bo = 0.0;
        if (!parse_double(fields[0], lp)) throw arpa_error(line_no, "bad probability");
        if (lp > 0.0) throw arpa_error(line_no, "positive log probability");
        if (fields.size() == n + 2 && !parse_double(fields[n + 1], bo)) {
          throw arpa_error(line_no, "bad backoff weight");
        }
        entry.log_prob = lp * kLn10;
        entry.backoff = bo * kLn10;
        std::vector<WordId> key;
        key.reserve(n);
        for (std::size_t i = 1; i <= n; ++i) {
          std::string word(fields[i]);
          if (n == 1) {
            key.push_back(model.intern(word));
            model.listed_[key.back()] = true;
            if (word == kUnk) saw_unk = true;
          } else {
            auto id = model.word_id(word);
            if (!id || !model.tables_[0].count({*id})) {
              throw arpa_error(line_no, "word '" + word + "' has no unigram");
            }
            key.push_back(*id);
          }
        }
        if (n >= 2) {
          std::vector<WordId> history(key.begin(), key.end() - 1);
          if (!model.tables_[n - 2].count(history)) {
            throw arpa_error(line_no, "history of n-gram is not itself an n-gram");
          }
        }
        if (!model.tables_[n - 1].emplace(std::move(key), entry).second) {
          throw arpa_error(line_no, "duplicate n-gram");
        }
        ++seen[n - 1];
        continue;
      }
      case Section::kEnd:
        break;
    }
  }

  if (section != Section::kEnd) throw arpa_error(line_no, "missing \\end\\ marker");
  if (declared.empty()) throw arpa_error(line_no, "no n-gram counts declared");
  for (std::size_t n = 0; n < declared.size(); ++n) {
    if (seen[n] != declared[n]) {
      throw arpa_error(line_no, std::to_string(n + 1) + "-gram count mismatch: declared " +
                                    std::to_string(declared[n]) + ", found " +
                                    std::to_string(seen[n]));
    }
  }
  for (std::size_t n = declared.size(); n > 0; --n) {
    if (declared[n - 1] > 0) {
      model.order_ = static_cast<int>(n);
      break;
    }
  }
  if (model.order_ == 0) throw FormatError("ARPA model has no n-grams");
  model.tables_.resize(static_cast<std::size_t>(model.order_));
  model.unk_present_ = saw_unk;
  return model;
}

NGramModel load_arpa(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  unsigned char magic[2] = {0, 0};
  in.read(reinterpret_cast<char*>(magic), 2);
  std::string text;
  if (in.gcount() == 2 && magic[0] == 0x1f && magic[1] == 0x8b) {
    in.close();
    text = gunzip_file(path);
  } else {
    in.clear();
    in.seekg(0);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  try {
    return parse_arpa(text);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

LmStateRegistry::LmStateRegistry(const NGramModel& model) {
  intern({model.bos_id()});
}

LmStateId LmStateRegistry::intern(const std::vector<WordId>& history) {
  auto [it, inserted] = index_.emplace(history, static_cast<LmStateId>(histories_.size()));
  if (inserted) histories_.push_back(history);
  return it->second;
}

const std::vector<WordId>& LmStateRegistry::history(LmStateId id) const {
  if (id >= histories_.size()) {
    throw std::logic_error("unregistered LM state " + std::to_string(id));
  }
  return histories_[id];
}

const WordScore* TransitionCache::find(LmStateId state, WordId word) const {
  auto it = map_.find((static_cast<std::uint64_t>(state) << 32) | word);
  return it == map_.end() ? nullptr : &it->second;
}

void TransitionCache::insert(LmStateId state, WordId word, WordScore value) {
  map_.emplace((static_cast<std::uint64_t>(state) << 32) | word, value);
}

WordScore score_word(const NGramModel& model, LmStateRegistry& registry, TransitionCache* cache,
                     LmStateId state, std::string_view word) {
  const std::vector<WordId>& history = registry.history(state);
  std::optional<WordId> id = model.word_id(word);
  if (!id || *id == model.bos_id() || (*id != model.eos_id() && !model.listed(*id))) {
    id = model.unk_id();
  }
  if (!id) return {kNegInf, state};
  if (cache) {
    if (const WordScore* hit = cache->find(state, *id)) return *hit;
  }

  std::vector<WordId> full(history);
  full.push_back(*id);

  double score = 0.0;
  bool found = false;
  for (std::size_t start = 0; start < full.size(); ++start) {
    std::span<const WordId> ngram(full.data() + start, full.size() - start);
    if (const NGramEntry* e = model.find(ngram)) {
      score += e->log_prob;
      found = true;
      break;
    }
    std::span<const WordId> context(full.data() + start, full.size() - start - 1);
    if (!context.empty()) {
      if (const NGramEntry* c = model.find(context)) score += c->backoff;
    }
  }
  if (!found) score = kNegInf;

  // Longest suffix of history+word that is itself a listed n-gram, capped at
  // order-1 words.
  std::vector<WordId> successor;
  std::size_t max_len = std::min(full.size(), static_cast<std::size_t>(model.order() - 1));
  for (std::size_t len = max_len; len > 0; --len) {
    std::span<const WordId> suffix(full.data() + full.size() - len, len);
    if (model.find(suffix)) {
      successor.assign(suffix.begin(), suffix.end());
      break;
    }
  }
  WordScore result{score, registry.intern(successor)};
  if (cache) cache->insert(state, *id, result);
  return result;
}

double score_sequence(const NGramModel& model, std::span<const std::string> words,
                      bool include_eos) {
  LmStateRegistry registry(model);
  TransitionCache cache;
  LmStateId state = 0;
  double total = 0.0;
  for (const auto& w : words) {
    WordScore s = score_word(model, registry, &cache, state, w);
    total += s.log_prob;
    state = s.next_state;
  }
  if (include_eos) total += score_word(model, registry, &cache, state, kEos).log_prob;
  return total;
}

}  // namespace lightbeam
