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

#include "lightbeam/metrics.h"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "lightbeam/common.h"

namespace lightbeam {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<std::string> normalize_words(std::vector<std::string> words, WerOptions options) {
  for (auto& w : words) {
    for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (!options.keep_punct && !words.empty()) {
    std::string& last = words.back();
    while (!last.empty() && (last.back() == '.' || last.back() == '?' || last.back() == '!')) {
      last.pop_back();
    }
    if (last.empty()) words.pop_back();
  }
  return words;
}

WerBreakdown wer(const std::vector<std::string>& reference,
                 const std::vector<std::string>& hypothesis, WerOptions options) {
  const auto ref = normalize_words(reference, options);
  const auto hyp = normalize_words(hypothesis, options);
  if (ref.empty()) throw MetricError("empty reference");
  const std::size_t R = ref.size();
  const std::size_t H = hyp.size();

  // cost[i][j]: edits to turn ref[:i] into hyp[:j].
  std::vector<std::vector<std::size_t>> cost(R + 1, std::vector<std::size_t>(H + 1));
  for (std::size_t i = 0; i <= R; ++i) cost[i][0] = i;
  for (std::size_t j = 0; j <= H; ++j) cost[0][j] = j;
  for (std::size_t i = 1; i <= R; ++i) {
    for (std::size_t j = 1; j <= H; ++j) {
      std::size_t diag = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cost[i][j] = std::min({diag, cost[i][j - 1] + 1, cost[i - 1][j] + 1});
    }
  }

  WerBreakdown b;
  b.reference_words = R;
  std::size_t i = R, j = H;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && cost[i][j] == cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++b.substitutions;
      --i;
      --j;
    } else if (j > 0 && cost[i][j] == cost[i][j - 1] + 1) {
      ++b.insertions;
      --j;
    } else {
      ++b.deletions;
      --i;
    }
  }
  b.wer = static_cast<double>(b.errors()) / static_cast<double>(R);
  return b;
}

WerBreakdown wer(std::string_view reference, std::string_view hypothesis, WerOptions options) {
  return wer(split_words(reference), split_words(hypothesis), options);
}

RtfSample rtf(double processing_time_s, std::size_t frame_count, double frame_duration_ms) {
  RtfSample s;
  s.processing_time_s = processing_time_s;
  s.utterance_duration_s = static_cast<double>(frame_count) * frame_duration_ms / 1000.0;
  if (!(s.utterance_duration_s > 0.0)) throw MetricError("utterance duration must be positive");
  s.rtf = processing_time_s / s.utterance_duration_s;
  return s;
}

}  // namespace lightbeam
