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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lightbeam {

struct WerBreakdown {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t reference_words = 0;
  double wer = 0.0;

  std::size_t errors() const { return substitutions + insertions + deletions; }
};

struct WerOptions {
  /// Keep trailing sentence punctuation on the last word.
  bool keep_punct = false;
};

/// Lowercases and, unless told otherwise, strips trailing [.?!] from the
/// last word (a word that was only punctuation disappears).
std::vector<std::string> normalize_words(std::vector<std::string> words, WerOptions options = {});

/// Whitespace tokenization.
std::vector<std::string> split_words(std::string_view text);

/// Levenshtein alignment. Ties between equally short scripts prefer
/// substitution, then insertion, then deletion. Throws MetricError on an
/// empty reference.
WerBreakdown wer(const std::vector<std::string>& reference,
                 const std::vector<std::string>& hypothesis, WerOptions options = {});
WerBreakdown wer(std::string_view reference, std::string_view hypothesis,
                 WerOptions options = {});

struct RtfSample {
  double processing_time_s = 0.0;
  double utterance_duration_s = 0.0;
  double rtf = 0.0;
};

/// Throws MetricError when the utterance duration is not positive.
RtfSample rtf(double processing_time_s, std::size_t frame_count, double frame_duration_ms);

}  // namespace lightbeam
