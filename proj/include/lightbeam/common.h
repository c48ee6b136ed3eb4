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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lightbeam {

using TokenId = std::uint32_t;
using StateId = std::uint32_t;
using LmStateId = std::uint32_t;
using EntryId = std::uint32_t;

// Finite stand-in for -infinity; sums of a few of these stay finite.
inline constexpr double kNegInf = -1e30;

// Anything at or below this is treated as pruned.
inline constexpr double kDeadScore = -1e29;

inline bool is_dead(double score) { return score <= kDeadScore; }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ValueError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptyBeamError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class ScorerError : public Error {
 public:
  ScorerError(std::uint64_t request_id, const std::string& what)
      : Error("scorer request " + std::to_string(request_id) + ": " + what),
        request_id_(request_id) {}
  std::uint64_t request_id() const { return request_id_; }

 private:
  std::uint64_t request_id_;
};

}  // namespace lightbeam
