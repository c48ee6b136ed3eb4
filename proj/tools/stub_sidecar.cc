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

// Serves a deterministic stub scorer over the JSON-lines protocol, on
// stdin/stdout or on a TCP address. Used to exercise the sidecar client.

#include <unistd.h>

#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "lightbeam/ngram.h"
#include "lightbeam/scorer.h"

int main(int argc, char** argv) {
  CLI::App app{"Stub scorer speaking the LightBeam scorer protocol", "lightbeam-stub-sidecar"};
  std::string table_path, arpa_path, addr;
  double latency_ms = 0.0;
  auto* t = app.add_option("--table", table_path, "JSON object mapping text to score");
  auto* a = app.add_option("--arpa", arpa_path, "Score texts with this n-gram model");
  t->excludes(a);
  app.add_option("--addr", addr, "Listen on host:port instead of stdin/stdout");
  app.add_option("--latency-ms", latency_ms, "Sleep per batch")->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    lightbeam::NGramModel model;
    std::unique_ptr<lightbeam::StubScorer> scorer;
    if (!arpa_path.empty()) {
      model = lightbeam::load_arpa(arpa_path);
      scorer = std::make_unique<lightbeam::StubScorer>(model);
    } else if (!table_path.empty()) {
      scorer = lightbeam::StubScorer::from_json_file(table_path);
    } else {
      scorer = std::make_unique<lightbeam::StubScorer>(std::map<std::string, double>{});
    }
    scorer->set_batch_latency(
        std::chrono::microseconds(static_cast<std::int64_t>(latency_ms * 1000)));
    if (!addr.empty()) lightbeam::serve_scorer_tcp(*scorer, addr);
    lightbeam::serve_scorer(*scorer, STDIN_FILENO, STDOUT_FILENO);
  } catch (const std::exception& e) {
    std::cerr << "lightbeam-stub-sidecar: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
