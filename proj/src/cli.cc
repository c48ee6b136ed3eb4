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

#include "lightbeam/cli.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "lightbeam/decoder.h"
#include "lightbeam/frontio.h"
#include "lightbeam/lexicon.h"
#include "lightbeam/manifest.h"
#include "lightbeam/metrics.h"
#include "lightbeam/ngram.h"
#include "lightbeam/scorer.h"

namespace lightbeam {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// Raised for argument combinations CLI11 cannot express.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Raised for inconsistent inputs such as misaligned reference files.
class DataError : public Error {
 public:
  using Error::Error;
};

struct PipelineArgs {
  std::string logits;
  std::string vocab;
  std::string lexicon;
  std::string table;
  std::string arpa;
  std::string config;
  std::vector<std::string> overrides;
  std::string scorer_cmd;
  std::string scorer_addr;
  std::string stub_table;
  std::string stub_arpa;
  double stub_latency_ms = 0.0;
  int workers = 1;
};

void add_pipeline_options(CLI::App* cmd, PipelineArgs& a) {
  cmd->add_option("--logits", a.logits, "Logit file, or a directory of .lblt/.json files")
      ->required();
  cmd->add_option("--vocab", a.vocab, "Token vocabulary, one token per line")->required();
  auto* lex = cmd->add_option("--lexicon", a.lexicon, "Pronunciation lexicon");
  auto* tab = cmd->add_option("--table", a.table, "Precompiled transition table");
  lex->excludes(tab);
  cmd->add_option("--arpa", a.arpa, "N-gram model in ARPA format (optionally gzipped)")
      ->required();
  cmd->add_option("--config", a.config, "Config JSON file, or profile=NAME");
  cmd->add_option("--set", a.overrides, "Override one config field, key=value");
  auto* sc = cmd->add_option("--scorer-cmd", a.scorer_cmd, "Spawn an external scorer");
  auto* sa = cmd->add_option("--scorer-addr", a.scorer_addr, "Connect to a scorer at host:port");
  auto* st = cmd->add_option("--stub-table", a.stub_table, "In-process scorer from a JSON table");
  auto* sn = cmd->add_option("--stub-arpa", a.stub_arpa, "In-process scorer from an ARPA model");
  sc->excludes(sa)->excludes(st)->excludes(sn);
  sa->excludes(st)->excludes(sn);
  st->excludes(sn);
  cmd->add_option("--stub-latency-ms", a.stub_latency_ms,
                  "Sleep per stub scorer batch, to model a remote scorer")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--workers", a.workers, "Utterances decoded in parallel")
      ->check(CLI::PositiveNumber);
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

DecodeConfig resolve_config(const PipelineArgs& a) {
  json j = json::object();
  if (a.config.rfind("profile=", 0) == 0) {
    j["profile"] = a.config.substr(8);
  } else if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw ConfigError("cannot open config " + a.config);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(a.config + ": " + e.what());
    }
  }
  for (const auto& kv : a.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value");
    j[kv.substr(0, eq)] = parse_override_value(kv.substr(eq + 1));
  }
  return config_from_json(j);
}

std::vector<fs::path> list_inputs(const std::string& where) {
  fs::path p(where);
  if (!fs::exists(p)) throw FormatError("no such file or directory: " + where);
  if (!fs::is_directory(p)) return {p};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(p)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    if (ext == ".lblt" || ext == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& x, const fs::path& y) { return x.filename() < y.filename(); });
  if (files.empty()) throw FormatError("no logit files in " + where);
  return files;
}

// Shared read-only components plus what each worker needs to build its own
// scorer connection.
struct Pipeline {
  PipelineArgs args;
  DecodeConfig config;
  std::optional<Vocabulary> vocab;
  TransitionTable table;
  NGramModel ngram;
  NGramModel stub_ngram;
  std::vector<ComponentFile> components;
  std::string scorer_desc = "none";
  std::vector<fs::path> inputs;

  std::unique_ptr<Scorer> make_scorer() const {
    auto latency = std::chrono::microseconds(static_cast<std::int64_t>(args.stub_latency_ms * 1000));
    if (!args.stub_table.empty()) {
      auto s = StubScorer::from_json_file(args.stub_table);
      s->set_batch_latency(latency);
      return s;
    }
    if (!args.stub_arpa.empty()) {
      auto s = std::make_unique<StubScorer>(stub_ngram);
      s->set_batch_latency(latency);
      return s;
    }
    if (!args.scorer_cmd.empty()) {
      return SidecarScorer::spawn(args.scorer_cmd, scorer_timeout_from_env());
    }
    if (!args.scorer_addr.empty()) {
      return SidecarScorer::connect(args.scorer_addr, scorer_timeout_from_env());
    }
    return nullptr;
  }
};

std::unique_ptr<Pipeline> load_pipeline(const PipelineArgs& a) {
  if (a.lexicon.empty() == a.table.empty()) {
    throw UsageError("exactly one of --lexicon or --table is required");
  }
  auto p = std::make_unique<Pipeline>();
  p->args = a;
  p->config = resolve_config(a);
  auto note = [&](const std::string& role, const std::string& path) {
    p->components.push_back({role, path, sha256_file(path)});
  };
  p->vocab.emplace(load_vocab(a.vocab));
  note("vocab", a.vocab);
  if (!a.lexicon.empty()) {
    p->table = build_transition_table(load_lexicon(a.lexicon, *p->vocab), *p->vocab);
    note("lexicon", a.lexicon);
  } else {
    p->table = TransitionTable::load(a.table);
    note("table", a.table);
  }
  p->ngram = load_arpa(a.arpa);
  note("arpa", a.arpa);
  if (!a.config.empty() && a.config.rfind("profile=", 0) != 0) note("config", a.config);
  if (!a.stub_table.empty()) {
    note("stub_table", a.stub_table);
    p->scorer_desc = "stub-table";
  } else if (!a.stub_arpa.empty()) {
    p->stub_ngram = load_arpa(a.stub_arpa);
    note("stub_arpa", a.stub_arpa);
    p->scorer_desc = "stub-arpa";
  } else if (!a.scorer_cmd.empty()) {
    p->scorer_desc = "command: " + a.scorer_cmd;
  } else if (!a.scorer_addr.empty()) {
    p->scorer_desc = "tcp: " + a.scorer_addr;
  }
  p->inputs = list_inputs(a.logits);
  return p;
}

UtteranceRecord decode_one(const Pipeline& p, const DecodeConfig& config, Scorer* scorer,
                           const fs::path& input) {
  UtteranceRecord r;
  r.input = input.string();
  try {
    RawLogits raw = load_logits(input, *p.vocab);
    LogProbMatrix D = scale_log_softmax(raw, config.acoustic_scale);
    DecodeResult res = decode(D, config, p.table, *p.vocab, p.ngram, scorer);
    r.transcript = res.text;
    r.score = res.score;
    r.frames = res.frame_count;
    r.wall_time_s = res.wall_time_s;
    r.rtf = rtf(res.wall_time_s, res.frame_count, raw.frame_duration_ms).rtf;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

std::vector<UtteranceRecord> run_decode(const Pipeline& p, const DecodeConfig& config) {
  std::vector<UtteranceRecord> records(p.inputs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::unique_ptr<Scorer> scorer;
    std::string scorer_error;
    try {
      scorer = p.make_scorer();
    } catch (const std::exception& e) {
      scorer_error = e.what();
    }
    for (std::size_t i; (i = next.fetch_add(1)) < p.inputs.size();) {
      if (!scorer_error.empty()) {
        records[i].input = p.inputs[i].string();
        records[i].error = scorer_error;
        continue;
      }
      records[i] = decode_one(p, config, scorer.get(), p.inputs[i]);
    }
  };
  std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(p.args.workers), p.inputs.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < n; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return records;
}

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(10) << x;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

int cmd_decode(const PipelineArgs& a, const std::string& out_dir, std::ostream& out,
               std::ostream& err) {
  auto start = std::chrono::steady_clock::now();
  auto p = load_pipeline(a);
  RunManifest m;
  m.config = to_json(p->config);
  m.scorer = p->scorer_desc;
  m.components = p->components;
  m.utterances = run_decode(*p, p->config);
  m.peak_rss_bytes = peak_rss_bytes();
  m.total_wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(out_dir);
  std::string transcripts;
  std::string csv = "utterance,frames,wall_time_s,rtf\n";
  std::size_t failures = 0;
  for (const auto& u : m.utterances) {
    transcripts += u.transcript + "\n";
    csv += u.input + "," + std::to_string(u.frames) + "," + fmt(u.wall_time_s) + "," +
           fmt(u.rtf) + "\n";
    if (u.error) {
      ++failures;
      err << u.input << ": " << *u.error << "\n";
    }
  }
  write_text(fs::path(out_dir) / "transcripts.txt", transcripts);
  write_text(fs::path(out_dir) / "rtf.csv", csv);
  write_text(fs::path(out_dir) / "manifest.json", to_json(m).dump(2) + "\n");
  out << "decoded " << (m.utterances.size() - failures) << "/" << m.utterances.size()
      << " utterances into " << out_dir << "\n";
  return failures ? kExitFailure : kExitOk;
}

int cmd_build_table(const std::string& vocab_path, const std::string& lexicon_path,
                    const std::string& out_path, std::ostream& out) {
  Vocabulary vocab = load_vocab(vocab_path);
  TransitionTable table = build_transition_table(load_lexicon(lexicon_path, vocab), vocab);
  table.save(out_path);
  out << "wrote " << out_path << ": " << table.num_states() << " states x "
      << table.num_tokens() << " tokens, " << table.num_entries() << " entries\n";
  return kExitOk;
}

struct EvalArgs {
  std::string ref;
  std::string hyp;
  bool keep_punct = false;
  std::string json_out;
  std::string csv_out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  auto refs = read_lines(a.ref);
  auto hyps = read_lines(a.hyp);
  if (refs.size() != hyps.size()) {
    throw DataError("reference has " + std::to_string(refs.size()) +
                    " lines but hypothesis has " + std::to_string(hyps.size()));
  }
  WerOptions opts{a.keep_punct};
  std::size_t S = 0, I = 0, D = 0, N = 0;
  double sum = 0.0;
  std::string csv = "utterance,reference_words,substitutions,insertions,deletions,wer\n";
  for (std::size_t i = 0; i < refs.size(); ++i) {
    WerBreakdown b;
    try {
      b = wer(refs[i], hyps[i], opts);
    } catch (const MetricError& e) {
      throw DataError("line " + std::to_string(i + 1) + ": " + e.what());
    }
    S += b.substitutions;
    I += b.insertions;
    D += b.deletions;
    N += b.reference_words;
    sum += b.wer;
    csv += std::to_string(i + 1) + "," + std::to_string(b.reference_words) + "," +
           std::to_string(b.substitutions) + "," + std::to_string(b.insertions) + "," +
           std::to_string(b.deletions) + "," + fmt(b.wer) + "\n";
  }
  ordered_json summary;
  summary["utterances"] = refs.size();
  summary["reference_words"] = N;
  summary["substitutions"] = S;
  summary["insertions"] = I;
  summary["deletions"] = D;
  summary["wer"] = N ? static_cast<double>(S + I + D) / static_cast<double>(N) : 0.0;
  summary["mean_utterance_wer"] = refs.empty() ? 0.0 : sum / static_cast<double>(refs.size());
  if (!a.csv_out.empty()) write_text(a.csv_out, csv);
  if (!a.json_out.empty()) {
    write_text(a.json_out, summary.dump(2) + "\n");
  } else {
    out << summary.dump(2) << "\n";
  }
  return kExitOk;
}

struct BenchSummary {
  double mean_rtf = 0.0;
  double max_rtf = 0.0;
  std::optional<double> mean_wer;
};

// CSV rows for one run plus its summary. `refs` may be empty.
BenchSummary bench_rows(const std::vector<UtteranceRecord>& records,
                        const std::vector<std::string>& refs, std::string* csv) {
  if (!refs.empty() && refs.size() != records.size()) {
    throw DataError("manifest has " + std::to_string(records.size()) +
                    " utterances but the reference has " + std::to_string(refs.size()) +
                    " lines");
  }
  BenchSummary s;
  double wer_sum = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    s.mean_rtf += r.rtf;
    s.max_rtf = std::max(s.max_rtf, r.rtf);
    std::string row = r.input + "," + fmt(r.rtf) + "," + std::to_string(r.frames) + "," +
                      fmt(r.score);
    if (!refs.empty()) {
      double w;
      try {
        w = wer(refs[i], r.transcript).wer;
      } catch (const MetricError& e) {
        throw DataError("reference line " + std::to_string(i + 1) + ": " + e.what());
      }
      wer_sum += w;
      row += "," + fmt(w);
    }
    if (csv) *csv += row + "\n";
  }
  if (!records.empty()) {
    s.mean_rtf /= static_cast<double>(records.size());
    if (!refs.empty()) s.mean_wer = wer_sum / static_cast<double>(records.size());
  }
  return s;
}

struct BenchArgs {
  std::string manifest;
  std::string ref;
  std::string csv_out;
  std::string summary_out;
  std::vector<int> sweep;
  PipelineArgs pipeline;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  std::vector<std::string> refs;
  if (!a.ref.empty()) refs = read_lines(a.ref);
  std::string csv;
  ordered_json summary;
  if (a.sweep.empty()) {
    if (a.manifest.empty()) throw UsageError("bench needs --manifest or --sweep");
    RunManifest m = load_manifest(a.manifest);
    csv = std::string("utterance,rtf,frames,score") + (refs.empty() ? "" : ",wer") + "\n";
    BenchSummary s = bench_rows(m.utterances, refs, &csv);
    summary["utterances"] = m.utterances.size();
    summary["mean_rtf"] = s.mean_rtf;
    summary["max_rtf"] = s.max_rtf;
    summary["mean_wer"] = s.mean_wer ? ordered_json(*s.mean_wer) : ordered_json(nullptr);
  } else {
    if (!a.manifest.empty()) throw UsageError("--manifest and --sweep are exclusive");
    auto p = load_pipeline(a.pipeline);
    csv = "llm_rescore_interval,mean_rtf,max_rtf,mean_wer\n";
    summary["sweep"] = ordered_json::array();
    for (int interval : a.sweep) {
      DecodeConfig config = p->config;
      config.llm_rescore_interval = interval;
      config.validate();
      auto records = run_decode(*p, config);
      for (const auto& r : records) {
        if (r.error) throw DataError(r.input + ": " + *r.error);
      }
      BenchSummary s = bench_rows(records, refs, nullptr);
      csv += std::to_string(interval) + "," + fmt(s.mean_rtf) + "," + fmt(s.max_rtf) + "," +
             (s.mean_wer ? fmt(*s.mean_wer) : std::string()) + "\n";
      summary["sweep"].push_back(
          {{"llm_rescore_interval", interval},
           {"mean_rtf", s.mean_rtf},
           {"max_rtf", s.max_rtf},
           {"mean_wer", s.mean_wer ? ordered_json(*s.mean_wer) : ordered_json(nullptr)}});
    }
  }
  if (!a.csv_out.empty()) {
    write_text(a.csv_out, csv);
  } else {
    out << csv;
  }
  if (!a.summary_out.empty()) {
    write_text(a.summary_out, summary.dump(2) + "\n");
  } else {
    out << summary.dump(2) << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LightBeam: lexicon-constrained CTC beam search with LM fusion", "lightbeam"};
  app.require_subcommand(1);

  PipelineArgs decode_args;
  std::string out_dir;
  auto* decode_cmd = app.add_subcommand("decode", "Decode logit files");
  add_pipeline_options(decode_cmd, decode_args);
  decode_cmd->add_option("--out", out_dir, "Output directory")->required();

  std::string bt_vocab, bt_lexicon, bt_out;
  auto* bt_cmd = app.add_subcommand("build-table", "Compile a lexicon into a transition table");
  bt_cmd->add_option("--vocab", bt_vocab)->required();
  bt_cmd->add_option("--lexicon", bt_lexicon)->required();
  bt_cmd->add_option("--out", bt_out)->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Word error rate of aligned text files");
  eval_cmd->add_option("--ref", eval_args.ref, "Reference, one utterance per line")->required();
  eval_cmd->add_option("--hyp", eval_args.hyp, "Hypothesis, one utterance per line")->required();
  eval_cmd->add_flag("--keep-punct", eval_args.keep_punct, "Score final punctuation too");
  eval_cmd->add_option("--json", eval_args.json_out, "Summary output (default: stdout)");
  eval_cmd->add_option("--csv", eval_args.csv_out, "Per-utterance CSV output");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "RTF and WER report from a run or a sweep");
  bench_cmd->add_option("--manifest", bench_args.manifest, "Manifest of a finished run");
  bench_cmd->add_option("--ref", bench_args.ref, "Reference transcripts");
  bench_cmd->add_option("--csv", bench_args.csv_out, "CSV output (default: stdout)");
  bench_cmd->add_option("--summary", bench_args.summary_out, "Summary JSON (default: stdout)");
  bench_cmd->add_option("--sweep", bench_args.sweep, "Rescoring intervals to decode with")
      ->delimiter(',');
  // Sweep mode takes the decode inputs; none of them are required otherwise.
  {
    auto& p = bench_args.pipeline;
    bench_cmd->add_option("--logits", p.logits);
    bench_cmd->add_option("--vocab", p.vocab);
    bench_cmd->add_option("--lexicon", p.lexicon);
    bench_cmd->add_option("--table", p.table);
    bench_cmd->add_option("--arpa", p.arpa);
    bench_cmd->add_option("--config", p.config);
    bench_cmd->add_option("--set", p.overrides);
    bench_cmd->add_option("--scorer-cmd", p.scorer_cmd);
    bench_cmd->add_option("--scorer-addr", p.scorer_addr);
    bench_cmd->add_option("--stub-table", p.stub_table);
    bench_cmd->add_option("--stub-arpa", p.stub_arpa);
    bench_cmd->add_option("--stub-latency-ms", p.stub_latency_ms)->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--workers", p.workers)->check(CLI::PositiveNumber);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*decode_cmd) return cmd_decode(decode_args, out_dir, out, err);
    if (*bt_cmd) return cmd_build_table(bt_vocab, bt_lexicon, bt_out, out);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*bench_cmd) {
      if (!bench_args.sweep.empty()) {
        const auto& p = bench_args.pipeline;
        if (p.logits.empty() || p.vocab.empty() || p.arpa.empty()) {
          throw UsageError("--sweep needs --logits, --vocab and --arpa");
        }
      }
      return cmd_bench(bench_args, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace lightbeam
