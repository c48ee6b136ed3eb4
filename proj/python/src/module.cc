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

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "lightbeam/cli.h"
#include "lightbeam/decoder.h"
#include "lightbeam/metrics.h"

namespace py = pybind11;
using namespace lightbeam;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

RawLogits to_raw(const FloatArray& a, float frame_ms) {
  if (a.ndim() != 2) throw ShapeError("logits must be a 2-d array (frames x tokens)");
  RawLogits raw;
  raw.frame_duration_ms = frame_ms;
  raw.frames = Matrix<float>(static_cast<std::size_t>(a.shape(0)),
                             static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), raw.frames.data().begin());
  return raw;
}

LogProbMatrix to_logprobs(const DoubleArray& a) {
  if (a.ndim() != 2) throw ShapeError("log-probabilities must be a 2-d array");
  LogProbMatrix m;
  m.frames = Matrix<double>(static_cast<std::size_t>(a.shape(0)),
                            static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.frames.data().begin());
  return m;
}

DoubleArray from_logprobs(const LogProbMatrix& m) {
  DoubleArray out({m.frames.rows(), m.frames.cols()});
  std::copy(m.frames.data().begin(), m.frames.data().end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_lightbeam, m) {
  m.doc() = "Lexicon-constrained CTC beam search with n-gram and delayed LM fusion.";

  auto base = py::register_exception<Error>(m, "LightBeamError", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ValueError>(m, "ValueError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<EmptyBeamError>(m, "EmptyBeamError", base.ptr());
  py::register_exception<MetricError>(m, "MetricError", base.ptr());
  py::register_exception<ScorerError>(m, "ScorerError", base.ptr());

  py::class_<Vocabulary>(m, "Vocabulary")
      .def(py::init<std::vector<std::string>>(), py::arg("tokens"))
      .def("__len__", &Vocabulary::size)
      .def_property_readonly("tokens", &Vocabulary::tokens)
      .def_property_readonly("blank_id", &Vocabulary::blank_id)
      .def_property_readonly("space_id", &Vocabulary::space_id)
      .def("find", &Vocabulary::find);
  m.def("load_vocab", &load_vocab, py::arg("path"));

  py::class_<DecodeConfig>(m, "DecodeConfig")
      .def(py::init<>())
      .def_readwrite("acoustic_scale", &DecodeConfig::acoustic_scale)
      .def_readwrite("beam_size", &DecodeConfig::beam_size)
      .def_readwrite("ortho_beams", &DecodeConfig::ortho_beams)
      .def_readwrite("beam_prune_threshold", &DecodeConfig::beam_prune_threshold)
      .def_readwrite("homophone_prune_threshold", &DecodeConfig::homophone_prune_threshold)
      .def_readwrite("token_insertion_bonus", &DecodeConfig::token_insertion_bonus)
      .def_readwrite("word_boundary_bonus", &DecodeConfig::word_boundary_bonus)
      .def_readwrite("ngram_weight", &DecodeConfig::ngram_weight)
      .def_readwrite("llm_weight", &DecodeConfig::llm_weight)
      .def_readwrite("llm_rescore_interval", &DecodeConfig::llm_rescore_interval)
      .def_readwrite("llm_chunk_size", &DecodeConfig::llm_chunk_size)
      .def("validate", &DecodeConfig::validate)
      .def_static("profile", &DecodeConfig::profile, py::arg("name"))
      .def("to_json", [](const DecodeConfig& c) { return to_json(c).dump(); })
      .def("__eq__", [](const DecodeConfig& a, const DecodeConfig& b) { return a == b; });

  py::class_<Lexicon>(m, "Lexicon")
      .def("__len__", [](const Lexicon& l) { return l.entries.size(); })
      .def_property_readonly("words", [](const Lexicon& l) {
        std::vector<std::string> out;
        for (const auto& e : l.entries) out.push_back(e.surface);
        return out;
      });
  m.def("parse_lexicon", &parse_lexicon, py::arg("text"), py::arg("vocab"));
  m.def("load_lexicon", &load_lexicon, py::arg("path"), py::arg("vocab"));

  py::class_<TransitionTable>(m, "TransitionTable")
      .def_property_readonly("num_states", &TransitionTable::num_states)
      .def_property_readonly("num_tokens", &TransitionTable::num_tokens)
      .def("save", &TransitionTable::save, py::arg("path"))
      .def_static("load", &TransitionTable::load, py::arg("path"));
  m.def("build_transition_table", &build_transition_table, py::arg("lexicon"), py::arg("vocab"));

  py::class_<NGramModel>(m, "NGramModel")
      .def_property_readonly("order", &NGramModel::order)
      .def_property_readonly("unk_present", &NGramModel::unk_present)
      .def("num_ngrams", &NGramModel::num_ngrams, py::arg("n"));
  m.def("parse_arpa", &parse_arpa, py::arg("text"));
  m.def("load_arpa", &load_arpa, py::arg("path"));
  m.def(
      "score_sequence",
      [](const NGramModel& lm, const std::vector<std::string>& words, bool eos) {
        return score_sequence(lm, words, eos);
      },
      py::arg("lm"), py::arg("words"), py::arg("eos") = true);

  py::class_<Scorer>(m, "Scorer");
  py::class_<StubScorer, Scorer>(m, "StubScorer")
      .def(py::init<std::map<std::string, double>>(), py::arg("table"))
      .def(py::init<const NGramModel&>(), py::arg("lm"), py::keep_alive<1, 2>())
      .def(py::init<StubScorer::TextFn>(), py::arg("fn"))
      .def("score_text", &StubScorer::score_text)
      .def_property_readonly("texts_evaluated", &StubScorer::texts_evaluated);

  py::class_<Hypothesis>(m, "Hypothesis")
      .def_readonly("text", &Hypothesis::text)
      .def_readonly("score", &Hypothesis::score)
      .def("__repr__", [](const Hypothesis& h) {
        return "Hypothesis(" + py::repr(py::str(h.text)).cast<std::string>() + ", " +
               std::to_string(h.score) + ")";
      });

  py::class_<DecodeResult>(m, "DecodeResult")
      .def_readonly("text", &DecodeResult::text)
      .def_readonly("score", &DecodeResult::score)
      .def_readonly("nbest", &DecodeResult::nbest)
      .def_readonly("frame_count", &DecodeResult::frame_count)
      .def_readonly("wall_time_s", &DecodeResult::wall_time_s)
      .def_readonly("llm_events", &DecodeResult::llm_events);

  m.def(
      "log_softmax",
      [](const FloatArray& logits, double acoustic_scale) {
        return from_logprobs(scale_log_softmax(to_raw(logits, 0.0f), acoustic_scale));
      },
      py::arg("logits"), py::arg("acoustic_scale") = 1.0,
      "acoustic_scale * log_softmax(logits) row by row.");

  m.def(
      "decode_log_probs",
      [](const DoubleArray& log_probs, const DecodeConfig& config, const TransitionTable& table,
         const Vocabulary& vocab, const NGramModel& lm, Scorer* scorer, bool intermediate_fusion) {
        DecodeOptions opt;
        opt.intermediate_fusion = intermediate_fusion;
        return decode(to_logprobs(log_probs), config, table, vocab, lm, scorer, opt);
      },
      py::arg("log_probs"), py::arg("config"), py::arg("table"), py::arg("vocab"), py::arg("lm"),
      py::arg("scorer") = nullptr, py::arg("intermediate_fusion") = true);

  m.def(
      "decode",
      [](const FloatArray& logits, const DecodeConfig& config, const TransitionTable& table,
         const Vocabulary& vocab, const NGramModel& lm, Scorer* scorer, bool intermediate_fusion) {
        DecodeOptions opt;
        opt.intermediate_fusion = intermediate_fusion;
        auto D = scale_log_softmax(to_raw(logits, 0.0f), config.acoustic_scale);
        return decode(D, config, table, vocab, lm, scorer, opt);
      },
      py::arg("logits"), py::arg("config"), py::arg("table"), py::arg("vocab"), py::arg("lm"),
      py::arg("scorer") = nullptr, py::arg("intermediate_fusion") = true,
      "Decodes raw logits (frames x tokens); the acoustic scale comes from the config.");

  py::class_<WerBreakdown>(m, "WerBreakdown")
      .def_readonly("substitutions", &WerBreakdown::substitutions)
      .def_readonly("insertions", &WerBreakdown::insertions)
      .def_readonly("deletions", &WerBreakdown::deletions)
      .def_readonly("reference_words", &WerBreakdown::reference_words)
      .def_readonly("wer", &WerBreakdown::wer)
      .def_property_readonly("errors", &WerBreakdown::errors);
  m.def(
      "wer",
      [](const std::string& ref, const std::string& hyp, bool keep_punct) {
        return wer(std::string_view(ref), std::string_view(hyp), WerOptions{keep_punct});
      },
      py::arg("reference"), py::arg("hypothesis"), py::arg("keep_punct") = false);
  m.def(
      "rtf",
      [](double seconds, std::size_t frames, double frame_ms) {
        return rtf(seconds, frames, frame_ms).rtf;
      },
      py::arg("processing_time_s"), py::arg("frame_count"), py::arg("frame_duration_ms"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (code, stdout, stderr).");
}
