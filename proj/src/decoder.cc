// Copyright (c) 2026 acbias authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "acbias/decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "json.hpp"

#include "acbias/errors.h"
#include "acbias/text_util.h"

namespace acbias {

namespace {

using json = nlohmann::json;

double RowLogSumExp(const double* row, int32_t n) {
  double hi = -std::numeric_limits<double>::infinity();
  for (int32_t i = 0; i < n; ++i) hi = std::max(hi, row[i]);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  double sum = 0.0;
  for (int32_t i = 0; i < n; ++i) sum += std::exp(row[i] - hi);
  return hi + std::log(sum);
}

// In-flight beam hypothesis; the token sequence lives in the map key.
struct BeamState {
  double base = 0.0;
  MatchState ctx;
};

using BeamMap = std::map<std::vector<int32_t>, BeamState>;

void MergeHypothesis(BeamMap* beams, std::vector<int32_t>&& tokens,
                     const BeamState& cand) {
  auto it = beams->find(tokens);
  if (it == beams->end()) {
    beams->emplace(std::move(tokens), cand);
  } else {
    // Same token sequence ⇒ identical context state; only the path
    // probability mass differs.
    it->second.base = LogSumExp(it->second.base, cand.base);
  }
}

}  // namespace

EmissionMatrix ParseEmissionMatrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("emission matrix: empty input");
  }
  std::vector<std::string_view> header = SplitFields(StripCr(line));
  if (header.size() != 4) {
    throw FormatError("emission matrix: header must be 'T V blank_id "
                      "frame_shift_s'");
  }
  EmissionMatrix em;
  double t_val = 0.0, v_val = 0.0, blank_val = 0.0;
  if (!TryParseDouble(header[0], &t_val) || !TryParseDouble(header[1], &v_val) ||
      !TryParseDouble(header[2], &blank_val) ||
      !TryParseDouble(header[3], &em.frame_shift_s) ||
      t_val != std::floor(t_val) || v_val != std::floor(v_val) ||
      blank_val != std::floor(blank_val)) {
    throw FormatError("emission matrix: malformed header fields");
  }
  em.num_frames = static_cast<int32_t>(t_val);
  em.vocab_size = static_cast<int32_t>(v_val);
  em.blank_id = static_cast<int32_t>(blank_val);
  if (em.num_frames < 0 || em.vocab_size < 1) {
    throw FormatError("emission matrix: need T >= 0 and V >= 1");
  }
  if (em.blank_id < 0 || em.blank_id >= em.vocab_size) {
    throw FormatError("emission matrix: blank_id out of range");
  }
  if (!(em.frame_shift_s > 0.0) || !std::isfinite(em.frame_shift_s)) {
    throw FormatError("emission matrix: frame_shift_s must be positive");
  }

  em.logprobs.reserve(static_cast<size_t>(em.num_frames) * em.vocab_size);
  for (int32_t t = 0; t < em.num_frames; ++t) {
    if (!std::getline(in, line)) {
      throw FormatError("emission matrix: expected " +
                        std::to_string(em.num_frames) + " rows, got " +
                        std::to_string(t));
    }
    std::vector<std::string_view> fields = SplitFields(StripCr(line));
    if (static_cast<int32_t>(fields.size()) != em.vocab_size) {
      throw FormatError("emission matrix: row " + std::to_string(t) + " has " +
                        std::to_string(fields.size()) + " values, expected " +
                        std::to_string(em.vocab_size));
    }
    for (std::string_view field : fields) {
      double v = 0.0;
      if (!TryParseDouble(field, &v) || std::isnan(v) ||
          v == std::numeric_limits<double>::infinity()) {
        throw FormatError("emission matrix: bad value '" + std::string(field) +
                          "' in row " + std::to_string(t));
      }
      em.logprobs.push_back(v);
    }
    double lse = RowLogSumExp(
        em.logprobs.data() + static_cast<size_t>(t) * em.vocab_size,
        em.vocab_size);
    if (!(std::abs(lse) <= 1e-3)) {
      throw FormatError("emission matrix: row " + std::to_string(t) +
                        " is not a normalized distribution (log-sum-exp " +
                        FormatDouble(lse) + ")");
    }
  }
  while (std::getline(in, line)) {
    if (!SplitFields(StripCr(line)).empty()) {
      throw FormatError("emission matrix: trailing content after last row");
    }
  }
  return em;
}

void WriteEmissionMatrix(const EmissionMatrix& em, std::ostream& out) {
  out << em.num_frames << ' ' << em.vocab_size << ' ' << em.blank_id << ' '
      << FormatDouble(em.frame_shift_s) << '\n';
  for (int32_t t = 0; t < em.num_frames; ++t) {
    for (int32_t v = 0; v < em.vocab_size; ++v) {
      if (v > 0) out << ' ';
      out << FormatDouble(em.At(t, v));
    }
    out << '\n';
  }
}

std::vector<DecodedHypothesis> BeamSearchFuse(const EmissionMatrix& em,
                                              const ContextGraph* graph,
                                              const DecodeOptions& opts) {
  if (opts.beam < 1) {
    throw ConfigError("decoder: beam width must be >= 1");
  }
  if (!(opts.lambda_ctx >= 0.0) || !std::isfinite(opts.lambda_ctx)) {
    throw ConfigError("decoder: lambda_ctx must be finite and >= 0");
  }

  BeamMap beams;
  beams.emplace(std::vector<int32_t>{}, BeamState{});

  for (int32_t t = 0; t < em.num_frames; ++t) {
    BeamMap next;
    for (const auto& [tokens, state] : beams) {
      // Blank: probability mass only, context untouched.
      BeamState blank_ext = state;
      blank_ext.base += em.At(t, em.blank_id);
      MergeHypothesis(&next, std::vector<int32_t>(tokens), blank_ext);

      for (int32_t k = 0; k < em.vocab_size; ++k) {
        if (k == em.blank_id) continue;
        BeamState ext = state;
        ext.base += em.At(t, k);
        if (graph != nullptr) graph->Advance(&ext.ctx, k);
        std::vector<int32_t> ext_tokens = tokens;
        ext_tokens.push_back(k);
        MergeHypothesis(&next, std::move(ext_tokens), ext);
      }
    }

    if (static_cast<int>(next.size()) > opts.beam) {
      // Keep the top `beam` by pruning key; map order makes equal keys
      // resolve to lexicographically smaller token sequences.
      std::vector<std::pair<double, const std::vector<int32_t>*>> ranked;
      ranked.reserve(next.size());
      for (const auto& [tokens, state] : next) {
        double key = opts.bias_in_pruning
                         ? state.base + opts.lambda_ctx * state.ctx.accumulated
                         : state.base;
        ranked.emplace_back(key, &tokens);
      }
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) {
                         return a.first > b.first;
                       });
      BeamMap pruned;
      for (int i = 0; i < opts.beam; ++i) {
        auto it = next.find(*ranked[i].second);
        pruned.emplace(std::move(it->first), it->second);
      }
      beams = std::move(pruned);
    } else {
      beams = std::move(next);
    }
  }

  std::vector<DecodedHypothesis> result;
  result.reserve(beams.size());
  for (auto& [tokens, state] : beams) {
    DecodedHypothesis hyp;
    hyp.tokens = tokens;
    hyp.base_score = state.base;
    MatchState ctx = state.ctx;
    if (graph != nullptr) graph->Finalize(&ctx);
    hyp.ctx_score = ctx.accumulated;
    hyp.combined = hyp.base_score + opts.lambda_ctx * hyp.ctx_score;
    result.push_back(std::move(hyp));
  }
  // Map order is lexicographic already, so a stable sort by combined score
  // leaves ties lexicographically ordered.
  std::stable_sort(result.begin(), result.end(),
                   [](const DecodedHypothesis& a, const DecodedHypothesis& b) {
                     return a.combined > b.combined;
                   });
  return result;
}

std::vector<NBestList> ParseNBest(std::istream& in) {
  std::vector<NBestList> lists;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view stripped = StripCr(line);
    if (SplitFields(stripped).empty()) continue;
    json record;
    try {
      record = json::parse(stripped);
    } catch (const json::exception& e) {  // parse errors, numeric overflow
      throw FormatError("nbest: line " + std::to_string(line_no) +
                        " is not valid JSON: " + e.what());
    }
    if (record.is_object() && record.contains("metadata")) continue;
    if (!record.is_object() || !record.contains("utt") ||
        !record["utt"].is_string() || !record.contains("base_score") ||
        !record["base_score"].is_number()) {
      throw FormatError("nbest: line " + std::to_string(line_no) +
                        " needs string 'utt' and numeric 'base_score'");
    }
    NBestCandidate cand;
    cand.base_score = record["base_score"].get<double>();
    cand.score = cand.base_score;
    if (record.contains("score")) {
      if (!record["score"].is_number()) {
        throw FormatError("nbest: line " + std::to_string(line_no) +
                          " has non-numeric 'score'");
      }
      cand.score = record["score"].get<double>();
    }
    if (record.contains("text")) {
      if (!record["text"].is_string()) {
        throw FormatError("nbest: line " + std::to_string(line_no) +
                          " has non-string 'text'");
      }
      cand.text = record["text"].get<std::string>();
      cand.has_text = true;
    }
    if (record.contains("tokens")) {
      if (!record["tokens"].is_array()) {
        throw FormatError("nbest: line " + std::to_string(line_no) +
                          " has non-array 'tokens'");
      }
      for (const json& tok : record["tokens"]) {
        if (!tok.is_number_integer()) {
          throw FormatError("nbest: line " + std::to_string(line_no) +
                            " has a non-integer token id");
        }
        cand.tokens.push_back(tok.get<int32_t>());
      }
      cand.has_tokens = true;
    }
    if (!cand.has_text && !cand.has_tokens) {
      throw FormatError("nbest: line " + std::to_string(line_no) +
                        " needs 'text' or 'tokens'");
    }
    if (!std::isfinite(cand.base_score) || !std::isfinite(cand.score)) {
      throw FormatError("nbest: line " + std::to_string(line_no) +
                        " has a non-finite score");
    }
    std::string utt = record["utt"].get<std::string>();
    if (lists.empty() || lists.back().utt_id != utt) {
      lists.push_back(NBestList{std::move(utt), {}});
    }
    lists.back().candidates.push_back(std::move(cand));
  }
  return lists;
}

void WriteNBest(const std::vector<NBestList>& lists, std::ostream& out) {
  for (const NBestList& list : lists) {
    for (const NBestCandidate& cand : list.candidates) {
      json record;
      record["utt"] = list.utt_id;
      record["base_score"] = cand.base_score;
      if (cand.score != cand.base_score) record["score"] = cand.score;
      if (cand.has_text) record["text"] = cand.text;
      if (cand.has_tokens) record["tokens"] = cand.tokens;
      out << record.dump() << '\n';
    }
  }
}

void RescoreWithGraph(NBestList* list, const ContextGraph& graph,
                      const SubwordVocab* vocab, double lambda) {
  for (NBestCandidate& cand : list->candidates) {
    std::vector<int32_t> tokens;
    const std::vector<int32_t>* tokens_ptr = &cand.tokens;
    if (!cand.has_tokens) {
      if (vocab == nullptr) {
        throw ConfigError("rescore: word-level candidates need a subword "
                          "vocabulary for the graph scorer");
      }
      tokens = SegmentPhrase(*vocab, SplitWords(cand.text));
      tokens_ptr = &tokens;
    }
    cand.score = cand.base_score + lambda * graph.ScoreSequence(*tokens_ptr);
  }
  std::stable_sort(list->candidates.begin(), list->candidates.end(),
                   [](const NBestCandidate& a, const NBestCandidate& b) {
                     return a.score > b.score;
                   });
}

void RescoreWithWordLm(NBestList* list, const ArpaModel& model,
                       const SubwordVocab* vocab, double lambda) {
  for (NBestCandidate& cand : list->candidates) {
    std::vector<std::string> words;
    if (cand.has_text) {
      words = SplitWords(cand.text);
    } else if (vocab != nullptr) {
      words = DetokenizeIds(*vocab, cand.tokens);
    } else {
      throw ConfigError("rescore: token-level candidates need a subword "
                        "vocabulary to detokenize for the word-LM scorer");
    }
    double lm = model.SequenceLogProb(words) * kLog10ToNatural;
    cand.score = cand.base_score + lambda * lm;
  }
  std::stable_sort(list->candidates.begin(), list->candidates.end(),
                   [](const NBestCandidate& a, const NBestCandidate& b) {
                     return a.score > b.score;
                   });
}

}  // namespace acbias
