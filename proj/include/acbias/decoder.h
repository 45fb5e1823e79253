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

#ifndef ACBIAS_DECODER_H_
#define ACBIAS_DECODER_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "acbias/arpa.h"
#include "acbias/context_graph.h"
#include "acbias/subword.h"

namespace acbias {

// Per-frame log probabilities standing in for an acoustic model's posterior
// output. Rows are normalized distributions (log-sum-exp ≈ 0).
struct EmissionMatrix {
  int32_t num_frames = 0;
  int32_t vocab_size = 0;
  int32_t blank_id = 0;
  double frame_shift_s = 0.01;
  std::vector<double> logprobs;  // row-major, num_frames × vocab_size

  double At(int32_t frame, int32_t token) const {
    return logprobs[static_cast<size_t>(frame) * vocab_size + token];
  }
  double AudioSeconds() const { return num_frames * frame_shift_s; }
};

// Text format: header line "T V blank_id frame_shift_s", then T rows of V
// floats. Throws FormatError on malformed headers, short/long rows,
// non-finite values, rows whose log-sum-exp strays from 0 by more than 1e-3,
// blank_id out of range, or frame_shift_s ≤ 0.
EmissionMatrix ParseEmissionMatrix(std::istream& in);
void WriteEmissionMatrix(const EmissionMatrix& em, std::ostream& out);

struct DecodeOptions {
  int beam = 8;
  double lambda_ctx = 1.0;
  // When false, pruning ranks by base score alone and bias only affects the
  // final ranking (finalize-deferred mode).
  bool bias_in_pruning = true;
};

// One finished beam-search hypothesis. ctx_score already includes the
// end-of-stream finalize adjustment and is unscaled; combined equals
// base_score + λ_ctx × ctx_score.
struct DecodedHypothesis {
  std::vector<int32_t> tokens;
  double base_score = 0.0;
  double ctx_score = 0.0;
  double combined = 0.0;
};

// Frame-synchronous beam search with shallow fusion. Each frame every
// hypothesis extends with blank (context untouched) or one non-blank token
// (context advanced); hypotheses with equal token sequences merge by
// log-sum-exp of their base scores. Pruning keeps `beam` survivors per
// frame. Returns all end-of-input survivors, best combined score first,
// ties broken by lexicographic token sequence. `graph` may be null.
// Throws ConfigError for beam < 1 or λ_ctx < 0.
std::vector<DecodedHypothesis> BeamSearchFuse(const EmissionMatrix& em,
                                              const ContextGraph* graph,
                                              const DecodeOptions& opts);

// One n-best candidate: token-level, word-level, or both. `score` is the
// ranking score — equal to base_score until a rescoring pass updates it.
struct NBestCandidate {
  bool has_tokens = false;
  bool has_text = false;
  std::vector<int32_t> tokens;
  std::string text;
  double base_score = 0.0;
  double score = 0.0;
};

struct NBestList {
  std::string utt_id;
  std::vector<NBestCandidate> candidates;
};

// Line-delimited JSON records: {"utt": id, "base_score": s, "text": "..."}
// and/or "tokens": [...], optional "score". Consecutive records with the
// same utterance id form one list. Throws FormatError on malformed JSON,
// missing fields, or non-finite scores.
std::vector<NBestList> ParseNBest(std::istream& in);
void WriteNBest(const std::vector<NBestList>& lists, std::ostream& out);

// score' = base_score + λ × ScoreSequence(tokens); stable-sorted descending
// by score'. Word-level candidates are segmented with `vocab`; passing a
// null vocab with text-only candidates is a ConfigError.
void RescoreWithGraph(NBestList* list, const ContextGraph& graph,
                      const SubwordVocab* vocab, double lambda);

// score' = base_score + λ × ln(10) × SequenceLogProb(words). Token-level
// candidates are detokenized with `vocab`; passing a null vocab with
// token-only candidates is a ConfigError. kLog10ToNatural is the conversion
// factor applied to the word-LM's log10 scores.
inline constexpr double kLog10ToNatural = 2.302585092994046;
void RescoreWithWordLm(NBestList* list, const ArpaModel& model,
                       const SubwordVocab* vocab, double lambda);

}  // namespace acbias

#endif  // ACBIAS_DECODER_H_
