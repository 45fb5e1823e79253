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

#ifndef ACBIAS_EVAL_H_
#define ACBIAS_EVAL_H_

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace acbias {

// Levenshtein alignment counts with unit costs. Ties between alignments
// prefer substitution over insertion over deletion, so the decomposition is
// reproducible bit-exactly.
struct WerCounts {
  int64_t substitutions = 0;
  int64_t insertions = 0;
  int64_t deletions = 0;
  int64_t ref_words = 0;
  // Reference empty but hypothesis not: the ratio degenerates to the raw
  // insertion count.
  bool empty_reference = false;

  int64_t Errors() const { return substitutions + insertions + deletions; }
  double Ratio() const {
    if (ref_words > 0) {
      return static_cast<double>(Errors()) / static_cast<double>(ref_words);
    }
    return static_cast<double>(insertions);
  }
  WerCounts& operator+=(const WerCounts& other);
  bool operator==(const WerCounts&) const = default;
};

WerCounts Wer(std::span<const std::string> ref,
              std::span<const std::string> hyp);

struct UtterancePair {
  std::string id;
  std::vector<std::string> ref;
  std::vector<std::string> hyp;
};

// One utterance per line: `utt_id<TAB>text`. Text may be empty; a line with
// no tab or a repeated id is a FormatError.
struct Utterance {
  std::string id;
  std::vector<std::string> words;
};
std::vector<Utterance> LoadTranscripts(std::istream& in);

// Aligns hypotheses to references by id, keeping reference order. Ids on
// one side only are a ConfigError.
std::vector<UtterancePair> PairTranscripts(std::vector<Utterance> refs,
                                           std::vector<Utterance> hyps);

WerCounts CorpusWer(std::span<const UtterancePair> pairs);

// Fraction of reference entity occurrences whose exact word sequence occurs
// in the paired hypothesis at least as often (occurrence-count crediting,
// each entity scored binarily per occurrence). Absent when no entity occurs
// in any reference.
std::optional<double> NeAccuracy(
    std::span<const UtterancePair> pairs,
    const std::vector<std::vector<std::string>>& entities);

// Corpus WER restricted to utterances whose reference contains at least one
// entity occurrence. Absent when the subset is empty.
std::optional<WerCounts> NeWer(
    std::span<const UtterancePair> pairs,
    const std::vector<std::vector<std::string>>& entities);

// NeAccuracy over the entities that contain at least one word outside
// `known_vocab`. Absent when no entity qualifies or none occurs.
std::optional<double> OovAccuracy(
    std::span<const UtterancePair> pairs,
    const std::vector<std::vector<std::string>>& entities,
    const std::unordered_set<std::string>& known_vocab);

// audio_seconds / wall_seconds. Throws ConfigError when wall_seconds ≤ 0.
double Rtfx(double audio_seconds, double wall_seconds);

struct EvalReport {
  WerCounts wer;
  std::optional<double> ne_accuracy;
  std::optional<WerCounts> ne_wer;
  std::optional<double> oov_accuracy;
  std::optional<double> rtfx;

  bool operator==(const EvalReport&) const = default;
};

// `key: value` lines with fixed field names; absent metrics are omitted.
// Floats use shortest round-trip form, so Parse(Format(r)) == r.
void WriteReport(const EvalReport& report, std::ostream& out);
EvalReport ParseReport(std::istream& in);

}  // namespace acbias

#endif  // ACBIAS_EVAL_H_
