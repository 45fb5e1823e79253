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

#ifndef ACBIAS_GRAPH_BUILDER_H_
#define ACBIAS_GRAPH_BUILDER_H_

#include <istream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "acbias/arpa.h"
#include "acbias/context_graph.h"
#include "acbias/subword.h"

namespace acbias {

// Knobs for turning LM n-grams and keywords into context entries.
//
// Per-arc cost of an LM n-gram with stored log10 weight w is exp_base^w.
// A keyword gets exp_base^w + alpha_in_lm when the exact n-gram is in the
// LM, and the flat alpha_out_lm when it is not (or no LM was supplied).
// With divide_by_pieces the n-gram's cost is split across its subword arcs
// instead of being paid in full on every arc.
struct BiasingConfig {
  double alpha_in_lm = 0.5;
  double alpha_out_lm = 1.5;
  double exp_base = std::numbers::e;
  int lm_min_order = 1;
  int lm_max_order = std::numeric_limits<int>::max();
  bool divide_by_pieces = false;

  // Throws ConfigError when alphas are negative, exp_base ≤ 1, any value is
  // non-finite, or the order window is empty or starts below 1.
  void Validate() const;
};

// One entry per n-gram of the configured orders, skipping any n-gram that
// contains <s>, </s>, or <unk>. Tokens come from SegmentPhrase; surface is
// the space-joined word form.
std::vector<ContextEntry> LmEntries(const ArpaModel& model,
                                    const SubwordVocab& vocab,
                                    const BiasingConfig& cfg);

struct KeywordEntriesResult {
  std::vector<ContextEntry> entries;
  // Human-readable reason per rejected keyword; rejection never aborts the
  // batch.
  std::vector<std::string> rejected;
};

// Costed entries for a keyword list. `model` may be null (every keyword is
// then out-of-LM). In-LM membership means an exact n-gram hit at order =
// word count; back-off compositions and keywords longer than the LM's max
// order do not count.
KeywordEntriesResult KeywordEntries(
    const std::vector<std::vector<std::string>>& keywords,
    const ArpaModel* model, const SubwordVocab& vocab,
    const BiasingConfig& cfg);

// Single-trie merge: keyword entries replace LM entries with the same token
// path; duplicates within a class keep the larger cost. Output is sorted by
// token sequence, so equal input sets yield identical vectors regardless of
// input order.
std::vector<ContextEntry> MergeEntries(std::vector<ContextEntry> lm,
                                       std::vector<ContextEntry> keywords);

// One phrase per line, words separated by whitespace. Blank lines and
// `#`-prefixed comment lines are skipped.
std::vector<std::vector<std::string>> LoadKeywordList(std::istream& in);

}  // namespace acbias

#endif  // ACBIAS_GRAPH_BUILDER_H_
