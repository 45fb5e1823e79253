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

#ifndef ACBIAS_ARPA_H_
#define ACBIAS_ARPA_H_

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace acbias {

inline constexpr const char* kSentenceStart = "<s>";
inline constexpr const char* kSentenceEnd = "</s>";
inline constexpr const char* kUnknownWord = "<unk>";

struct ArpaEntry {
  double logprob = 0.0;  // log10
  std::optional<double> backoff;  // log10, absent on highest order
};

// Back-off n-gram model read from ARPA text. Immutable after parse;
// safe for concurrent reads.
class ArpaModel {
 public:
  // Key is the n-gram's words joined with a single space. Words never
  // contain whitespace (the parser splits on it), so the join is unique.
  using Table = std::map<std::string, ArpaEntry>;

  int max_order() const { return static_cast<int>(tables_.size()); }

  // Declared header count for `order` (1-based).
  int64_t declared_count(int order) const;

  // Table for `order` (1-based). Empty table for out-of-range order.
  const Table& table(int order) const;

  // Non-fatal anomalies found during parsing (count mismatches).
  const std::vector<std::string>& warnings() const { return warnings_; }

  bool InVocab(const std::string& word) const { return vocab_.count(word) > 0; }
  const std::unordered_set<std::string>& vocab() const { return vocab_; }

  // Exact-match lookup at order = words.size(). No back-off involved.
  // Throws ConfigError if words.size() exceeds max_order().
  std::optional<ArpaEntry> Lookup(std::span<const std::string> words) const;

  // Katz back-off score of the whole sequence: sum over positions of
  // conditional log10 probabilities. Words absent from the unigram
  // vocabulary are mapped to <unk> first. Sentence boundary symbols are
  // not added implicitly; callers pass them explicitly if wanted.
  double SequenceLogProb(std::span<const std::string> words) const;

  static std::string JoinWords(std::span<const std::string> words);

 private:
  friend ArpaModel ParseArpa(std::istream& in);

  std::vector<int64_t> declared_counts_;  // index 0 -> order 1
  std::vector<Table> tables_;             // index 0 -> order 1
  std::unordered_set<std::string> vocab_;
  std::vector<std::string> warnings_;

  // log10 p(word | context) with back-off recursion.
  double ConditionalLogProb(std::span<const std::string> context,
                            const std::string& word) const;
};

// Parses ARPA text: \data\ header with `ngram N=count` lines, \N-grams:
// sections of `logprob word1 .. wordN [backoff]` rows, terminated by \end\.
// Count mismatches are recorded as warnings, not errors. Throws FormatError
// on a missing \data\ header, a malformed row, or a missing \end\.
ArpaModel ParseArpa(std::istream& in);

// Writes the model back as ARPA text. Header counts reflect the actual
// entry counts; floats are printed with shortest round-trip precision, so
// parse(write(m)) reproduces every entry bit-exactly.
void WriteArpa(const ArpaModel& model, std::ostream& out);

}  // namespace acbias

#endif  // ACBIAS_ARPA_H_
