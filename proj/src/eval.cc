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

#include "acbias/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <string_view>

#include "acbias/errors.h"
#include "acbias/text_util.h"

namespace acbias {

namespace {

// Sliding-window count of `pattern` inside `words`, overlaps included.
int64_t CountOccurrences(std::span<const std::string> words,
                         std::span<const std::string> pattern) {
  if (pattern.empty() || pattern.size() > words.size()) return 0;
  int64_t count = 0;
  for (size_t i = 0; i + pattern.size() <= words.size(); ++i) {
    if (std::equal(pattern.begin(), pattern.end(), words.begin() + i)) ++count;
  }
  return count;
}

std::vector<std::vector<std::string>> DedupEntities(
    const std::vector<std::vector<std::string>>& entities) {
  std::set<std::vector<std::string>> seen;
  std::vector<std::vector<std::string>> unique;
  for (const auto& e : entities) {
    if (!e.empty() && seen.insert(e).second) unique.push_back(e);
  }
  return unique;
}

}  // namespace

WerCounts& WerCounts::operator+=(const WerCounts& other) {
  substitutions += other.substitutions;
  insertions += other.insertions;
  deletions += other.deletions;
  ref_words += other.ref_words;
  empty_reference = empty_reference || other.empty_reference;
  return *this;
}

WerCounts Wer(std::span<const std::string> ref,
              std::span<const std::string> hyp) {
  const size_t n = ref.size();
  const size_t m = hyp.size();
  // Unit-cost edit distance; rows are reference positions.
  std::vector<std::vector<int32_t>> d(n + 1, std::vector<int32_t>(m + 1, 0));
  for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int32_t>(i);
  for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int32_t>(j);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      int32_t diag = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      int32_t ins = d[i][j - 1] + 1;
      int32_t del = d[i - 1][j] + 1;
      d[i][j] = std::min({diag, ins, del});
    }
  }

  // Backtrack preferring match, then substitution, insertion, deletion, so
  // equal-cost alignments decompose identically everywhere.
  WerCounts counts;
  counts.ref_words = static_cast<int64_t>(n);
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] &&
        d[i][j] == d[i - 1][j - 1]) {
      --i;
      --j;
    } else if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1 &&
               ref[i - 1] != hyp[j - 1]) {
      ++counts.substitutions;
      --i;
      --j;
    } else if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
      ++counts.insertions;
      --j;
    } else {
      ++counts.deletions;
      --i;
    }
  }
  counts.empty_reference = n == 0 && m > 0;
  return counts;
}

std::vector<Utterance> LoadTranscripts(std::istream& in) {
  std::vector<Utterance> utts;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view stripped = StripCr(line);
    if (stripped.empty()) continue;
    size_t tab = stripped.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw FormatError("transcripts: line " + std::to_string(line_no) +
                        " is not 'utt_id<TAB>text'");
    }
    Utterance utt;
    utt.id = std::string(stripped.substr(0, tab));
    if (!seen.insert(utt.id).second) {
      throw FormatError("transcripts: duplicate utterance id '" + utt.id +
                        "' at line " + std::to_string(line_no));
    }
    utt.words = SplitWords(stripped.substr(tab + 1));
    utts.push_back(std::move(utt));
  }
  return utts;
}

std::vector<UtterancePair> PairTranscripts(std::vector<Utterance> refs,
                                           std::vector<Utterance> hyps) {
  std::map<std::string, size_t> hyp_index;
  for (size_t i = 0; i < hyps.size(); ++i) {
    if (!hyp_index.emplace(hyps[i].id, i).second) {
      throw ConfigError("transcripts: duplicate hypothesis id '" + hyps[i].id +
                        "'");
    }
  }
  std::vector<bool> used(hyps.size(), false);
  std::vector<UtterancePair> pairs;
  pairs.reserve(refs.size());
  std::set<std::string> ref_seen;
  for (Utterance& ref : refs) {
    if (!ref_seen.insert(ref.id).second) {
      throw ConfigError("transcripts: duplicate reference id '" + ref.id + "'");
    }
    auto it = hyp_index.find(ref.id);
    if (it == hyp_index.end()) {
      throw ConfigError("transcripts: no hypothesis for utterance '" + ref.id +
                        "'");
    }
    used[it->second] = true;
    pairs.push_back(UtterancePair{std::move(ref.id), std::move(ref.words),
                                  std::move(hyps[it->second].words)});
  }
  for (size_t i = 0; i < used.size(); ++i) {
    if (!used[i]) {
      throw ConfigError("transcripts: hypothesis '" + hyps[i].id +
                        "' has no reference");
    }
  }
  return pairs;
}

WerCounts CorpusWer(std::span<const UtterancePair> pairs) {
  WerCounts total;
  for (const UtterancePair& pair : pairs) total += Wer(pair.ref, pair.hyp);
  return total;
}

std::optional<double> NeAccuracy(
    std::span<const UtterancePair> pairs,
    const std::vector<std::vector<std::string>>& entities) {
  std::vector<std::vector<std::string>> unique = DedupEntities(entities);
  if (unique.empty()) return std::nullopt;
  int64_t occurrences = 0;
  int64_t credited = 0;
  for (const UtterancePair& pair : pairs) {
    for (const auto& entity : unique) {
      int64_t in_ref = CountOccurrences(pair.ref, entity);
      if (in_ref == 0) continue;
      occurrences += in_ref;
      credited += std::min(in_ref, CountOccurrences(pair.hyp, entity));
    }
  }
  if (occurrences == 0) return std::nullopt;
  return static_cast<double>(credited) / static_cast<double>(occurrences);
}

std::optional<WerCounts> NeWer(
    std::span<const UtterancePair> pairs,
    const std::vector<std::vector<std::string>>& entities) {
  std::vector<std::vector<std::string>> unique = DedupEntities(entities);
  if (unique.empty()) return std::nullopt;
  WerCounts total;
  bool any = false;
  for (const UtterancePair& pair : pairs) {
    bool has_entity = std::any_of(unique.begin(), unique.end(),
                                  [&pair](const auto& entity) {
                                    return CountOccurrences(pair.ref, entity) >
                                           0;
                                  });
    if (!has_entity) continue;
    any = true;
    total += Wer(pair.ref, pair.hyp);
  }
  if (!any) return std::nullopt;
  return total;
}

std::optional<double> OovAccuracy(
    std::span<const UtterancePair> pairs,
    const std::vector<std::vector<std::string>>& entities,
    const std::unordered_set<std::string>& known_vocab) {
  std::vector<std::vector<std::string>> oov;
  for (const auto& entity : entities) {
    bool has_oov = std::any_of(entity.begin(), entity.end(),
                               [&known_vocab](const std::string& word) {
                                 return known_vocab.count(word) == 0;
                               });
    if (has_oov) oov.push_back(entity);
  }
  return NeAccuracy(pairs, oov);
}

double Rtfx(double audio_seconds, double wall_seconds) {
  if (!(wall_seconds > 0.0) || !std::isfinite(wall_seconds)) {
    throw ConfigError("rtfx: wall_seconds must be positive");
  }
  if (!(audio_seconds >= 0.0) || !std::isfinite(audio_seconds)) {
    throw ConfigError("rtfx: audio_seconds must be non-negative");
  }
  return audio_seconds / wall_seconds;
}

namespace {

void WriteWerBlock(std::ostream& out, const std::string& prefix,
                   const WerCounts& wer) {
  out << prefix << "_substitutions: " << wer.substitutions << '\n'
      << prefix << "_insertions: " << wer.insertions << '\n'
      << prefix << "_deletions: " << wer.deletions << '\n'
      << prefix << "_ref_words: " << wer.ref_words << '\n'
      << prefix << "_empty_reference: "
      << (wer.empty_reference ? "true" : "false") << '\n'
      << prefix << ": " << FormatDouble(wer.Ratio()) << '\n';
}

int64_t ParseCount(const std::string& key, const std::string& value) {
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (end != value.c_str() + value.size() || value.empty() || v < 0) {
    throw FormatError("report: bad count for '" + key + "': " + value);
  }
  return static_cast<int64_t>(v);
}

double ParseRatio(const std::string& key, const std::string& value) {
  double v = 0.0;
  if (!TryParseDouble(value, &v)) {
    throw FormatError("report: bad number for '" + key + "': " + value);
  }
  return v;
}

bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw FormatError("report: bad boolean for '" + key + "': " + value);
}

}  // namespace

void WriteReport(const EvalReport& report, std::ostream& out) {
  WriteWerBlock(out, "wer", report.wer);
  if (report.ne_accuracy.has_value()) {
    out << "ne_accuracy: " << FormatDouble(*report.ne_accuracy) << '\n';
    out << "ne_accuracy_basis: per_occurrence\n";
  }
  if (report.ne_wer.has_value()) WriteWerBlock(out, "ne_wer", *report.ne_wer);
  if (report.oov_accuracy.has_value()) {
    out << "oov_accuracy: " << FormatDouble(*report.oov_accuracy) << '\n';
  }
  if (report.rtfx.has_value()) {
    out << "rtfx: " << FormatDouble(*report.rtfx) << '\n';
  }
}

EvalReport ParseReport(std::istream& in) {
  EvalReport report;
  WerCounts ne_wer;
  bool saw_ne_wer = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view stripped = StripCr(line);
    if (stripped.empty()) continue;
    size_t colon = stripped.find(": ");
    if (colon == std::string_view::npos) {
      throw FormatError("report: line " + std::to_string(line_no) +
                        " is not 'key: value'");
    }
    std::string key(stripped.substr(0, colon));
    std::string value(stripped.substr(colon + 2));
    if (key == "wer_substitutions") {
      report.wer.substitutions = ParseCount(key, value);
    } else if (key == "wer_insertions") {
      report.wer.insertions = ParseCount(key, value);
    } else if (key == "wer_deletions") {
      report.wer.deletions = ParseCount(key, value);
    } else if (key == "wer_ref_words") {
      report.wer.ref_words = ParseCount(key, value);
    } else if (key == "wer_empty_reference") {
      report.wer.empty_reference = ParseBool(key, value);
    } else if (key == "ne_wer_substitutions") {
      ne_wer.substitutions = ParseCount(key, value);
      saw_ne_wer = true;
    } else if (key == "ne_wer_insertions") {
      ne_wer.insertions = ParseCount(key, value);
      saw_ne_wer = true;
    } else if (key == "ne_wer_deletions") {
      ne_wer.deletions = ParseCount(key, value);
      saw_ne_wer = true;
    } else if (key == "ne_wer_ref_words") {
      ne_wer.ref_words = ParseCount(key, value);
      saw_ne_wer = true;
    } else if (key == "ne_wer_empty_reference") {
      ne_wer.empty_reference = ParseBool(key, value);
      saw_ne_wer = true;
    } else if (key == "ne_accuracy") {
      report.ne_accuracy = ParseRatio(key, value);
    } else if (key == "oov_accuracy") {
      report.oov_accuracy = ParseRatio(key, value);
    } else if (key == "rtfx") {
      report.rtfx = ParseRatio(key, value);
    } else if (key == "wer" || key == "ne_wer" ||
               key == "ne_accuracy_basis") {
      // Derived ratio / metadata lines; counts are authoritative.
    } else {
      throw FormatError("report: unknown key '" + key + "'");
    }
  }
  if (saw_ne_wer) report.ne_wer = ne_wer;
  return report;
}

}  // namespace acbias
