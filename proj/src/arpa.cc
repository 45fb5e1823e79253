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

#include "acbias/arpa.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "acbias/errors.h"
#include "acbias/text_util.h"

namespace acbias {

namespace {

double ParseDouble(std::string_view text, int line_no) {
  double value = 0.0;
  if (!TryParseDouble(text, &value)) {
    throw FormatError("arpa: bad float '" + std::string(text) + "' at line " +
                      std::to_string(line_no));
  }
  return value;
}

// Matches "\N-grams:" and returns N, or 0 when the line is something else.
int SectionOrder(std::string_view line) {
  if (line.size() < 8 || line.front() != '\\') return 0;
  size_t dash = line.find("-grams:");
  if (dash == std::string_view::npos || dash + 7 != line.size()) return 0;
  int order = 0;
  auto [ptr, ec] = std::from_chars(line.data() + 1, line.data() + dash, order);
  if (ec != std::errc() || ptr != line.data() + dash || order < 1) return 0;
  return order;
}

}  // namespace

int64_t ArpaModel::declared_count(int order) const {
  if (order < 1 || order > static_cast<int>(declared_counts_.size())) return 0;
  return declared_counts_[order - 1];
}

const ArpaModel::Table& ArpaModel::table(int order) const {
  static const Table kEmpty;
  if (order < 1 || order > static_cast<int>(tables_.size())) return kEmpty;
  return tables_[order - 1];
}

std::string ArpaModel::JoinWords(std::span<const std::string> words) {
  std::string key;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i > 0) key += ' ';
    key += words[i];
  }
  return key;
}

std::optional<ArpaEntry> ArpaModel::Lookup(
    std::span<const std::string> words) const {
  if (words.empty()) return std::nullopt;
  if (static_cast<int>(words.size()) > max_order()) {
    throw ConfigError("arpa: lookup of order " + std::to_string(words.size()) +
                      " exceeds model max order " + std::to_string(max_order()));
  }
  const Table& t = tables_[words.size() - 1];
  auto it = t.find(JoinWords(words));
  if (it == t.end()) return std::nullopt;
  return it->second;
}

double ArpaModel::ConditionalLogProb(std::span<const std::string> context,
                                     const std::string& word) const {
  if (context.empty()) {
    const Table& unigrams = table(1);
    auto it = unigrams.find(word);
    if (it != unigrams.end()) return it->second.logprob;
    return -std::numeric_limits<double>::infinity();
  }
  int full_order = static_cast<int>(context.size()) + 1;
  if (full_order <= max_order()) {
    const Table& t = tables_[full_order - 1];
    std::string key = JoinWords(context);
    key += ' ';
    key += word;
    auto it = t.find(key);
    if (it != t.end()) return it->second.logprob;
  }
  // Back off: charge the abandoned context's back-off weight when that
  // context exists, zero when it does not.
  double backoff = 0.0;
  if (static_cast<int>(context.size()) <= max_order()) {
    const Table& ct = tables_[context.size() - 1];
    auto it = ct.find(JoinWords(context));
    if (it != ct.end() && it->second.backoff.has_value()) {
      backoff = *it->second.backoff;
    }
  }
  return backoff + ConditionalLogProb(context.subspan(1), word);
}

double ArpaModel::SequenceLogProb(std::span<const std::string> words) const {
  std::vector<std::string> mapped;
  mapped.reserve(words.size());
  for (const std::string& w : words) {
    mapped.push_back(InVocab(w) ? w : std::string(kUnknownWord));
  }
  const size_t max_ctx =
      max_order() > 0 ? static_cast<size_t>(max_order() - 1) : 0;
  double total = 0.0;
  for (size_t i = 0; i < mapped.size(); ++i) {
    size_t ctx_len = std::min(i, max_ctx);
    std::span<const std::string> context(mapped.data() + (i - ctx_len), ctx_len);
    total += ConditionalLogProb(context, mapped[i]);
  }
  return total;
}

ArpaModel ParseArpa(std::istream& in) {
  ArpaModel model;
  std::string raw;
  int line_no = 0;

  // Skip any preamble until the \data\ header.
  bool found_data = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (StripCr(raw) == "\\data\\") {
      found_data = true;
      break;
    }
  }
  if (!found_data) throw FormatError("arpa: missing \\data\\ header");

  // Count declarations.
  std::string pending;  // first non-count line, handed to the section loop
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = StripCr(raw);
    if (line.empty()) continue;
    if (line.rfind("ngram ", 0) == 0) {
      size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw FormatError("arpa: malformed count line at line " +
                          std::to_string(line_no));
      }
      int order = 0;
      int64_t count = 0;
      std::string_view order_text = line.substr(6, eq - 6);
      std::string_view count_text = line.substr(eq + 1);
      auto r1 = std::from_chars(order_text.data(),
                                order_text.data() + order_text.size(), order);
      auto r2 = std::from_chars(count_text.data(),
                                count_text.data() + count_text.size(), count);
      if (r1.ec != std::errc() || r2.ec != std::errc() || order < 1) {
        throw FormatError("arpa: malformed count line at line " +
                          std::to_string(line_no));
      }
      if (order > static_cast<int>(model.declared_counts_.size())) {
        model.declared_counts_.resize(order, 0);
      }
      model.declared_counts_[order - 1] = count;
      continue;
    }
    pending = std::string(line);
    break;
  }

  model.tables_.resize(model.declared_counts_.size());

  // Sections.
  bool found_end = false;
  int current_order = 0;
  bool have_pending = !pending.empty();
  while (true) {
    std::string_view line;
    if (have_pending) {
      line = pending;
      have_pending = false;
    } else {
      if (!std::getline(in, raw)) break;
      ++line_no;
      line = StripCr(raw);
    }
    if (line.empty()) continue;
    if (line == "\\end\\") {
      found_end = true;
      break;
    }
    if (int order = SectionOrder(line); order > 0) {
      current_order = order;
      if (order > static_cast<int>(model.tables_.size())) {
        model.tables_.resize(order);
        model.declared_counts_.resize(order, 0);
      }
      continue;
    }
    if (current_order == 0) {
      throw FormatError("arpa: n-gram row before any section at line " +
                        std::to_string(line_no));
    }
    std::vector<std::string_view> fields = SplitFields(line);
    size_t want = static_cast<size_t>(current_order) + 1;
    if (fields.size() != want && fields.size() != want + 1) {
      throw FormatError("arpa: row with " + std::to_string(fields.size()) +
                        " fields in " + std::to_string(current_order) +
                        "-gram section at line " + std::to_string(line_no));
    }
    ArpaEntry entry;
    entry.logprob = ParseDouble(fields[0], line_no);
    if (fields.size() == want + 1) {
      entry.backoff = ParseDouble(fields.back(), line_no);
    }
    std::string key(fields[1]);
    for (int i = 2; i <= current_order; ++i) {
      key += ' ';
      key += std::string(fields[i]);
    }
    model.tables_[current_order - 1][key] = entry;
    if (current_order == 1) model.vocab_.insert(key);
  }
  if (!found_end) throw FormatError("arpa: missing \\end\\ (truncated file)");

  for (size_t i = 0; i < model.tables_.size(); ++i) {
    int64_t actual = static_cast<int64_t>(model.tables_[i].size());
    if (actual != model.declared_counts_[i]) {
      std::ostringstream msg;
      msg << "count mismatch for order " << (i + 1) << ": header declares "
          << model.declared_counts_[i] << ", file has " << actual;
      model.warnings_.push_back(msg.str());
    }
  }
  return model;
}

void WriteArpa(const ArpaModel& model, std::ostream& out) {
  out << "\\data\\\n";
  for (int order = 1; order <= model.max_order(); ++order) {
    out << "ngram " << order << "=" << model.table(order).size() << "\n";
  }
  for (int order = 1; order <= model.max_order(); ++order) {
    out << "\n\\" << order << "-grams:\n";
    for (const auto& [key, entry] : model.table(order)) {
      out << FormatDouble(entry.logprob) << "\t" << key;
      if (entry.backoff.has_value()) out << "\t" << FormatDouble(*entry.backoff);
      out << "\n";
    }
  }
  out << "\n\\end\\\n";
}

}  // namespace acbias
