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

#include "acbias/graph_builder.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "acbias/errors.h"
#include "acbias/text_util.h"

namespace acbias {

namespace {

bool IsReserved(const std::string& word) {
  return word == kSentenceStart || word == kSentenceEnd || word == kUnknownWord;
}

ContextEntry MakeEntry(std::vector<int32_t> tokens, double cost,
                       Provenance provenance, std::string surface,
                       bool divide_by_pieces) {
  ContextEntry entry;
  double arc = divide_by_pieces
                   ? cost / static_cast<double>(tokens.size())
                   : cost;
  entry.arc_cost = arc;
  entry.entry_cost = arc * static_cast<double>(tokens.size());
  entry.provenance = provenance;
  entry.tokens = std::move(tokens);
  entry.surface = std::move(surface);
  return entry;
}

}  // namespace

void BiasingConfig::Validate() const {
  if (!(alpha_in_lm >= 0.0) || !std::isfinite(alpha_in_lm)) {
    throw ConfigError("biasing config: alpha_in_lm must be finite and >= 0");
  }
  if (!(alpha_out_lm >= 0.0) || !std::isfinite(alpha_out_lm)) {
    throw ConfigError("biasing config: alpha_out_lm must be finite and >= 0");
  }
  if (!(exp_base > 1.0) || !std::isfinite(exp_base)) {
    throw ConfigError("biasing config: exp_base must be finite and > 1");
  }
  if (lm_min_order < 1 || lm_min_order > lm_max_order) {
    throw ConfigError(
        "biasing config: need 1 <= lm_min_order <= lm_max_order");
  }
}

std::vector<ContextEntry> LmEntries(const ArpaModel& model,
                                    const SubwordVocab& vocab,
                                    const BiasingConfig& cfg) {
  cfg.Validate();
  std::vector<ContextEntry> entries;
  int hi = std::min(cfg.lm_max_order, model.max_order());
  for (int order = cfg.lm_min_order; order <= hi; ++order) {
    for (const auto& [key, arpa_entry] : model.table(order)) {
      std::vector<std::string> words = SplitWords(key);
      if (std::any_of(words.begin(), words.end(), IsReserved)) continue;
      std::vector<int32_t> tokens = SegmentPhrase(vocab, words);
      if (tokens.empty()) continue;
      double cost = std::pow(cfg.exp_base, arpa_entry.logprob);
      entries.push_back(MakeEntry(std::move(tokens), cost, Provenance::kLm,
                                  key, cfg.divide_by_pieces));
    }
  }
  return entries;
}

KeywordEntriesResult KeywordEntries(
    const std::vector<std::vector<std::string>>& keywords,
    const ArpaModel* model, const SubwordVocab& vocab,
    const BiasingConfig& cfg) {
  cfg.Validate();
  KeywordEntriesResult result;
  for (const std::vector<std::string>& words : keywords) {
    std::string surface = ArpaModel::JoinWords(words);
    std::vector<int32_t> tokens =
        words.empty() ? std::vector<int32_t>{} : SegmentPhrase(vocab, words);
    if (tokens.empty()) {
      result.rejected.push_back("keyword '" + surface +
                                "' segments to an empty token sequence");
      continue;
    }
    std::optional<ArpaEntry> hit;
    if (model != nullptr &&
        words.size() <= static_cast<size_t>(model->max_order())) {
      hit = model->Lookup(words);
    }
    double cost;
    Provenance provenance;
    if (hit.has_value()) {
      cost = std::pow(cfg.exp_base, hit->logprob) + cfg.alpha_in_lm;
      provenance = Provenance::kKeywordInLm;
    } else {
      cost = cfg.alpha_out_lm;
      provenance = Provenance::kKeywordOutLm;
    }
    result.entries.push_back(MakeEntry(std::move(tokens), cost, provenance,
                                       std::move(surface),
                                       cfg.divide_by_pieces));
  }
  return result;
}

std::vector<ContextEntry> MergeEntries(std::vector<ContextEntry> lm,
                                       std::vector<ContextEntry> keywords) {
  std::map<std::vector<int32_t>, ContextEntry> by_path;
  for (ContextEntry& e : lm) {
    auto it = by_path.find(e.tokens);
    if (it == by_path.end()) {
      std::vector<int32_t> key = e.tokens;
      by_path.emplace(std::move(key), std::move(e));
    } else if (it->second.entry_cost < e.entry_cost) {
      it->second = std::move(e);
    }
  }
  for (ContextEntry& e : keywords) {
    auto it = by_path.find(e.tokens);
    if (it == by_path.end()) {
      std::vector<int32_t> key = e.tokens;
      by_path.emplace(std::move(key), std::move(e));
    } else if (it->second.provenance == Provenance::kLm ||
               it->second.entry_cost < e.entry_cost) {
      // Keywords always displace plain LM entries on the same path; among
      // keywords the larger cost wins.
      it->second = std::move(e);
    }
  }
  std::vector<ContextEntry> merged;
  merged.reserve(by_path.size());
  for (auto& [path, entry] : by_path) merged.push_back(std::move(entry));
  return merged;
}

std::vector<std::vector<std::string>> LoadKeywordList(std::istream& in) {
  std::vector<std::vector<std::string>> keywords;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<std::string> words = SplitWords(line);
    if (!words.empty()) keywords.push_back(std::move(words));
  }
  return keywords;
}

}  // namespace acbias
