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

#include "acbias/subword.h"

#include <algorithm>

#include "acbias/errors.h"

namespace acbias {

namespace {

const std::string kUnknownPieceString = kUnknownPiece;

// Byte length of the UTF-8 codepoint starting at `pos`. Falls back to one
// byte on malformed input so segmentation always makes progress.
size_t CodepointLen(std::string_view text, size_t pos) {
  unsigned char lead = static_cast<unsigned char>(text[pos]);
  size_t len = 1;
  if ((lead & 0xE0) == 0xC0) len = 2;
  else if ((lead & 0xF0) == 0xE0) len = 3;
  else if ((lead & 0xF8) == 0xF0) len = 4;
  if (pos + len > text.size()) return 1;
  for (size_t i = 1; i < len; ++i) {
    if ((static_cast<unsigned char>(text[pos + i]) & 0xC0) != 0x80) return 1;
  }
  return len;
}

}  // namespace

const std::string& SubwordVocab::PieceOf(int32_t id) const {
  if (id >= 0 && id < size()) return pieces[id];
  return kUnknownPieceString;
}

SubwordVocab LoadVocab(std::istream& in, const std::string& marker) {
  if (marker.empty()) throw ConfigError("subword: empty word-start marker");
  SubwordVocab vocab;
  vocab.word_start_marker = marker;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t marker_at = line.find(marker);
    if (marker_at != std::string::npos && marker_at != 0) {
      throw FormatError("subword: marker inside piece '" + line + "'");
    }
    if (marker_at == 0 && line.find(marker, marker.size()) != std::string::npos) {
      throw FormatError("subword: marker inside piece '" + line + "'");
    }
    auto [it, inserted] =
        vocab.ids.emplace(line, static_cast<int32_t>(vocab.pieces.size()));
    if (!inserted) throw FormatError("subword: duplicate piece '" + line + "'");
    vocab.pieces.push_back(line);
    vocab.max_piece_bytes = std::max(vocab.max_piece_bytes, line.size());
  }
  if (vocab.pieces.empty()) throw FormatError("subword: empty vocabulary");
  auto unk = vocab.ids.find(kUnknownPiece);
  vocab.unk_id = unk != vocab.ids.end() ? unk->second : vocab.size();
  return vocab;
}

std::vector<int32_t> SegmentWordIds(const SubwordVocab& vocab,
                                    const std::string& word) {
  if (word.empty()) throw ConfigError("subword: cannot segment empty word");
  std::string form = vocab.word_start_marker + word;
  std::vector<int32_t> out;
  size_t pos = 0;
  while (pos < form.size()) {
    std::string_view rest = std::string_view(form).substr(pos);
    size_t limit = std::min(vocab.max_piece_bytes, rest.size());
    int32_t matched = -1;
    size_t matched_len = 0;
    for (size_t len = limit; len >= 1; --len) {
      auto it = vocab.ids.find(rest.substr(0, len));
      if (it != vocab.ids.end()) {
        matched = it->second;
        matched_len = len;
        break;
      }
    }
    if (matched >= 0) {
      out.push_back(matched);
      pos += matched_len;
      continue;
    }
    // Unknown character. At the word start the marker travels with it.
    size_t adv;
    if (pos == 0) {
      size_t first = vocab.word_start_marker.size();
      adv = first + (first < form.size() ? CodepointLen(form, first) : 0);
    } else {
      adv = CodepointLen(form, pos);
    }
    out.push_back(vocab.unk_id);
    pos += adv;
  }
  return out;
}

std::vector<std::string> SegmentWord(const SubwordVocab& vocab,
                                     const std::string& word) {
  std::vector<int32_t> ids = SegmentWordIds(vocab, word);
  std::vector<std::string> pieces;
  pieces.reserve(ids.size());
  for (int32_t id : ids) pieces.push_back(vocab.PieceOf(id));
  return pieces;
}

std::vector<int32_t> SegmentPhrase(const SubwordVocab& vocab,
                                   std::span<const std::string> words) {
  std::vector<int32_t> out;
  for (const std::string& word : words) {
    std::vector<int32_t> ids = SegmentWordIds(vocab, word);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

std::vector<std::string> Detokenize(const SubwordVocab& vocab,
                                    std::span<const std::string> pieces) {
  std::vector<std::string> words;
  std::string current;
  bool open = false;
  const std::string& marker = vocab.word_start_marker;
  for (const std::string& piece : pieces) {
    if (piece.rfind(marker, 0) == 0) {
      if (open) words.push_back(current);
      current = piece.substr(marker.size());
      open = true;
    } else {
      current += piece;
      open = true;
    }
  }
  if (open) words.push_back(current);
  return words;
}

std::vector<std::string> DetokenizeIds(const SubwordVocab& vocab,
                                       std::span<const int32_t> ids) {
  std::vector<std::string> pieces;
  pieces.reserve(ids.size());
  for (int32_t id : ids) pieces.push_back(vocab.PieceOf(id));
  return Detokenize(vocab, pieces);
}

}  // namespace acbias
