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

#ifndef ACBIAS_SUBWORD_H_
#define ACBIAS_SUBWORD_H_

#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace acbias {

inline constexpr const char* kDefaultMarker = "\xe2\x96\x81";  // U+2581 "▁"
inline constexpr const char* kUnknownPiece = "<unk>";

// Decoder output vocabulary: one piece per id, dense ids by load order.
// Immutable after load; all segmentation functions are pure.
struct SubwordVocab {
  std::vector<std::string> pieces;
  std::map<std::string, int32_t, std::less<>> ids;
  std::string word_start_marker = kDefaultMarker;
  // Id emitted for uncoverable material. Equals the id of a literal
  // "<unk>" piece when the vocabulary has one, otherwise pieces.size().
  int32_t unk_id = 0;
  size_t max_piece_bytes = 0;

  int32_t size() const { return static_cast<int32_t>(pieces.size()); }

  // Piece string for an id; the synthetic unknown id renders as "<unk>".
  const std::string& PieceOf(int32_t id) const;
};

// One piece per line, ids assigned by line order. Blank lines are skipped.
// Throws FormatError on an empty vocabulary, a duplicate piece, or a piece
// with the marker glyph anywhere but the very start.
SubwordVocab LoadVocab(std::istream& in,
                       const std::string& marker = kDefaultMarker);

// Greedy longest-match segmentation of the marker-prefixed form of `word`.
// Uncoverable characters yield unk_id, one per character; a word-initial
// unknown swallows the marker together with the first character so entry
// paths keep a predictable length. `word` must be non-empty and free of
// whitespace.
std::vector<int32_t> SegmentWordIds(const SubwordVocab& vocab,
                                    const std::string& word);

// Same segmentation, as piece strings (unknowns render as "<unk>").
std::vector<std::string> SegmentWord(const SubwordVocab& vocab,
                                     const std::string& word);

// Concatenated SegmentWordIds over all words.
std::vector<int32_t> SegmentPhrase(const SubwordVocab& vocab,
                                   std::span<const std::string> words);

// Splits a piece sequence back into words at marker-bearing pieces and
// strips the markers.
std::vector<std::string> Detokenize(const SubwordVocab& vocab,
                                    std::span<const std::string> pieces);

// Detokenize over ids.
std::vector<std::string> DetokenizeIds(const SubwordVocab& vocab,
                                       std::span<const int32_t> ids);

}  // namespace acbias

#endif  // ACBIAS_SUBWORD_H_
