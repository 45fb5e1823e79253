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

#ifndef ACBIAS_TESTS_TESTING_FIXTURES_H_
#define ACBIAS_TESTS_TESTING_FIXTURES_H_

#include <sstream>
#include <string>

#include "acbias/arpa.h"
#include "acbias/subword.h"

namespace acbias::testing {

// Tiny 1/2-gram back-off model over {a, b, c}: the shared fixture for parser,
// cost-formula, and rescoring tests.
inline constexpr const char* kTinyArpa =
    "\\data\\\n"
    "ngram 1=4\n"
    "ngram 2=2\n"
    "\n"
    "\\1-grams:\n"
    "-0.602060\ta\t-0.301030\n"
    "-0.602060\tb\t-0.176091\n"
    "-0.903090\tc\n"
    "-0.698970\t<unk>\n"
    "\n"
    "\\2-grams:\n"
    "-0.301030\ta b\n"
    "-0.602060\tb c\n"
    "\n"
    "\\end\\\n";

// Matching subword vocabulary: blank for decoding tests plus one
// marker-bearing piece per fixture word.
inline constexpr const char* kTinyVocab =
    "<blk>\n"
    "\xe2\x96\x81"
    "a\n"
    "\xe2\x96\x81"
    "b\n"
    "\xe2\x96\x81"
    "c\n";

inline ArpaModel TinyModel() {
  std::istringstream in(kTinyArpa);
  return ParseArpa(in);
}

inline SubwordVocab TinyVocabulary() {
  std::istringstream in(kTinyVocab);
  return LoadVocab(in);
}

}  // namespace acbias::testing

#endif  // ACBIAS_TESTS_TESTING_FIXTURES_H_
