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

#ifndef ACBIAS_TEXT_UTIL_H_
#define ACBIAS_TEXT_UTIL_H_

#include <string>
#include <string_view>
#include <vector>

namespace acbias {

// Strips one trailing '\r' so CRLF files parse the same as LF files.
std::string_view StripCr(std::string_view line);

// Splits on runs of spaces/tabs; no empty fields. Views into `line`.
std::vector<std::string_view> SplitFields(std::string_view line);

// SplitFields, but owning strings.
std::vector<std::string> SplitWords(std::string_view line);

// Strict full-token float parse. Returns false on any trailing garbage.
bool TryParseDouble(std::string_view text, double* value);

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double value);

// log(e^a + e^b), stable for widely separated magnitudes.
double LogSumExp(double a, double b);

}  // namespace acbias

#endif  // ACBIAS_TEXT_UTIL_H_
