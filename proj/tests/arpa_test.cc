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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "acbias/arpa.h"
#include "acbias/errors.h"
#include "acbias/text_util.h"
#include "testing/fixtures.h"

using namespace acbias;
using acbias::testing::kTinyArpa;
using acbias::testing::TinyModel;

namespace {

std::vector<std::string> Words(std::initializer_list<const char*> list) {
  return std::vector<std::string>(list.begin(), list.end());
}

}  // namespace

TEST_CASE("parse reads orders and counts from the fixture") {
  ArpaModel m = TinyModel();
  CHECK(m.max_order() == 2);
  CHECK(m.declared_count(1) == 4);
  CHECK(m.declared_count(2) == 2);
  CHECK(m.table(1).size() == 4);
  CHECK(m.table(2).size() == 2);
  CHECK(m.warnings().empty());
  CHECK(m.InVocab("a"));
  CHECK(m.InVocab("<unk>"));
  CHECK(!m.InVocab("d"));
}

TEST_CASE("declared-count mismatch is a warning, not an error") {
  std::string text = kTinyArpa;
  size_t pos = text.find("ngram 1=4");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 9, "ngram 1=5");
  std::istringstream in(text);
  ArpaModel m = ParseArpa(in);
  CHECK(m.table(1).size() == 4);
  REQUIRE(m.warnings().size() == 1);
  CHECK(m.warnings()[0].find("4") != std::string::npos);
  CHECK(m.warnings()[0].find("5") != std::string::npos);
}

TEST_CASE("missing header, malformed row, and truncation are format errors") {
  SUBCASE("no data header") {
    std::istringstream in("\\1-grams:\n-0.5\ta\n\\end\\\n");
    CHECK_THROWS_AS(ParseArpa(in), FormatError);
  }
  SUBCASE("row with too few fields") {
    std::istringstream in(
        "\\data\\\nngram 1=1\n\\1-grams:\n-0.5\n\\end\\\n");
    CHECK_THROWS_AS(ParseArpa(in), FormatError);
  }
  SUBCASE("row with a non-numeric weight") {
    std::istringstream in(
        "\\data\\\nngram 1=1\n\\1-grams:\noops\ta\n\\end\\\n");
    CHECK_THROWS_AS(ParseArpa(in), FormatError);
  }
  SUBCASE("missing end marker") {
    std::istringstream in("\\data\\\nngram 1=1\n\\1-grams:\n-0.5\ta\n");
    CHECK_THROWS_AS(ParseArpa(in), FormatError);
  }
}

TEST_CASE("lookup is exact-match at the n-gram's own order") {
  ArpaModel m = TinyModel();

  auto ab = m.Lookup(Words({"a", "b"}));
  REQUIRE(ab.has_value());
  CHECK(ab->logprob == doctest::Approx(-0.301030).epsilon(1e-12));
  CHECK(!ab->backoff.has_value());

  CHECK(!m.Lookup(Words({"c", "a"})).has_value());

  auto a = m.Lookup(Words({"a"}));
  REQUIRE(a.has_value());
  CHECK(a->logprob == doctest::Approx(-0.602060).epsilon(1e-12));
  REQUIRE(a->backoff.has_value());
  CHECK(*a->backoff == doctest::Approx(-0.301030).epsilon(1e-12));

  CHECK_THROWS_AS(m.Lookup(Words({"a", "b", "c"})), ConfigError);
}

TEST_CASE("lookup agrees with a linear scan of the raw fixture text") {
  ArpaModel m = TinyModel();
  std::istringstream in(kTinyArpa);
  std::string line;
  int order = 0;
  while (std::getline(in, line)) {
    if (line == "\\1-grams:") { order = 1; continue; }
    if (line == "\\2-grams:") { order = 2; continue; }
    if (line == "\\end\\") break;
    if (order == 0 || line.empty() || line[0] == '\\') continue;
    std::vector<std::string_view> fields = SplitFields(line);
    REQUIRE(static_cast<int>(fields.size()) >= order + 1);
    std::vector<std::string> words;
    for (int i = 1; i <= order; ++i) words.emplace_back(fields[i]);
    auto hit = m.Lookup(words);
    REQUIRE(hit.has_value());
    double logprob = 0.0;
    REQUIRE(TryParseDouble(fields[0], &logprob));
    CHECK(hit->logprob == logprob);
    if (static_cast<int>(fields.size()) == order + 2) {
      double backoff = 0.0;
      REQUIRE(TryParseDouble(fields[order + 1], &backoff));
      REQUIRE(hit->backoff.has_value());
      CHECK(*hit->backoff == backoff);
    } else {
      CHECK(!hit->backoff.has_value());
    }
  }
}

TEST_CASE("sequence log-prob applies the back-off recursion") {
  ArpaModel m = TinyModel();
  SUBCASE("direct bigram hit") {
    // p(a) + p(b|a)
    CHECK(m.SequenceLogProb(Words({"a", "b"})) ==
          doctest::Approx(-0.903090).epsilon(1e-9));
  }
  SUBCASE("back-off through the abandoned context") {
    // p(a) + bo(a) + p(c)
    CHECK(m.SequenceLogProb(Words({"a", "c"})) ==
          doctest::Approx(-1.806180).epsilon(1e-9));
  }
  SUBCASE("context without a backoff weight contributes nothing extra") {
    // p(c) + p(a): "c a" missing, bo(c) absent.
    CHECK(m.SequenceLogProb(Words({"c", "a"})) ==
          doctest::Approx(-0.903090 - 0.602060).epsilon(1e-9));
  }
  SUBCASE("unknown words map to <unk>") {
    CHECK(m.SequenceLogProb(Words({"zzz"})) ==
          doctest::Approx(-0.698970).epsilon(1e-9));
  }
  SUBCASE("empty sequence scores zero") {
    CHECK(m.SequenceLogProb({}) == 0.0);
  }
}

TEST_CASE("unigram probabilities are normalized in the fixture") {
  ArpaModel m = TinyModel();
  double sum = 0.0;
  for (const auto& [word, entry] : m.table(1)) {
    sum += std::pow(10.0, entry.logprob);
  }
  CHECK(sum <= 1.0 + 1e-6);
}

TEST_CASE("write/parse round-trips every entry bit-exactly") {
  ArpaModel m = TinyModel();
  std::ostringstream out;
  WriteArpa(m, out);
  std::istringstream in(out.str());
  ArpaModel back = ParseArpa(in);

  REQUIRE(back.max_order() == m.max_order());
  for (int order = 1; order <= m.max_order(); ++order) {
    REQUIRE(back.table(order).size() == m.table(order).size());
    auto it = back.table(order).begin();
    for (const auto& [key, entry] : m.table(order)) {
      CHECK(it->first == key);
      CHECK(it->second.logprob == entry.logprob);
      CHECK(it->second.backoff == entry.backoff);
      ++it;
    }
  }

  // A second write is byte-identical: the text form is canonical.
  std::ostringstream again;
  WriteArpa(back, again);
  CHECK(again.str() == out.str());
}

TEST_CASE("round-trip holds for randomized weights") {
  std::mt19937_64 rng(20260816);
  std::uniform_real_distribution<double> weight(-9.0, 0.0);
  std::ostringstream text;
  text << "\\data\\\nngram 1=50\n\n\\1-grams:\n";
  for (int i = 0; i < 50; ++i) {
    text << FormatDouble(weight(rng)) << "\tw" << i;
    if (i % 2 == 0) text << '\t' << FormatDouble(weight(rng));
    text << '\n';
  }
  text << "\n\\end\\\n";

  std::istringstream in(text.str());
  ArpaModel m = ParseArpa(in);
  std::ostringstream out1;
  WriteArpa(m, out1);
  std::istringstream in2(out1.str());
  ArpaModel m2 = ParseArpa(in2);
  std::ostringstream out2;
  WriteArpa(m2, out2);
  CHECK(out1.str() == out2.str());
  CHECK(m2.table(1).size() == 50);
}
