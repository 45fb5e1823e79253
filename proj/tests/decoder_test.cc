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
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "acbias/context_graph.h"
#include "acbias/decoder.h"
#include "acbias/errors.h"
#include "testing/fixtures.h"
#include "testing/oracles.h"

using namespace acbias;
using namespace acbias::testing;

namespace {

EmissionMatrix Matrix(int32_t frames, int32_t vocab,
                      std::vector<double> logprobs, int32_t blank = 0) {
  EmissionMatrix em;
  em.num_frames = frames;
  em.vocab_size = vocab;
  em.blank_id = blank;
  em.frame_shift_s = 0.04;
  em.logprobs = std::move(logprobs);
  return em;
}

ContextEntry Entry(std::vector<int32_t> tokens, double arc_cost) {
  ContextEntry e;
  e.entry_cost = arc_cost * static_cast<double>(tokens.size());
  e.tokens = std::move(tokens);
  e.arc_cost = arc_cost;
  e.provenance = Provenance::kKeywordOutLm;
  return e;
}

EmissionMatrix ParseText(const std::string& text) {
  std::istringstream in(text);
  return ParseEmissionMatrix(in);
}

NBestCandidate TextCandidate(const std::string& text, double base) {
  NBestCandidate c;
  c.has_text = true;
  c.text = text;
  c.base_score = base;
  c.score = base;
  return c;
}

NBestCandidate TokenCandidate(std::vector<int32_t> tokens, double base) {
  NBestCandidate c;
  c.has_tokens = true;
  c.tokens = std::move(tokens);
  c.base_score = base;
  c.score = base;
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Emission matrix I/O

TEST_CASE("emission matrices round-trip through the text format") {
  std::mt19937_64 rng(404);
  for (int iter = 0; iter < 20; ++iter) {
    EmissionMatrix em = RandomEmissions(&rng, 1 + iter % 5, 2 + iter % 4);
    std::ostringstream out;
    WriteEmissionMatrix(em, out);
    EmissionMatrix back = ParseText(out.str());
    CHECK(back.num_frames == em.num_frames);
    CHECK(back.vocab_size == em.vocab_size);
    CHECK(back.blank_id == em.blank_id);
    CHECK(back.frame_shift_s == em.frame_shift_s);
    CHECK(back.logprobs == em.logprobs);  // shortest-round-trip printing
  }
}

TEST_CASE("emission parsing accepts a zero-frame matrix") {
  EmissionMatrix em = ParseText("0 3 0 0.01\n");
  CHECK(em.num_frames == 0);
  CHECK(em.AudioSeconds() == doctest::Approx(0.0));
}

TEST_CASE("emission parsing rejects malformed input") {
  const std::string row = "-1.0986122886681098 -1.0986122886681098 "
                          "-1.0986122886681098\n";
  // Reference: a well-formed two-frame matrix.
  CHECK_NOTHROW(ParseText("2 3 0 0.01\n" + row + row));

  SUBCASE("header with too few fields") {
    CHECK_THROWS_AS(ParseText("2 3 0\n" + row + row), FormatError);
  }
  SUBCASE("non-integral frame count") {
    CHECK_THROWS_AS(ParseText("2.5 3 0 0.01\n" + row + row), FormatError);
  }
  SUBCASE("negative frame count") {
    CHECK_THROWS_AS(ParseText("-1 3 0 0.01\n"), FormatError);
  }
  SUBCASE("blank id out of range") {
    CHECK_THROWS_AS(ParseText("2 3 3 0.01\n" + row + row), FormatError);
  }
  SUBCASE("non-positive frame shift") {
    CHECK_THROWS_AS(ParseText("2 3 0 0\n" + row + row), FormatError);
  }
  SUBCASE("missing row") {
    CHECK_THROWS_AS(ParseText("2 3 0 0.01\n" + row), FormatError);
  }
  SUBCASE("extra row") {
    CHECK_THROWS_AS(ParseText("1 3 0 0.01\n" + row + row), FormatError);
  }
  SUBCASE("short row") {
    CHECK_THROWS_AS(ParseText("1 3 0 0.01\n-1.0 -1.0\n"), FormatError);
  }
  SUBCASE("non-numeric value") {
    CHECK_THROWS_AS(ParseText("1 3 0 0.01\n-1.0 x -1.0\n"), FormatError);
  }
  SUBCASE("unnormalized row") {
    CHECK_THROWS_AS(ParseText("1 3 0 0.01\n-0.1 -0.2 -0.3\n"), FormatError);
  }
  SUBCASE("positive infinity") {
    CHECK_THROWS_AS(ParseText("1 3 0 0.01\n-1.0 inf -1.0\n"), FormatError);
  }
}

// ---------------------------------------------------------------------------
// Beam search

TEST_CASE("greedy no-context decoding emits nothing when blank dominates") {
  // One frame, blank carries almost all probability mass.
  EmissionMatrix em = Matrix(1, 3, {std::log(0.95), std::log(0.03),
                                    std::log(0.02)});
  DecodeOptions opts;
  opts.beam = 1;
  std::vector<DecodedHypothesis> hyps = BeamSearchFuse(em, nullptr, opts);
  REQUIRE(hyps.size() == 1);
  CHECK(hyps[0].tokens.empty());
  CHECK(hyps[0].base_score == doctest::Approx(std::log(0.95)).epsilon(1e-12));
  CHECK(hyps[0].ctx_score == doctest::Approx(0.0));
}

TEST_CASE("a biased entry flips the decision against the acoustic argmax") {
  // Frame 1 prefers "a" acoustically; frame 2 is essentially blank.
  EmissionMatrix em = Matrix(2, 3,
                             {-2.0, -0.6, -0.9,    // blank, a, b
                              -0.1, -3.0, -3.0});
  ContextGraph graph = ContextGraph::Build({Entry({2}, 2.0)});  // biases "b"

  DecodeOptions opts;
  opts.beam = 8;

  std::vector<DecodedHypothesis> baseline = BeamSearchFuse(em, nullptr, opts);
  REQUIRE(!baseline.empty());
  CHECK(baseline[0].tokens == std::vector<int32_t>{1});
  CHECK(baseline[0].base_score ==
        doctest::Approx(std::log(std::exp(-0.7) + std::exp(-5.0)))
            .epsilon(1e-12));

  std::vector<DecodedHypothesis> fused = BeamSearchFuse(em, &graph, opts);
  REQUIRE(!fused.empty());
  CHECK(fused[0].tokens == std::vector<int32_t>{2});
  CHECK(fused[0].ctx_score == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fused[0].combined ==
        doctest::Approx(std::log(std::exp(-1.0) + std::exp(-5.0)) + 2.0)
            .epsilon(1e-12));
}

TEST_CASE("bias in pruning rescues a keyword that a narrow beam would drop") {
  EmissionMatrix em = Matrix(2, 3,
                             {-2.0, -0.6, -0.9,
                              -0.1, -3.0, -3.0});
  ContextGraph graph = ContextGraph::Build({Entry({2}, 2.0)});

  DecodeOptions opts;
  opts.beam = 1;
  opts.bias_in_pruning = true;
  std::vector<DecodedHypothesis> biased = BeamSearchFuse(em, &graph, opts);
  REQUIRE(biased.size() == 1);
  CHECK(biased[0].tokens == std::vector<int32_t>{2});
  CHECK(biased[0].combined == doctest::Approx(-1.0 + 2.0).epsilon(1e-12));

  opts.bias_in_pruning = false;
  std::vector<DecodedHypothesis> deferred = BeamSearchFuse(em, &graph, opts);
  REQUIRE(deferred.size() == 1);
  // Pruning by base score alone keeps "a"; bias never gets to help "b".
  CHECK(deferred[0].tokens == std::vector<int32_t>{1});
}

TEST_CASE("zero fusion scale reproduces graph-free decoding") {
  std::mt19937_64 rng(777);
  for (int iter = 0; iter < 20; ++iter) {
    EmissionMatrix em = RandomEmissions(&rng, 4, 4);
    ContextGraph graph = ContextGraph::Build(RandomEntries(&rng, 4, 10, 3));
    DecodeOptions with;
    with.beam = 4;
    with.lambda_ctx = 0.0;
    DecodeOptions without;
    without.beam = 4;
    std::vector<DecodedHypothesis> a = BeamSearchFuse(em, &graph, with);
    std::vector<DecodedHypothesis> b = BeamSearchFuse(em, nullptr, without);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].tokens == b[i].tokens);
      CHECK(a[i].base_score == doctest::Approx(b[i].base_score).epsilon(1e-12));
      CHECK(a[i].combined == doctest::Approx(b[i].base_score).epsilon(1e-12));
    }
  }
}

TEST_CASE("equal-score hypotheses rank lexicographically by token ids") {
  // Tokens 1 and 2 are exactly interchangeable in every frame, so all their
  // mirror hypotheses tie and only the deterministic tie-break orders them.
  EmissionMatrix em = Matrix(2, 3,
                             {-3.0, -0.7, -0.7,
                              -0.2, -2.2, -2.2});
  DecodeOptions opts;
  opts.beam = 16;
  std::vector<DecodedHypothesis> hyps = BeamSearchFuse(em, nullptr, opts);
  REQUIRE(hyps.size() == 7);
  CHECK(hyps[0].tokens == std::vector<int32_t>{1});
  CHECK(hyps[1].tokens == std::vector<int32_t>{2});
  CHECK(hyps[0].combined == hyps[1].combined);
  CHECK(hyps[2].tokens == std::vector<int32_t>{1, 1});
  CHECK(hyps[3].tokens == std::vector<int32_t>{1, 2});
  CHECK(hyps[4].tokens == std::vector<int32_t>{2, 1});
  CHECK(hyps[5].tokens == std::vector<int32_t>{2, 2});
  CHECK(hyps[6].tokens == std::vector<int32_t>{});
  // Equal label sequences merged their path mass.
  CHECK(hyps[0].base_score ==
        doctest::Approx(std::log(std::exp(-0.9) + std::exp(-5.2)))
            .epsilon(1e-12));
}

TEST_CASE("decoding rejects invalid options") {
  EmissionMatrix em = Matrix(1, 2, {std::log(0.5), std::log(0.5)});
  DecodeOptions opts;
  opts.beam = 0;
  CHECK_THROWS_AS(BeamSearchFuse(em, nullptr, opts), ConfigError);
  opts.beam = 1;
  opts.lambda_ctx = -0.5;
  CHECK_THROWS_AS(BeamSearchFuse(em, nullptr, opts), ConfigError);
}

TEST_CASE("PROPERTY: unpruned fused search equals exhaustive enumeration") {
  std::mt19937_64 rng(20260816);
  for (int iter = 0; iter < 60; ++iter) {
    int32_t frames = 1 + static_cast<int32_t>(rng() % 4);
    int32_t vocab = 2 + static_cast<int32_t>(rng() % 3);
    EmissionMatrix em = RandomEmissions(&rng, frames, vocab);
    std::vector<ContextEntry> entries = RandomEntries(&rng, vocab, 8, 3);
    ContextGraph graph = ContextGraph::Build(entries);

    DecodeOptions opts;
    opts.beam = 1 << 20;  // wider than any reachable hypothesis set
    std::vector<DecodedHypothesis> got = BeamSearchFuse(em, &graph, opts);
    std::vector<OracleHypothesis> want = OracleDecode(em, entries, 1.0);

    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].tokens == want[i].tokens);
      CHECK(got[i].base_score ==
            doctest::Approx(want[i].base).epsilon(1e-9));
      CHECK(got[i].combined ==
            doctest::Approx(want[i].combined).epsilon(1e-9));
    }
  }
}

// Note: the best score is NOT monotone in the beam width. Merging pools the
// mass of surviving prefixes, so widening the beam re-ranks mid-search states
// and can evict the eventual winner of a narrower run. What does hold: a
// pruned run only loses path mass, so no reported score can exceed the
// exhaustive posterior of the same token sequence, and no pruned best can
// beat the exhaustive best.
TEST_CASE("PROPERTY: pruned scores never exceed the exhaustive posterior") {
  std::mt19937_64 rng(31415);
  for (int iter = 0; iter < 60; ++iter) {
    EmissionMatrix em = RandomEmissions(&rng, 4, 4);
    std::vector<ContextEntry> entries = RandomEntries(&rng, 4, 8, 3);
    ContextGraph graph = ContextGraph::Build(entries);
    std::vector<OracleHypothesis> exact = OracleDecode(em, entries, 1.0);
    REQUIRE(!exact.empty());
    std::map<std::vector<int32_t>, double> exact_combined;
    for (const OracleHypothesis& h : exact) exact_combined[h.tokens] = h.combined;
    for (int beam : {1, 2, 3, 4, 8, 64, 1 << 20}) {
      DecodeOptions opts;
      opts.beam = beam;
      std::vector<DecodedHypothesis> hyps = BeamSearchFuse(em, &graph, opts);
      REQUIRE(!hyps.empty());
      CHECK(hyps[0].combined <= exact[0].combined + 1e-9);
      for (const DecodedHypothesis& h : hyps) {
        auto it = exact_combined.find(h.tokens);
        REQUIRE(it != exact_combined.end());
        CHECK(h.combined <= it->second + 1e-9);
      }
    }
  }
}

TEST_CASE("decoding twice yields identical results") {
  std::mt19937_64 rng(606);
  EmissionMatrix em = RandomEmissions(&rng, 6, 4);
  ContextGraph graph = ContextGraph::Build(RandomEntries(&rng, 4, 12, 4));
  DecodeOptions opts;
  opts.beam = 4;
  std::vector<DecodedHypothesis> first = BeamSearchFuse(em, &graph, opts);
  std::vector<DecodedHypothesis> second = BeamSearchFuse(em, &graph, opts);
  REQUIRE(first.size() == second.size());
  for (size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].tokens == second[i].tokens);
    CHECK(first[i].base_score == second[i].base_score);
    CHECK(first[i].combined == second[i].combined);
  }
}

// ---------------------------------------------------------------------------
// N-best I/O

TEST_CASE("n-best lists round-trip through line-delimited records") {
  std::vector<NBestList> lists(2);
  lists[0].utt_id = "utt1";
  lists[0].candidates.push_back(TextCandidate("a b", -1.25));
  NBestCandidate both = TokenCandidate({1, 2}, -2.5);
  both.has_text = true;
  both.text = "a b";
  both.score = -0.5;  // already rescored
  lists[0].candidates.push_back(both);
  lists[1].utt_id = "utt2";
  lists[1].candidates.push_back(TokenCandidate({3}, -0.125));

  std::ostringstream out;
  WriteNBest(lists, out);
  std::istringstream in(out.str());
  std::vector<NBestList> back = ParseNBest(in);

  REQUIRE(back.size() == 2);
  CHECK(back[0].utt_id == "utt1");
  REQUIRE(back[0].candidates.size() == 2);
  CHECK(back[0].candidates[0].has_text);
  CHECK_FALSE(back[0].candidates[0].has_tokens);
  CHECK(back[0].candidates[0].text == "a b");
  CHECK(back[0].candidates[0].base_score == -1.25);
  CHECK(back[0].candidates[0].score == -1.25);
  CHECK(back[0].candidates[1].has_tokens);
  CHECK(back[0].candidates[1].tokens == std::vector<int32_t>{1, 2});
  CHECK(back[0].candidates[1].score == -0.5);
  CHECK(back[1].candidates[0].tokens == std::vector<int32_t>{3});
}

TEST_CASE("consecutive records with one utterance id form one list") {
  std::istringstream in(
      "{\"utt\":\"A\",\"base_score\":-1.0,\"text\":\"x\"}\n"
      "{\"utt\":\"A\",\"base_score\":-2.0,\"text\":\"y\"}\n"
      "{\"utt\":\"B\",\"base_score\":-3.0,\"text\":\"z\"}\n"
      "\n"
      "{\"utt\":\"A\",\"base_score\":-4.0,\"text\":\"w\"}\n");
  std::vector<NBestList> lists = ParseNBest(in);
  REQUIRE(lists.size() == 3);
  CHECK(lists[0].utt_id == "A");
  CHECK(lists[0].candidates.size() == 2);
  CHECK(lists[1].utt_id == "B");
  CHECK(lists[2].utt_id == "A");
  CHECK(lists[2].candidates.size() == 1);
}

TEST_CASE("metadata records are ignored when reading n-best files") {
  std::istringstream in(
      "{\"metadata\":{\"lambda\":0.5,\"scorer\":\"graph\"}}\n"
      "{\"utt\":\"A\",\"base_score\":-1.0,\"text\":\"x\"}\n");
  std::vector<NBestList> lists = ParseNBest(in);
  REQUIRE(lists.size() == 1);
  CHECK(lists[0].candidates.size() == 1);
}

TEST_CASE("malformed n-best records are rejected") {
  auto parse = [](const std::string& line) {
    std::istringstream in(line);
    return ParseNBest(in);
  };
  CHECK_THROWS_AS(parse("not json\n"), FormatError);
  CHECK_THROWS_AS(parse("[1,2]\n"), FormatError);
  CHECK_THROWS_AS(parse("{\"base_score\":-1.0,\"text\":\"x\"}\n"),
                  FormatError);
  CHECK_THROWS_AS(parse("{\"utt\":\"A\",\"text\":\"x\"}\n"), FormatError);
  CHECK_THROWS_AS(parse("{\"utt\":\"A\",\"base_score\":-1.0}\n"),
                  FormatError);
  CHECK_THROWS_AS(
      parse("{\"utt\":\"A\",\"base_score\":-1.0,\"tokens\":[1,\"x\"]}\n"),
      FormatError);
  CHECK_THROWS_AS(
      parse("{\"utt\":\"A\",\"base_score\":1e999,\"text\":\"x\"}\n"),
      FormatError);
}

// ---------------------------------------------------------------------------
// Rescoring

TEST_CASE("graph rescoring promotes the candidate containing the keyword") {
  SubwordVocab vocab = TinyVocabulary();
  // Keyword "a b" over pieces [▁a, ▁b], per-arc 1.5, completion credit 3.0.
  ContextGraph graph = ContextGraph::Build({Entry({1, 2}, 1.5)});

  NBestList list;
  list.utt_id = "u";
  list.candidates.push_back(TextCandidate("c a", -1.0));
  list.candidates.push_back(TextCandidate("a b", -1.2));

  RescoreWithGraph(&list, graph, &vocab, 1.0);
  REQUIRE(list.candidates.size() == 2);
  CHECK(list.candidates[0].text == "a b");
  CHECK(list.candidates[0].score == doctest::Approx(-1.2 + 3.0));
  CHECK(list.candidates[0].base_score == -1.2);
  CHECK(list.candidates[1].text == "c a");
  CHECK(list.candidates[1].score == doctest::Approx(-1.0));
}

TEST_CASE("rescoring at zero scale keeps a ranked list exactly in place") {
  SubwordVocab vocab = TinyVocabulary();
  ContextGraph graph = ContextGraph::Build({Entry({1, 2}, 1.5)});
  NBestList list;
  list.utt_id = "u";
  // Ranked input with an exact tie in the middle: order must not move.
  list.candidates.push_back(TextCandidate("c a", -1.0));
  list.candidates.push_back(TextCandidate("a b", -2.0));
  list.candidates.push_back(TextCandidate("b c", -2.0));
  list.candidates.push_back(TextCandidate("a", -3.0));

  RescoreWithGraph(&list, graph, &vocab, 0.0);
  CHECK(list.candidates[0].text == "c a");
  CHECK(list.candidates[1].text == "a b");
  CHECK(list.candidates[2].text == "b c");
  CHECK(list.candidates[3].text == "a");
  for (const NBestCandidate& c : list.candidates) {
    CHECK(c.score == c.base_score);
  }
}

TEST_CASE("rescoring a single candidate only augments its score") {
  SubwordVocab vocab = TinyVocabulary();
  ContextGraph graph = ContextGraph::Build({Entry({3, 1}, 2.0)});  // "c a"
  NBestList list;
  list.utt_id = "u";
  list.candidates.push_back(TextCandidate("c a", -1.0));
  RescoreWithGraph(&list, graph, &vocab, 0.5);
  REQUIRE(list.candidates.size() == 1);
  CHECK(list.candidates[0].score == doctest::Approx(-1.0 + 0.5 * 4.0));
}

TEST_CASE("token-level candidates rescore without any vocabulary") {
  ContextGraph graph = ContextGraph::Build({Entry({1, 2}, 1.5)});
  NBestList list;
  list.utt_id = "u";
  list.candidates.push_back(TokenCandidate({3, 1}, -1.0));
  list.candidates.push_back(TokenCandidate({1, 2}, -1.2));
  RescoreWithGraph(&list, graph, nullptr, 1.0);
  CHECK(list.candidates[0].tokens == std::vector<int32_t>{1, 2});
}

TEST_CASE("word-model rescoring converts log10 scores to natural logs") {
  ArpaModel model = TinyModel();
  SubwordVocab vocab = TinyVocabulary();

  NBestList list;
  list.utt_id = "u";
  list.candidates.push_back(TextCandidate("c a", 0.0));
  list.candidates.push_back(TokenCandidate({1, 2}, 0.0));  // "a b"

  RescoreWithWordLm(&list, model, &vocab, 1.0);
  // "a b": p(a) + p(b|a) = −0.602060 + −0.301030 = −0.903090 (log10),
  // "c a": p(c) + p(a) = −0.903090 + −0.602060 = −1.505150 (no back-off
  // weight stored for "c"), so "a b" ranks first after conversion.
  REQUIRE(list.candidates.size() == 2);
  CHECK(list.candidates[0].has_tokens);
  CHECK(list.candidates[0].score ==
        doctest::Approx(-0.903090 * kLog10ToNatural).epsilon(1e-9));
  CHECK(list.candidates[1].score ==
        doctest::Approx(-1.505150 * kLog10ToNatural).epsilon(1e-9));
}

TEST_CASE("rescoring without a needed vocabulary is a configuration error") {
  ContextGraph graph = ContextGraph::Build({Entry({1}, 1.0)});
  ArpaModel model = TinyModel();

  NBestList text_only;
  text_only.utt_id = "u";
  text_only.candidates.push_back(TextCandidate("a", -1.0));
  CHECK_THROWS_AS(RescoreWithGraph(&text_only, graph, nullptr, 1.0),
                  ConfigError);

  NBestList token_only;
  token_only.utt_id = "u";
  token_only.candidates.push_back(TokenCandidate({1}, -1.0));
  CHECK_THROWS_AS(RescoreWithWordLm(&token_only, model, nullptr, 1.0),
                  ConfigError);
}
