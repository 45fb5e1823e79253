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

#ifndef ACBIAS_CONTEXT_GRAPH_H_
#define ACBIAS_CONTEXT_GRAPH_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace acbias {

enum class Provenance : uint8_t {
  kLm = 0,            // plain LM n-gram
  kKeywordInLm = 1,   // bias keyword present in the LM
  kKeywordOutLm = 2,  // bias keyword absent from the LM
};

const char* ProvenanceName(Provenance p);

// One biasable token sequence. entry_cost == arc_cost * tokens.size().
struct ContextEntry {
  std::vector<int32_t> tokens;
  double arc_cost = 0.0;    // non-negative, applied per arc on this path
  double entry_cost = 0.0;  // total completion credit
  Provenance provenance = Provenance::kLm;
  std::string surface;      // original words, for reports
};

// Per-hypothesis cursor. Cheap to copy; beam search forks it freely.
struct MatchState {
  uint32_t node = 0;         // always valid in the owning graph
  double accumulated = 0.0;  // running bias total, diagnostic only
};

// Immutable Aho-Corasick automaton over token ids with per-arc costs.
//
// Every node carries path_cost P(u) (sum of arc costs from the root) and
// output_sum M(u) (entry costs of all entries ending on u's output chain,
// u included). Advancing by one token from u to v yields the score delta
//   P(v) - P(u) + M(v)
// so a stream accumulates provisional credit while inside a partial match,
// reclaims it on a failure transition, and banks entry_cost for every
// completed occurrence. Finalize() reclaims whatever provisional credit is
// left, which makes the total over a whole stream equal the sum of
// entry_cost over all occurrences of all entries in that stream.
//
// Safe for concurrent reads from any number of threads after Build().
class ContextGraph {
 public:
  struct Node {
    int32_t token = -1;        // token on the arc entering this node
    uint32_t parent = 0;
    double arc_cost = 0.0;
    uint32_t fail = 0;         // longest proper suffix that is a trie path
    int32_t output = -1;       // nearest entry-ending fail ancestor, -1 none
    int32_t entry = -1;        // index into entries(), -1 if not an end
    double path_cost = 0.0;    // P(u)
    double output_sum = 0.0;   // M(u)
    uint32_t child_first = 0;  // children occupy [child_first, child_first+child_count)
    uint32_t child_count = 0;  // in node-index order == ascending token order
  };

  ContextGraph();

  // Builds the automaton. Entries are canonicalized first (sorted by token
  // sequence, duplicates collapsed keeping the strongest), so the result is
  // independent of input order. When two entries share a path prefix with
  // different arc costs, the shared arc takes the larger cost; entry_cost
  // stays per-entry. Throws ConfigError on an empty-token entry or a
  // negative arc cost. An empty entry list yields a valid root-only graph.
  static ContextGraph Build(std::vector<ContextEntry> entries);

  // Consumes one token: child transition when possible, otherwise down the
  // fail chain (to the root at worst). Returns the score delta and moves
  // the state. Deltas can be negative when provisional prefix credit is
  // reclaimed. Unknown tokens route to the root. fail_steps, when given,
  // is incremented once per fail-link hop.
  double Advance(MatchState* state, int32_t token,
                 uint64_t* fail_steps = nullptr) const;

  // Ends a hypothesis: reclaims the remaining prefix credit (-P(node)) and
  // resets the state to the root.
  double Finalize(MatchState* state) const;

  // Sum of Advance deltas over `tokens` plus Finalize: the total entry_cost
  // of all occurrences of all entries inside `tokens`.
  double ScoreSequence(std::span<const int32_t> tokens) const;

  // Versioned binary image with a trailing checksum. Node order is BFS with
  // children in ascending token order, so equal graphs serialize to equal
  // bytes. Deserialize throws FormatError on magic/version mismatch,
  // truncation, out-of-bounds indices, or checksum failure.
  void Serialize(std::ostream& out) const;
  static ContextGraph Deserialize(std::istream& in);

  size_t num_nodes() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<ContextEntry>& entries() const { return entries_; }

 private:
  uint32_t Goto(uint32_t node, int32_t token, uint64_t* fail_steps) const;
  int32_t FindChild(uint32_t node, int32_t token) const;
  void FreezeDerived();  // recompute path_cost / output_sum / child ranges

  struct ChildRange {
    uint32_t first = 0;
    uint32_t count = 0;
  };

  std::vector<Node> nodes_;          // BFS order, nodes_[0] is the root
  std::vector<int32_t> node_token_;  // token per node, for child searches
  std::vector<ContextEntry> entries_;
  // Dense copies of the matcher's hot fields. Advance touches only these
  // (plus node_token_), keeping the working set cache-resident on graphs
  // whose Node array no longer fits: ~32 bytes per node versus the full
  // struct's stride.
  std::vector<ChildRange> child_range_;
  std::vector<uint32_t> fail_;
  std::vector<double> path_;     // P(u)
  std::vector<double> outsum_;   // M(u)
  // Bitmap of (child token & 63) per node: one AND rejects most failed
  // child probes before the binary search. Nodes with many children
  // saturate their mask and lose nothing but the AND.
  std::vector<uint64_t> child_mask_;
  // O(1) transition row for the root, the terminus of every fail chain:
  // root_next_[t] is the root's t-child or the root itself. Built when the
  // arc-label range is sane (kRootRowBudget); huge or negative labels fall
  // back to the searched path.
  static constexpr int64_t kRootRowBudget = int64_t{1} << 20;
  std::vector<uint32_t> root_next_;
  uint32_t root_width_ = 0;
};

}  // namespace acbias

#endif  // ACBIAS_CONTEXT_GRAPH_H_
