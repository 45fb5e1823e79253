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

#include "acbias/context_graph.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <iterator>
#include <map>
#include <queue>

#include "acbias/errors.h"

namespace acbias {

namespace {

constexpr char kMagic[4] = {'A', 'C', 'G', 'B'};
constexpr uint32_t kFormatVersion = 1;

uint32_t Crc32(const void* data, size_t size) {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t crc = 0xFFFFFFFFu;
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

void PutU32(std::string* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU64(std::string* out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutI32(std::string* out, int32_t v) { PutU32(out, static_cast<uint32_t>(v)); }

void PutF64(std::string* out, double v) { PutU64(out, std::bit_cast<uint64_t>(v)); }

class ByteReader {
 public:
  ByteReader(const std::string& data, size_t pos) : data_(data), pos_(pos) {}

  uint32_t GetU32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  uint64_t GetU64() {
    Need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  int32_t GetI32() { return static_cast<int32_t>(GetU32()); }
  double GetF64() { return std::bit_cast<double>(GetU64()); }
  uint8_t GetU8() {
    Need(1);
    return static_cast<uint8_t>(data_[pos_++]);
  }

  std::string GetString(uint32_t len) {
    Need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  size_t pos() const { return pos_; }

 private:
  void Need(size_t n) {
    if (pos_ + n > data_.size()) throw FormatError("context graph: truncated data");
  }
  const std::string& data_;
  size_t pos_;
};

// Dedup preference: larger entry_cost wins, then keyword over LM, then the
// lexicographically smaller surface for full determinism.
bool EntryStronger(const ContextEntry& a, const ContextEntry& b) {
  if (a.entry_cost != b.entry_cost) return a.entry_cost > b.entry_cost;
  if (a.provenance != b.provenance)
    return static_cast<uint8_t>(a.provenance) > static_cast<uint8_t>(b.provenance);
  return a.surface < b.surface;
}

struct TrieNode {
  std::map<int32_t, uint32_t> children;
  int32_t token = -1;
  double arc_cost = 0.0;
  int32_t entry = -1;
};

}  // namespace

const char* ProvenanceName(Provenance p) {
  switch (p) {
    case Provenance::kLm: return "lm";
    case Provenance::kKeywordInLm: return "keyword_in_lm";
    case Provenance::kKeywordOutLm: return "keyword_out_lm";
  }
  return "unknown";
}

ContextGraph::ContextGraph() {
  nodes_.push_back(Node{});
  node_token_.push_back(-1);
}

ContextGraph ContextGraph::Build(std::vector<ContextEntry> entries) {
  for (const ContextEntry& e : entries) {
    if (e.tokens.empty()) {
      throw ConfigError("context graph: entry with empty token sequence ('" +
                        e.surface + "')");
    }
    if (e.arc_cost < 0.0 || !std::isfinite(e.arc_cost)) {
      throw ConfigError("context graph: negative or non-finite arc cost for '" +
                        e.surface + "'");
    }
    double expected = e.arc_cost * static_cast<double>(e.tokens.size());
    if (std::abs(e.entry_cost - expected) >
        1e-9 * std::max(1.0, std::abs(expected))) {
      throw ConfigError("context graph: entry_cost != arc_cost * length for '" +
                        e.surface + "'");
    }
  }

  // Canonical order: token sequence, strongest first among duplicates.
  std::sort(entries.begin(), entries.end(),
            [](const ContextEntry& a, const ContextEntry& b) {
              if (a.tokens != b.tokens) return a.tokens < b.tokens;
              return EntryStronger(a, b);
            });
  entries.erase(std::unique(entries.begin(), entries.end(),
                            [](const ContextEntry& a, const ContextEntry& b) {
                              return a.tokens == b.tokens;
                            }),
                entries.end());

  std::vector<TrieNode> trie(1);
  for (size_t ei = 0; ei < entries.size(); ++ei) {
    const ContextEntry& e = entries[ei];
    uint32_t u = 0;
    for (int32_t token : e.tokens) {
      auto it = trie[u].children.find(token);
      uint32_t v;
      if (it == trie[u].children.end()) {
        v = static_cast<uint32_t>(trie.size());
        trie[u].children.emplace(token, v);
        trie.push_back(TrieNode{});
        trie[v].token = token;
        trie[v].arc_cost = e.arc_cost;
      } else {
        v = it->second;
        // Shared prefix arcs keep the strongest bias.
        trie[v].arc_cost = std::max(trie[v].arc_cost, e.arc_cost);
      }
      u = v;
    }
    trie[u].entry = static_cast<int32_t>(ei);
  }

  // Renumber breadth-first with children in ascending token order, which
  // makes each node's children a contiguous index range.
  ContextGraph graph;
  graph.entries_ = std::move(entries);
  graph.nodes_.resize(trie.size());
  graph.node_token_.resize(trie.size());
  std::vector<uint32_t> order(1, 0);  // trie ids in BFS order
  std::vector<uint32_t> final_id(trie.size(), 0);
  order.reserve(trie.size());
  for (size_t head = 0; head < order.size(); ++head) {
    uint32_t tid = order[head];
    for (const auto& [token, child] : trie[tid].children) {
      final_id[child] = static_cast<uint32_t>(order.size());
      order.push_back(child);
    }
  }
  for (size_t i = 0; i < order.size(); ++i) {
    const TrieNode& t = trie[order[i]];
    Node& n = graph.nodes_[i];
    n.token = t.token;
    n.arc_cost = t.arc_cost;
    n.entry = t.entry;
    graph.node_token_[i] = t.token;
    for (const auto& [token, child] : t.children) {
      graph.nodes_[final_id[child]].parent = static_cast<uint32_t>(i);
    }
  }

  // Fail links, breadth-first: walk the parent's fail chain until some node
  // owns a child with the same token.
  graph.FreezeDerived();
  for (size_t v = 1; v < graph.nodes_.size(); ++v) {
    Node& n = graph.nodes_[v];
    if (n.parent == 0) {
      n.fail = 0;
    } else {
      uint32_t f = graph.nodes_[n.parent].fail;
      uint32_t fail = 0;
      while (true) {
        int32_t c = graph.FindChild(f, n.token);
        if (c >= 0 && static_cast<uint32_t>(c) != v) {
          fail = static_cast<uint32_t>(c);
          break;
        }
        if (f == 0) break;
        f = graph.nodes_[f].fail;
      }
      n.fail = fail;
    }
    const Node& fn = graph.nodes_[n.fail];
    n.output = fn.entry >= 0 ? static_cast<int32_t>(n.fail) : fn.output;
  }
  graph.FreezeDerived();
  return graph;
}

void ContextGraph::FreezeDerived() {
  // Child ranges from parent pointers; BFS order keeps siblings contiguous.
  for (Node& n : nodes_) {
    n.child_first = 0;
    n.child_count = 0;
  }
  for (size_t v = 1; v < nodes_.size(); ++v) {
    Node& p = nodes_[nodes_[v].parent];
    if (p.child_count == 0) p.child_first = static_cast<uint32_t>(v);
    ++p.child_count;
  }
  // P in BFS order (parents precede children), then M the same way.
  nodes_[0].path_cost = 0.0;
  nodes_[0].output_sum = 0.0;
  for (size_t v = 1; v < nodes_.size(); ++v) {
    Node& n = nodes_[v];
    n.path_cost = nodes_[n.parent].path_cost + n.arc_cost;
    double own = n.entry >= 0 ? entries_[n.entry].entry_cost : 0.0;
    double chained = n.output >= 0 ? nodes_[n.output].output_sum : 0.0;
    n.output_sum = own + chained;
  }
  // Dense matcher arrays, so Advance never walks the wide Node structs.
  child_range_.resize(nodes_.size());
  fail_.resize(nodes_.size());
  path_.resize(nodes_.size());
  outsum_.resize(nodes_.size());
  child_mask_.assign(nodes_.size(), 0);
  for (size_t v = 0; v < nodes_.size(); ++v) {
    const Node& n = nodes_[v];
    child_range_[v] = {n.child_first, n.child_count};
    fail_[v] = n.fail;
    path_[v] = n.path_cost;
    outsum_[v] = n.output_sum;
    if (v > 0) {
      child_mask_[n.parent] |=
          uint64_t{1} << (static_cast<uint32_t>(n.token) & 63u);
    }
  }

  root_next_.clear();
  root_width_ = 0;
  int64_t width = 0;
  for (int32_t t : node_token_) {
    width = std::max<int64_t>(width, int64_t{t} + 1);
  }
  if (width > 0 && width <= kRootRowBudget) {
    root_width_ = static_cast<uint32_t>(width);
    root_next_.assign(root_width_, 0);
    const ChildRange root = child_range_[0];
    for (uint32_t c = root.first; c < root.first + root.count; ++c) {
      if (node_token_[c] >= 0) root_next_[node_token_[c]] = c;
    }
  }
}

int32_t ContextGraph::FindChild(uint32_t node, int32_t token) const {
  const ChildRange r = child_range_[node];
  uint32_t lo = r.first;
  uint32_t hi = r.first + r.count;
  while (lo < hi) {
    uint32_t mid = lo + (hi - lo) / 2;
    if (node_token_[mid] < token) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < r.first + r.count && node_token_[lo] == token) {
    return static_cast<int32_t>(lo);
  }
  return -1;
}

uint32_t ContextGraph::Goto(uint32_t node, int32_t token,
                            uint64_t* fail_steps) const {
  const uint64_t bit = uint64_t{1} << (static_cast<uint32_t>(token) & 63u);
  uint32_t u = node;
  while (u != 0) {
    if ((child_mask_[u] & bit) != 0) {
      int32_t child = FindChild(u, token);
      if (child >= 0) return static_cast<uint32_t>(child);
    }
    u = fail_[u];
    if (fail_steps != nullptr) ++*fail_steps;
  }
  if (token >= 0 && static_cast<uint32_t>(token) < root_width_) {
    return root_next_[static_cast<uint32_t>(token)];
  }
  if ((child_mask_[0] & bit) != 0) {
    int32_t child = FindChild(0, token);
    if (child >= 0) return static_cast<uint32_t>(child);
  }
  return 0;
}

double ContextGraph::Advance(MatchState* state, int32_t token,
                             uint64_t* fail_steps) const {
  uint32_t v = Goto(state->node, token, fail_steps);
  double delta = path_[v] - path_[state->node] + outsum_[v];
  state->node = v;
  state->accumulated += delta;
  return delta;
}

double ContextGraph::Finalize(MatchState* state) const {
  double delta = -path_[state->node];
  state->node = 0;
  state->accumulated += delta;
  return delta;
}

double ContextGraph::ScoreSequence(std::span<const int32_t> tokens) const {
  MatchState state;
  double total = 0.0;
  for (int32_t token : tokens) total += Advance(&state, token);
  total += Finalize(&state);
  return total;
}

void ContextGraph::Serialize(std::ostream& out) const {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  PutU32(&buf, kFormatVersion);
  PutU64(&buf, nodes_.size());
  PutU64(&buf, entries_.size());
  for (const Node& n : nodes_) {
    PutI32(&buf, n.token);
    PutU32(&buf, n.parent);
    PutF64(&buf, n.arc_cost);
    PutU32(&buf, n.fail);
    PutI32(&buf, n.output);
    PutI32(&buf, n.entry);
  }
  for (const ContextEntry& e : entries_) {
    PutF64(&buf, e.arc_cost);
    PutF64(&buf, e.entry_cost);
    buf.push_back(static_cast<char>(e.provenance));
    PutU32(&buf, static_cast<uint32_t>(e.surface.size()));
    buf += e.surface;
    PutU32(&buf, static_cast<uint32_t>(e.tokens.size()));
    for (int32_t t : e.tokens) PutI32(&buf, t);
  }
  PutU32(&buf, Crc32(buf.data(), buf.size()));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

ContextGraph ContextGraph::Deserialize(std::istream& in) {
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (data.size() < sizeof(kMagic) + 4 + 8 + 8 + 4) {
    throw FormatError("context graph: truncated data");
  }
  if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("context graph: bad magic bytes");
  }
  uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, data.data() + data.size() - 4, 4);
  if (stored_crc != Crc32(data.data(), data.size() - 4)) {
    throw FormatError("context graph: checksum failure");
  }

  ByteReader r(data, sizeof(kMagic));
  uint32_t version = r.GetU32();
  if (version != kFormatVersion) {
    throw FormatError("context graph: unsupported format version " +
                      std::to_string(version));
  }
  uint64_t node_count = r.GetU64();
  uint64_t entry_count = r.GetU64();
  if (node_count == 0 || node_count > data.size() || entry_count > data.size()) {
    throw FormatError("context graph: implausible counts");
  }

  ContextGraph graph;
  graph.nodes_.assign(node_count, Node{});
  graph.node_token_.assign(node_count, -1);
  for (uint64_t i = 0; i < node_count; ++i) {
    Node& n = graph.nodes_[i];
    n.token = r.GetI32();
    n.parent = r.GetU32();
    n.arc_cost = r.GetF64();
    n.fail = r.GetU32();
    n.output = r.GetI32();
    n.entry = r.GetI32();
    graph.node_token_[i] = n.token;
    if (i == 0) {
      if (n.parent != 0 || n.fail != 0 || n.output != -1 || n.entry != -1) {
        throw FormatError("context graph: malformed root record");
      }
      continue;
    }
    // Fail and output links reach strictly shallower nodes, so in BFS
    // numbering they point strictly backwards; derived-value recomputation
    // below relies on that.
    if (n.parent >= i || n.fail >= i ||
        n.output < -1 || n.output >= static_cast<int64_t>(i) ||
        n.entry < -1 || n.entry >= static_cast<int64_t>(entry_count) ||
        n.arc_cost < 0.0 || !std::isfinite(n.arc_cost)) {
      throw FormatError("context graph: out-of-bounds node record " +
                        std::to_string(i));
    }
  }
  graph.entries_.resize(entry_count);
  for (uint64_t i = 0; i < entry_count; ++i) {
    ContextEntry& e = graph.entries_[i];
    e.arc_cost = r.GetF64();
    e.entry_cost = r.GetF64();
    uint8_t prov = r.GetU8();
    if (prov > static_cast<uint8_t>(Provenance::kKeywordOutLm)) {
      throw FormatError("context graph: bad provenance tag");
    }
    e.provenance = static_cast<Provenance>(prov);
    uint32_t surface_len = r.GetU32();
    if (surface_len > data.size()) {
      throw FormatError("context graph: implausible surface length");
    }
    e.surface = r.GetString(surface_len);
    uint32_t token_count = r.GetU32();
    if (token_count > data.size()) {
      throw FormatError("context graph: implausible token count");
    }
    e.tokens.resize(token_count);
    for (uint32_t t = 0; t < token_count; ++t) e.tokens[t] = r.GetI32();
  }
  if (r.pos() != data.size() - 4) {
    throw FormatError("context graph: trailing bytes before checksum");
  }

  graph.FreezeDerived();
  // BFS order requires contiguous children with ascending tokens.
  for (size_t v = 1; v < graph.nodes_.size(); ++v) {
    const Node& p = graph.nodes_[graph.nodes_[v].parent];
    if (v < p.child_first || v >= p.child_first + p.child_count) {
      throw FormatError("context graph: nodes not in BFS order");
    }
    if (v > p.child_first && graph.node_token_[v - 1] >= graph.node_token_[v] &&
        graph.nodes_[v - 1].parent == graph.nodes_[v].parent) {
      throw FormatError("context graph: children not in token order");
    }
  }
  return graph;
}

}  // namespace acbias
