// Online CDAWG construction.
//
// Follows the on-line algorithm of Inenaga et al. (2005): an Ukkonen-style
// active point (s, (k, p)) is maintained as a canonical reference pair; new
// open edges to the sink are added along the suffix-link chain, edges that
// would be split into an already created node are redirected instead, and a
// non-solid node reached by the new active point is separated.
//
// Text positions are 1-based and labels are inclusive (k, p) pairs inside this
// file; the frozen image uses 0-based half-open spans.

#include <algorithm>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "cdawgscan/cdawg.h"

namespace cdawgscan {
namespace {

constexpr NodeId kBottom = kNoNode - 1;
constexpr std::uint64_t kOpen = std::numeric_limits<std::uint64_t>::max();
constexpr NodeId kSource = 0;
constexpr NodeId kSink = 1;

class OnlineBuilder {
 public:
  explicit OnlineBuilder(const Corpus& corpus)
      : tokens_(corpus.tokens()), sentinel_(corpus.vocab_size()), n_(corpus.size() + 1) {
    nodes_.push_back({0, kBottom, kNoEdge});   // source
    nodes_.push_back({0, kNoNode, kNoEdge});   // sink; length tracks the text end
    edge_index_.reserve(n_ + n_ / 4);
    edges_.reserve(n_ + n_ / 4);
  }

  void run() {
    NodeId s = kSource;
    std::uint64_t k = 1;
    for (std::uint64_t p = 1; p <= n_; ++p) {
      end_ = p;
      std::tie(s, k) = update(s, k, p);
    }
    // The sentinel occurs once, so the final active point is the empty string.
  }

  std::vector<std::byte> freeze(unsigned handle_width, const Corpus& corpus);

 private:
  struct Node {
    std::int64_t length;
    NodeId suf;
    EdgeId first_edge;
  };
  struct Edge {
    TokenId token;
    NodeId target;
    EdgeId next;
    std::uint64_t k;
    std::uint64_t p;  // kOpen for edges into the sink that grow with the text
  };

  TokenId sym(std::uint64_t i) const { return i == n_ ? sentinel_ : tokens_[i - 1]; }

  static std::uint64_t key(NodeId s, TokenId c) {
    return (static_cast<std::uint64_t>(s) << 32) | c;
  }

  EdgeId find(NodeId s, TokenId c) const {
    auto it = edge_index_.find(key(s, c));
    return it == edge_index_.end() ? kNoEdge : it->second;
  }

  std::uint64_t edge_end(const Edge& e) const { return e.p == kOpen ? end_ : e.p; }
  std::uint64_t edge_len(const Edge& e) const { return edge_end(e) - e.k + 1; }

  std::int64_t length(NodeId s) const {
    if (s == kBottom) return -1;
    if (s == kSink) return static_cast<std::int64_t>(end_);
    return nodes_[s].length;
  }

  NodeId new_node(std::int64_t length) {
    if (nodes_.size() >= kBottom) {
      throw Error(ErrorKind::kCapacity, "node capacity of 32-bit handles exceeded");
    }
    nodes_.push_back({length, kNoNode, kNoEdge});
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  void add_edge(NodeId from, std::uint64_t k, std::uint64_t p, NodeId to) {
    if (edges_.size() >= kNoEdge) {
      throw Error(ErrorKind::kCapacity, "edge capacity of 32-bit handles exceeded");
    }
    const auto id = static_cast<EdgeId>(edges_.size());
    const TokenId c = sym(k);
    edges_.push_back({c, to, nodes_[from].first_edge, k, p});
    nodes_[from].first_edge = id;
    edge_index_.emplace(key(from, c), id);
  }

  std::pair<NodeId, std::uint64_t> canonize(NodeId s, std::uint64_t k, std::uint64_t p) const {
    if (k > p) return {s, k};
    if (s == kBottom) {
      s = kSource;
      ++k;
      if (k > p) return {s, k};
    }
    const Edge* e = &edges_[find(s, sym(k))];
    while (edge_len(*e) <= p - k + 1) {
      k += edge_len(*e);
      s = e->target;
      if (k > p) break;
      e = &edges_[find(s, sym(k))];
    }
    return {s, k};
  }

  // Whether the position (s, (k, p)) can be extended by c.
  bool check_end_point(NodeId s, std::uint64_t k, std::uint64_t p, TokenId c) const {
    if (k <= p) {
      const Edge& e = edges_[find(s, sym(k))];
      return c == sym(e.k + p - k + 1);
    }
    return s == kBottom || find(s, c) != kNoEdge;
  }

  NodeId extension(NodeId s, std::uint64_t k, std::uint64_t p) const {
    if (k > p) return s;
    return edges_[find(s, sym(k))].target;
  }

  void redirect_edge(NodeId s, std::uint64_t k, std::uint64_t p, NodeId r) {
    Edge& e = edges_[find(s, sym(k))];
    e.p = e.k + p - k;
    e.target = r;
  }

  NodeId split_edge(NodeId s, std::uint64_t k, std::uint64_t p) {
    const EdgeId id = find(s, sym(k));
    const NodeId r = new_node(length(s) + static_cast<std::int64_t>(p - k + 1));
    const Edge old = edges_[id];
    const std::uint64_t mid = old.k + p - k;
    add_edge(r, mid + 1, old.p, old.target);
    Edge& e = edges_[id];  // add_edge may have reallocated
    e.p = mid;
    e.target = r;
    return r;
  }

  std::pair<NodeId, std::uint64_t> separate_node(NodeId s, std::uint64_t k, std::uint64_t p) {
    const auto [s1, k1] = canonize(s, k, p);
    if (k1 <= p) return {s1, k1};
    const std::int64_t len = length(s) + static_cast<std::int64_t>(p - k + 1);
    if (length(s1) == len) return {s1, k1};

    // s1 is non-solid for this suffix: clone it.
    const NodeId r = new_node(len);
    std::vector<EdgeId> out;
    for (EdgeId e = nodes_[s1].first_edge; e != kNoEdge; e = edges_[e].next) out.push_back(e);
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
      const Edge e = edges_[*it];
      add_edge(r, e.k, e.p, e.target);
    }
    nodes_[r].suf = nodes_[s1].suf;
    nodes_[s1].suf = r;
    do {
      Edge& e = edges_[find(s, sym(k))];
      e.p = e.k + p - k;
      e.target = r;
      std::tie(s, k) = canonize(nodes_[s].suf, k, p - 1);
    } while (canonize(s, k, p) == std::make_pair(s1, k1));
    return {r, p + 1};
  }

  std::pair<NodeId, std::uint64_t> update(NodeId s, std::uint64_t k, std::uint64_t p) {
    const TokenId c = sym(p);
    NodeId old_r = kNoNode;
    NodeId dest = kNoNode;
    NodeId r = kNoNode;
    while (!check_end_point(s, k, p - 1, c)) {
      if (k <= p - 1) {
        const NodeId ext = extension(s, k, p - 1);
        if (ext == dest) {
          redirect_edge(s, k, p - 1, r);
          std::tie(s, k) = canonize(nodes_[s].suf, k, p - 1);
          continue;
        }
        dest = ext;
        r = split_edge(s, k, p - 1);
      } else {
        dest = kNoNode;
        r = s;
      }
      add_edge(r, p, kOpen, kSink);
      if (old_r != kNoNode) nodes_[old_r].suf = r;
      old_r = r;
      std::tie(s, k) = canonize(nodes_[s].suf, k, p - 1);
    }
    if (old_r != kNoNode) nodes_[old_r].suf = s;
    return separate_node(s, k, p);
  }

  std::span<const TokenId> tokens_;
  TokenId sentinel_;
  std::uint64_t n_;        // text length including the sentinel
  std::uint64_t end_ = 0;  // current text end (resolves open edges)
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  absl::flat_hash_map<std::uint64_t, EdgeId> edge_index_;
};

std::vector<std::byte> OnlineBuilder::freeze(unsigned handle_width, const Corpus& corpus) {
  end_ = n_;
  const std::uint64_t n_states = nodes_.size();

  // Gather per-node edges sorted by first token; the source's sentinel edge is
  // dropped since no query can follow it.
  std::vector<std::uint64_t> edge_begin(n_states + 1, 0);
  std::vector<EdgeId> order;
  order.reserve(edges_.size());
  std::vector<EdgeId> scratch;
  for (NodeId v = 0; v < n_states; ++v) {
    edge_begin[v] = order.size();
    scratch.clear();
    for (EdgeId e = nodes_[v].first_edge; e != kNoEdge; e = edges_[e].next) {
      if (v == kSource && edges_[e].token == sentinel_) continue;
      scratch.push_back(e);
    }
    std::sort(scratch.begin(), scratch.end(),
              [&](EdgeId a, EdgeId b) { return edges_[a].token < edges_[b].token; });
    order.insert(order.end(), scratch.begin(), scratch.end());
  }
  edge_begin[n_states] = order.size();
  const std::uint64_t n_edges = order.size();

  const std::uint64_t largest = std::max({n_ + 1, n_states, n_edges});
  if (handle_width == 0) handle_width = largest < 0xFFFFFFFFull ? 4 : 5;
  if (handle_width != 4 && handle_width != 5) {
    throw Error(ErrorKind::kUsage, "handle width must be 4 or 5 bytes");
  }
  const std::uint64_t none = handle_width == 4 ? 0xFFFFFFFFull : 0xFFFFFFFFFFull;
  if (largest >= none) {
    throw Error(ErrorKind::kCapacity,
                "index does not fit in " + std::to_string(handle_width) + "-byte handles");
  }
  const unsigned tw = static_cast<unsigned>(corpus.token_width());
  const std::uint64_t node_rec = 3ull * handle_width + 8;
  const std::uint64_t edge_rec = tw + 3ull * handle_width;
  const std::uint64_t edges_off = kHeaderSize + n_states * node_rec;
  const std::uint64_t tokens_off = edges_off + n_edges * edge_rec;
  std::vector<std::byte> image(tokens_off + corpus.size() * tw);

  std::byte* h = image.data();
  std::memcpy(h, kIndexMagic, 4);
  detail::store_le(h + 4, kIndexVersion, 4);
  h[8] = static_cast<std::byte>(tw);
  h[9] = static_cast<std::byte>(handle_width);
  h[10] = std::byte{0};
  detail::store_le(h + 16, corpus.size(), 8);
  detail::store_le(h + 24, n_states, 8);
  detail::store_le(h + 32, n_edges, 8);
  detail::store_le(h + 40, corpus.separator(), 4);
  detail::store_le(h + 44, corpus.vocab_size(), 4);

  for (NodeId v = 0; v < n_states; ++v) {
    std::byte* rec = image.data() + kHeaderSize + v * node_rec;
    const std::uint64_t len = v == kSink ? n_ : static_cast<std::uint64_t>(nodes_[v].length);
    const NodeId suf = nodes_[v].suf;
    detail::store_le(rec, len, handle_width);
    std::uint64_t failure = (suf == kBottom || suf == kNoNode) ? none : suf;
    if (v == kSink) failure = kSource;  // every suffix of the text is in the sink's class
    detail::store_le(rec + handle_width, failure, handle_width);
    detail::store_le(rec + 2 * handle_width, edge_begin[v], handle_width);
    detail::store_le(rec + 3 * handle_width, 0, 8);
  }
  for (std::uint64_t i = 0; i < n_edges; ++i) {
    const Edge& e = edges_[order[i]];
    std::byte* rec = image.data() + edges_off + i * edge_rec;
    detail::store_le(rec, e.token, tw);
    detail::store_le(rec + tw, e.k - 1, handle_width);
    detail::store_le(rec + tw + handle_width, edge_end(e), handle_width);
    detail::store_le(rec + tw + 2 * handle_width, e.target, handle_width);
  }
  std::byte* tok = image.data() + tokens_off;
  for (TokenId t : corpus.tokens()) {
    detail::store_le(tok, t, tw);
    tok += tw;
  }
  return image;
}

}  // namespace

Cdawg build_cdawg(const Corpus& corpus, const BuildOptions& options) {
  corpus.validate();
  std::vector<std::byte> image;
  {
    OnlineBuilder builder(corpus);
    builder.run();
    image = builder.freeze(options.handle_width, corpus);
  }
  return Cdawg::from_image(std::move(image));
}

Cdawg build_index(const Corpus& corpus, const BuildOptions& options) {
  Cdawg index = build_cdawg(corpus, options);
  index.populate_counts();
  return index;
}

}  // namespace cdawgscan
