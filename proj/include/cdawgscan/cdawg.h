#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cdawgscan/corpus.h"
#include "cdawgscan/types.h"

namespace cdawgscan {

static_assert(std::endian::native == std::endian::little,
              "index images are read in place and assume a little-endian host");

// On-disk / in-memory index image layout (all little-endian):
//
//   header (64 bytes)
//     0  magic "CDWG"            4  format version (u32)
//     8  token width (u8)        9  handle width (u8)
//     10 flags (u8)              12 reserved
//     16 |C| (u64)               24 n_states (u64)
//     32 n_edges (u64)           40 separator (u32)
//     44 vocab_size (u32)        48 CRC-32 of everything after the header
//   node table: n_states x { max_length, failure, edge_begin : handle; count : u64 }
//   edge table: n_edges  x { first token : token width; alpha, omega, target : handle }
//   corpus tokens: |C| x token width
//
// Handles are 4 or 5 bytes; the all-ones handle means "none". Edges of a node
// are contiguous and sorted by first token.
inline constexpr char kIndexMagic[4] = {'C', 'D', 'W', 'G'};
inline constexpr std::uint32_t kIndexVersion = 1;
inline constexpr std::size_t kHeaderSize = 64;
inline constexpr std::uint8_t kFlagCountsPopulated = 1;

enum class Backend { kRam, kDisk };

struct IndexStats {
  std::uint64_t corpus_size = 0;
  std::uint64_t n_states = 0;
  std::uint64_t n_edges = 0;
  std::uint64_t bytes_total = 0;
  double bytes_per_corpus_token = 0.0;
};

// Position in the automaton after reading some string. At a node when
// `progress` is empty; otherwise `progress` is the consumed prefix of the
// label of `edge`, which leaves `node`.
struct QueryCursor {
  NodeId node = 0;
  EdgeId edge = kNoEdge;
  Span progress;
  std::uint64_t length = 0;  // matched suffix length

  std::uint64_t depth() const { return progress.size(); }
  bool at_node() const { return progress.empty(); }
  friend bool operator==(const QueryCursor&, const QueryCursor&) = default;
};

// [lo, hi] inclusive range of suffix lengths sharing one occurrence count.
struct CountInterval {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  std::uint64_t count = 0;
  friend bool operator==(const CountInterval&, const CountInterval&) = default;
};

// Work counters for one or more transitions.
struct TransitionStats {
  std::uint64_t tokens = 0;
  std::uint64_t edge_steps = 0;     // tokens matched along an edge or edge taken
  std::uint64_t failure_steps = 0;  // implicit failure transitions
  std::uint64_t canon_steps = 0;    // edges skipped while re-descending
};

namespace detail {
class Storage {
 public:
  virtual ~Storage() = default;
  virtual std::span<const std::byte> bytes() const = 0;
  virtual std::byte* mutable_bytes() { return nullptr; }
};

inline std::uint64_t load_le(const std::byte* p, unsigned width) {
  switch (width) {
    case 2: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case 4: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case 8: { std::uint64_t v; std::memcpy(&v, p, 8); return v; }
    default: { std::uint64_t v = 0; std::memcpy(&v, p, width); return v; }
  }
}

inline void store_le(std::byte* p, std::uint64_t v, unsigned width) {
  std::memcpy(p, &v, width);
}
}  // namespace detail

// A finalized, immutable CDAWG backed by an index image held in RAM or mapped
// from disk. Copies share the image.
class Cdawg {
 public:
  Cdawg() = default;

  // Takes ownership of a serialized image (header validated, checksum ignored).
  static Cdawg from_image(std::vector<std::byte> image);

  NodeId source() const { return 0; }
  NodeId sink() const { return 1; }

  std::uint64_t corpus_size() const { return corpus_size_; }
  std::uint64_t num_nodes() const { return n_states_; }
  std::uint64_t num_edges() const { return n_edges_; }
  TokenId separator() const { return separator_; }
  std::uint32_t vocab_size() const { return vocab_size_; }
  // Virtual token terminating the build text; never produced by queries.
  TokenId end_sentinel() const { return vocab_size_; }
  unsigned token_width() const { return token_width_; }
  unsigned handle_width() const { return handle_width_; }
  bool counts_populated() const;
  Backend backend() const { return backend_; }
  std::span<const std::byte> image() const { return bytes_; }

  std::uint64_t node_length(NodeId n) const { return field(node_ptr(n), 0); }
  NodeId node_failure(NodeId n) const {
    const std::uint64_t v = field(node_ptr(n), handle_width_);
    return v == none_ ? kNoNode : static_cast<NodeId>(v);
  }
  EdgeId edges_begin(NodeId n) const {
    return static_cast<EdgeId>(field(node_ptr(n), 2 * handle_width_));
  }
  EdgeId edges_end(NodeId n) const {
    return n + 1 == n_states_ ? static_cast<EdgeId>(n_edges_) : edges_begin(n + 1);
  }
  std::uint64_t node_count(NodeId n) const {
    return detail::load_le(node_ptr(n) + 3 * handle_width_, 8);
  }

  TokenId edge_token(EdgeId e) const {
    return static_cast<TokenId>(detail::load_le(edge_ptr(e), token_width_));
  }
  Span edge_span(EdgeId e) const {
    const std::byte* p = edge_ptr(e) + token_width_;
    return {field(p, 0), field(p, handle_width_)};
  }
  NodeId edge_target(EdgeId e) const {
    return static_cast<NodeId>(field(edge_ptr(e) + token_width_, 2 * handle_width_));
  }

  // Binary search over the node's sorted edges; kNoEdge when absent.
  EdgeId find_edge(NodeId n, TokenId token) const;

  // Corpus token at `pos`; pos == corpus_size() yields end_sentinel().
  TokenId token_at(std::uint64_t pos) const {
    if (pos == corpus_size_) return end_sentinel();
    return static_cast<TokenId>(
        detail::load_le(bytes_.data() + tokens_off_ + pos * token_width_, token_width_));
  }
  // Copy of the embedded corpus.
  Corpus corpus() const;

  // --- queries -------------------------------------------------------------

  QueryCursor start() const { return QueryCursor{}; }

  // Cursor for the longest suffix of (matched string + token) occurring in
  // the corpus. Tokens >= vocab_size never match.
  QueryCursor transition(QueryCursor cursor, TokenId token,
                         TransitionStats* stats = nullptr) const;

  // Occurrence count of the matched suffix; 0 when nothing is matched.
  std::uint64_t cursor_count(const QueryCursor& cursor) const;

  // Counts of every suffix length 1..cursor.length of the matched string,
  // as intervals ordered from longest to shortest. Requires length >= 1.
  std::vector<CountInterval> suffix_count_profile(const QueryCursor& cursor) const;

  // Traverses `tokens` from the source; nullopt if it is not a substring.
  std::optional<QueryCursor> locate(std::span<const TokenId> tokens) const;
  // Occurrence count of `tokens` in the corpus (0 if absent, |C| if empty).
  std::uint64_t occurrences(std::span<const TokenId> tokens) const;

  // --- lifecycle -----------------------------------------------------------

  // Fills node counts: sink 1, every other node the sum of its edge targets'
  // counts, evaluated in reverse topological order. Throws Error(kState) on a
  // mapped (read-only) index and Error(kCorrupt) if the graph has a cycle.
  void populate_counts();

  IndexStats stats() const;

  // Nodes in topological order (Kahn); throws Error(kCorrupt) on a cycle.
  std::vector<NodeId> topological_order() const;

 private:
  friend Cdawg load_index(const std::filesystem::path&, Backend, bool);

  void attach(std::shared_ptr<detail::Storage> storage, Backend backend);

  const std::byte* node_ptr(NodeId n) const {
    return bytes_.data() + kHeaderSize + static_cast<std::uint64_t>(n) * node_rec_;
  }
  const std::byte* edge_ptr(EdgeId e) const {
    return bytes_.data() + edges_off_ + static_cast<std::uint64_t>(e) * edge_rec_;
  }
  std::uint64_t field(const std::byte* p, unsigned offset) const {
    return handle_width_ == 4 ? detail::load_le(p + offset, 4)
                              : detail::load_le(p + offset, handle_width_);
  }
  // Moves `cursor` from its node down `pending` (a span known to be readable
  // from there), skipping whole edges.
  void descend(QueryCursor& cursor, Span pending, TransitionStats* stats) const;
  // Longest proper suffix position of the cursor's string that is not in the
  // same right-equivalence class. Requires length >= 1.
  void fail(QueryCursor& cursor, TransitionStats* stats) const;

  std::shared_ptr<detail::Storage> storage_;
  std::span<const std::byte> bytes_;
  Backend backend_ = Backend::kRam;
  std::uint64_t corpus_size_ = 0;
  std::uint64_t n_states_ = 0;
  std::uint64_t n_edges_ = 0;
  TokenId separator_ = 0;
  std::uint32_t vocab_size_ = 0;
  unsigned token_width_ = 4;
  unsigned handle_width_ = 4;
  std::uint64_t none_ = 0;
  std::uint64_t node_rec_ = 0;
  std::uint64_t edge_rec_ = 0;
  std::uint64_t edges_off_ = 0;
  std::uint64_t tokens_off_ = 0;
};

struct BuildOptions {
  // 0 picks 4 when every handle and position fits in 32 bits, else 5.
  unsigned handle_width = 0;
};

// Online construction over the corpus token stream followed by a unique end
// sentinel. Counts are left unpopulated.
Cdawg build_cdawg(const Corpus& corpus, const BuildOptions& options = {});

// build_cdawg followed by populate_counts.
Cdawg build_index(const Corpus& corpus, const BuildOptions& options = {});

// Writes the image with a fresh checksum. Requires populated counts.
void save_index(const Cdawg& index, const std::filesystem::path& path);

// kRam reads the file into memory; kDisk maps it read-only and serves queries
// from the mapping. The checksum pass reads the whole file once.
Cdawg load_index(const std::filesystem::path& path, Backend backend,
                 bool verify_checksum = true);

std::uint32_t image_checksum(std::span<const std::byte> image);

}  // namespace cdawgscan
