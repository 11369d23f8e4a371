#include "cdawgscan/cdawg.h"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <string>

namespace cdawgscan {
namespace {

class RamStorage final : public detail::Storage {
 public:
  explicit RamStorage(std::vector<std::byte> bytes) : bytes_(std::move(bytes)) {}
  std::span<const std::byte> bytes() const override { return bytes_; }
  std::byte* mutable_bytes() override { return bytes_.data(); }

 private:
  std::vector<std::byte> bytes_;
};

class MappedStorage final : public detail::Storage {
 public:
  explicit MappedStorage(const std::filesystem::path& path) {
    const int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw Error(ErrorKind::kFormat, "cannot open " + path.string());
    struct stat st {};
    if (::fstat(fd, &st) != 0) {
      ::close(fd);
      throw Error(ErrorKind::kFormat, "cannot stat " + path.string());
    }
    size_ = static_cast<std::size_t>(st.st_size);
    if (size_ > 0) {
      void* addr = ::mmap(nullptr, size_, PROT_READ, MAP_SHARED, fd, 0);
      if (addr == MAP_FAILED) {
        ::close(fd);
        throw Error(ErrorKind::kFormat, "cannot map " + path.string());
      }
      data_ = static_cast<const std::byte*>(addr);
      ::madvise(addr, size_, MADV_RANDOM);
    }
    ::close(fd);
  }
  ~MappedStorage() override {
    if (data_ != nullptr) ::munmap(const_cast<std::byte*>(data_), size_);
  }
  MappedStorage(const MappedStorage&) = delete;
  MappedStorage& operator=(const MappedStorage&) = delete;

  std::span<const std::byte> bytes() const override { return {data_, size_}; }

 private:
  const std::byte* data_ = nullptr;
  std::size_t size_ = 0;
};

std::uint32_t crc_of(std::span<const std::byte> bytes) {
  uLong crc = crc32_z(0L, Z_NULL, 0);
  crc = crc32_z(crc, reinterpret_cast<const Bytef*>(bytes.data()), bytes.size());
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::uint32_t image_checksum(std::span<const std::byte> image) {
  if (image.size() < kHeaderSize) return 0;
  return crc_of(image.subspan(kHeaderSize));
}

Cdawg Cdawg::from_image(std::vector<std::byte> image) {
  Cdawg index;
  index.attach(std::make_shared<RamStorage>(std::move(image)), Backend::kRam);
  return index;
}

void Cdawg::attach(std::shared_ptr<detail::Storage> storage, Backend backend) {
  const auto bytes = storage->bytes();
  if (bytes.size() < kHeaderSize) throw Error(ErrorKind::kCorrupt, "index truncated: no header");
  if (std::memcmp(bytes.data(), kIndexMagic, 4) != 0) {
    throw Error(ErrorKind::kVersion, "not an index file (bad magic)");
  }
  const auto version = detail::load_le(bytes.data() + 4, 4);
  if (version != kIndexVersion) {
    throw Error(ErrorKind::kVersion, "unsupported index format version " +
                                         std::to_string(version));
  }
  const unsigned tw = std::to_integer<unsigned>(bytes[8]);
  const unsigned hw = std::to_integer<unsigned>(bytes[9]);
  if ((tw != 2 && tw != 4) || (hw != 4 && hw != 5)) {
    throw Error(ErrorKind::kVersion, "unsupported token/handle width");
  }
  token_width_ = tw;
  handle_width_ = hw;
  none_ = hw == 4 ? 0xFFFFFFFFull : 0xFFFFFFFFFFull;
  corpus_size_ = detail::load_le(bytes.data() + 16, 8);
  n_states_ = detail::load_le(bytes.data() + 24, 8);
  n_edges_ = detail::load_le(bytes.data() + 32, 8);
  separator_ = static_cast<TokenId>(detail::load_le(bytes.data() + 40, 4));
  vocab_size_ = static_cast<std::uint32_t>(detail::load_le(bytes.data() + 44, 4));
  node_rec_ = 3ull * hw + 8;
  edge_rec_ = tw + 3ull * hw;
  edges_off_ = kHeaderSize + n_states_ * node_rec_;
  tokens_off_ = edges_off_ + n_edges_ * edge_rec_;
  if (n_states_ < 2 || n_states_ > none_ || n_edges_ > none_ || corpus_size_ > none_ ||
      tokens_off_ + corpus_size_ * tw != bytes.size()) {
    throw Error(ErrorKind::kCorrupt, "index truncated or inconsistent with its header");
  }
  storage_ = std::move(storage);
  bytes_ = bytes;
  backend_ = backend;
}

bool Cdawg::counts_populated() const {
  return (std::to_integer<unsigned>(bytes_[10]) & kFlagCountsPopulated) != 0;
}

EdgeId Cdawg::find_edge(NodeId n, TokenId token) const {
  EdgeId lo = edges_begin(n);
  EdgeId hi = edges_end(n);
  while (lo < hi) {
    const EdgeId mid = lo + (hi - lo) / 2;
    const TokenId t = edge_token(mid);
    if (t == token) return mid;
    if (t < token) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return kNoEdge;
}

Corpus Cdawg::corpus() const {
  std::vector<TokenId> toks(corpus_size_);
  for (std::uint64_t i = 0; i < corpus_size_; ++i) toks[i] = token_at(i);
  return Corpus::from_tokens(std::move(toks), separator_, vocab_size_);
}

void Cdawg::descend(QueryCursor& c, Span pending, TransitionStats* stats) const {
  c.edge = kNoEdge;
  c.progress = {};
  while (!pending.empty()) {
    const EdgeId e = find_edge(c.node, token_at(pending.alpha));
    const Span label = edge_span(e);
    if (label.size() <= pending.size()) {
      pending.alpha += label.size();
      c.node = edge_target(e);
      if (stats != nullptr) ++stats->canon_steps;
    } else {
      c.edge = e;
      c.progress = {label.alpha, label.alpha + pending.size()};
      return;
    }
  }
}

void Cdawg::fail(QueryCursor& c, TransitionStats* stats) const {
  if (stats != nullptr) ++stats->failure_steps;
  const Span pending = c.progress;
  if (c.node == source()) {
    // The matched string is exactly the partial edge; drop its first token.
    c.length = pending.size() - 1;
    descend(c, {pending.alpha + 1, pending.omega}, stats);
    return;
  }
  const NodeId f = node_failure(c.node);
  c.node = f;
  c.length = node_length(f) + pending.size();
  descend(c, pending, stats);
}

QueryCursor Cdawg::transition(QueryCursor c, TokenId token, TransitionStats* stats) const {
  if (stats != nullptr) ++stats->tokens;
  if (token >= vocab_size_) return start();
  for (;;) {
    if (c.at_node()) {
      const EdgeId e = find_edge(c.node, token);
      if (e != kNoEdge) {
        if (stats != nullptr) ++stats->edge_steps;
        const Span label = edge_span(e);
        ++c.length;
        if (label.size() == 1) {
          c.node = edge_target(e);
          c.edge = kNoEdge;
          c.progress = {};
        } else {
          c.edge = e;
          c.progress = {label.alpha, label.alpha + 1};
        }
        return c;
      }
      if (c.node == source()) return start();
    } else if (token_at(c.progress.omega) == token) {
      if (stats != nullptr) ++stats->edge_steps;
      ++c.progress.omega;
      ++c.length;
      if (c.progress.omega == edge_span(c.edge).omega) {
        c.node = edge_target(c.edge);
        c.edge = kNoEdge;
        c.progress = {};
      }
      return c;
    }
    fail(c, stats);
  }
}

std::uint64_t Cdawg::cursor_count(const QueryCursor& c) const {
  if (c.length == 0) return 0;
  return c.at_node() ? node_count(c.node) : node_count(edge_target(c.edge));
}

std::vector<CountInterval> Cdawg::suffix_count_profile(const QueryCursor& cursor) const {
  if (cursor.length == 0) {
    throw Error(ErrorKind::kUsage, "suffix_count_profile needs a non-empty match");
  }
  std::vector<CountInterval> out;
  QueryCursor c = cursor;
  while (c.length > 0) {
    const std::uint64_t count = cursor_count(c);
    const std::uint64_t hi = c.length;
    fail(c, nullptr);
    const std::uint64_t lo = c.length + 1;
    if (!out.empty() && out.back().count == count) {
      out.back().lo = lo;
    } else {
      out.push_back({lo, hi, count});
    }
  }
  return out;
}

std::optional<QueryCursor> Cdawg::locate(std::span<const TokenId> tokens) const {
  QueryCursor c = start();
  for (TokenId t : tokens) {
    if (t >= vocab_size_) return std::nullopt;
    if (c.at_node()) {
      const EdgeId e = find_edge(c.node, t);
      if (e == kNoEdge) return std::nullopt;
      const Span label = edge_span(e);
      c.edge = e;
      c.progress = {label.alpha, label.alpha};
    } else if (token_at(c.progress.omega) != t) {
      return std::nullopt;
    }
    ++c.progress.omega;
    ++c.length;
    if (c.progress.omega == edge_span(c.edge).omega) {
      c.node = edge_target(c.edge);
      c.edge = kNoEdge;
      c.progress = {};
    }
  }
  return c;
}

std::uint64_t Cdawg::occurrences(std::span<const TokenId> tokens) const {
  if (tokens.empty()) return corpus_size_;
  const auto c = locate(tokens);
  return c ? cursor_count(*c) : 0;
}

std::vector<NodeId> Cdawg::topological_order() const {
  std::vector<std::uint32_t> indegree(n_states_, 0);
  for (std::uint64_t e = 0; e < n_edges_; ++e) ++indegree[edge_target(static_cast<EdgeId>(e))];
  std::vector<NodeId> order;
  order.reserve(n_states_);
  for (NodeId v = 0; v < n_states_; ++v) {
    if (indegree[v] == 0) order.push_back(v);
  }
  for (std::size_t head = 0; head < order.size(); ++head) {
    const NodeId v = order[head];
    for (EdgeId e = edges_begin(v); e < edges_end(v); ++e) {
      const NodeId t = edge_target(e);
      if (--indegree[t] == 0) order.push_back(t);
    }
  }
  if (order.size() != n_states_) {
    throw Error(ErrorKind::kCorrupt, "graph has a cycle: topological sort failed");
  }
  return order;
}

void Cdawg::populate_counts() {
  std::byte* bytes = storage_ ? storage_->mutable_bytes() : nullptr;
  if (bytes == nullptr) {
    throw Error(ErrorKind::kState, "populate_counts needs a finalized in-memory index");
  }
  const auto order = topological_order();
  std::vector<std::uint64_t> count(n_states_, 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    std::uint64_t total = v == sink() ? 1 : 0;
    for (EdgeId e = edges_begin(v); e < edges_end(v); ++e) total += count[edge_target(e)];
    count[v] = total;
  }
  for (NodeId v = 0; v < n_states_; ++v) {
    detail::store_le(bytes + kHeaderSize + v * node_rec_ + 3 * handle_width_, count[v], 8);
  }
  bytes[10] |= static_cast<std::byte>(kFlagCountsPopulated);
  detail::store_le(bytes + 48, image_checksum(bytes_), 4);
}

IndexStats Cdawg::stats() const {
  IndexStats s;
  s.corpus_size = corpus_size_;
  s.n_states = n_states_;
  s.n_edges = n_edges_;
  s.bytes_total = bytes_.size();
  s.bytes_per_corpus_token =
      corpus_size_ == 0 ? 0.0 : static_cast<double>(bytes_.size()) / static_cast<double>(corpus_size_);
  return s;
}

void save_index(const Cdawg& index, const std::filesystem::path& path) {
  if (!index.counts_populated()) {
    throw Error(ErrorKind::kState, "save_index requires populated counts");
  }
  const auto image = index.image();
  std::byte header[kHeaderSize];
  std::memcpy(header, image.data(), kHeaderSize);
  detail::store_le(header + 48, image_checksum(image), 4);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFormat, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(header), kHeaderSize);
  out.write(reinterpret_cast<const char*>(image.data() + kHeaderSize),
            static_cast<std::streamsize>(image.size() - kHeaderSize));
  if (!out) throw Error(ErrorKind::kFormat, "write failed: " + path.string());
}

Cdawg load_index(const std::filesystem::path& path, Backend backend, bool verify_checksum) {
  std::shared_ptr<detail::Storage> storage;
  if (backend == Backend::kDisk) {
    storage = std::make_shared<MappedStorage>(path);
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kFormat, "cannot open " + path.string());
    in.seekg(0, std::ios::end);
    std::vector<std::byte> bytes(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw Error(ErrorKind::kCorrupt, "short read: " + path.string());
    storage = std::make_shared<RamStorage>(std::move(bytes));
  }
  Cdawg index;
  index.attach(std::move(storage), backend);
  if (verify_checksum) {
    const auto stored = static_cast<std::uint32_t>(detail::load_le(index.bytes_.data() + 48, 4));
    if (stored != image_checksum(index.bytes_)) {
      throw Error(ErrorKind::kCorrupt, "checksum mismatch in " + path.string());
    }
  }
  if (!index.counts_populated()) {
    throw Error(ErrorKind::kCorrupt, path.string() + ": counts were never populated");
  }
  return index;
}

}  // namespace cdawgscan
