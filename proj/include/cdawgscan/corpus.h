#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cdawgscan/types.h"

namespace cdawgscan {

enum class CorpusFormat { kBinaryU16, kBinaryU32, kJsonlTokenArrays, kCharText };

// Parses "binary-u16", "binary-u32", "jsonl-token-arrays" or "char-text".
CorpusFormat parse_corpus_format(std::string_view name);
std::string_view corpus_format_name(CorpusFormat format);

enum class TokenWidth : std::uint8_t { k16 = 2, k32 = 4 };

// Concatenated token stream. Every document is terminated by exactly one
// separator token, so the final token of a valid corpus is the separator.
class Corpus {
 public:
  Corpus() = default;

  // Joins documents, appending one separator after each (including the last).
  static Corpus from_documents(const std::vector<std::vector<TokenId>>& docs,
                               TokenId separator, std::uint32_t vocab_size);

  // Takes an already-joined stream; document boundaries are recovered from
  // separator positions.
  static Corpus from_tokens(std::vector<TokenId> tokens, TokenId separator,
                            std::uint32_t vocab_size);

  std::span<const TokenId> tokens() const { return tokens_; }
  TokenId separator() const { return separator_; }
  std::uint32_t vocab_size() const { return vocab_size_; }
  const std::vector<std::uint64_t>& doc_ends() const { return doc_ends_; }

  std::size_t size() const { return tokens_.size(); }
  std::size_t num_docs() const { return doc_ends_.size(); }
  // Token range of document `d`, separator included.
  Span doc_span(std::size_t d) const;
  std::span<const TokenId> document(std::size_t d) const;

  // 16-bit ids when every id (and the builder's end sentinel, which equals
  // vocab_size) fits, else 32-bit.
  TokenWidth token_width() const;

  // Throws Error(kValidation) describing the first violated invariant.
  void validate() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::vector<TokenId> tokens_;
  TokenId separator_ = 0;
  std::uint32_t vocab_size_ = 0;
  std::vector<std::uint64_t> doc_ends_;
};

struct LoadOptions {
  CorpusFormat format = CorpusFormat::kJsonlTokenArrays;
  TokenId separator = 0;
  // Inferred as max(id, separator) + 1 when absent; char-text uses 256.
  std::optional<std::uint32_t> vocab_size;
};

Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options);

// Writes the raw little-endian token stream (no header).
void save_corpus_binary(const Corpus& corpus, const std::filesystem::path& path,
                        TokenWidth width);

struct ShardSpec {
  std::size_t shard_id = 0;
  std::size_t doc_begin = 0;  // document index range [doc_begin, doc_end)
  std::size_t doc_end = 0;
  Span tokens;  // token range inside the parent corpus
};

struct Shard {
  Corpus corpus;
  ShardSpec spec;
};

// Splits at document boundaries in document order. Each shard takes documents
// until it reaches remaining_tokens / remaining_shards, leaving at least one
// document for every later shard.
std::vector<Shard> shard_corpus(const Corpus& corpus, std::size_t k);

}  // namespace cdawgscan
