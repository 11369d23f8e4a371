#include "cdawgscan/corpus.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include <json.hpp>

namespace cdawgscan {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary corpus I/O assumes a little-endian host");

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kFormat, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
std::vector<TokenId> decode_fixed_width(const std::vector<char>& bytes,
                                        const std::filesystem::path& path) {
  if (bytes.size() % sizeof(T) != 0) {
    throw Error(ErrorKind::kFormat,
                path.string() + ": size is not a multiple of " +
                    std::to_string(sizeof(T)) + " bytes");
  }
  std::vector<TokenId> tokens(bytes.size() / sizeof(T));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    T v;
    std::memcpy(&v, bytes.data() + i * sizeof(T), sizeof(T));
    tokens[i] = static_cast<TokenId>(v);
  }
  return tokens;
}

std::vector<std::vector<TokenId>> parse_jsonl(const std::vector<char>& bytes,
                                              const std::filesystem::path& path) {
  std::vector<std::vector<TokenId>> docs;
  std::string_view text(bytes.data(), bytes.size());
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kFormat, path.string() + ":" + std::to_string(line_no) +
                                          ": " + e.what());
    }
    if (!j.is_array()) {
      throw Error(ErrorKind::kFormat, path.string() + ":" + std::to_string(line_no) +
                                          ": expected a JSON array of token ids");
    }
    std::vector<TokenId> doc;
    doc.reserve(j.size());
    for (const auto& v : j) {
      if (!v.is_number_unsigned() ||
          v.get<std::uint64_t>() > std::numeric_limits<TokenId>::max()) {
        throw Error(ErrorKind::kFormat, path.string() + ":" + std::to_string(line_no) +
                                            ": token ids must be 32-bit unsigned integers");
      }
      doc.push_back(v.get<TokenId>());
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<std::vector<TokenId>> parse_char_text(const std::vector<char>& bytes) {
  std::vector<std::vector<TokenId>> docs;
  std::vector<TokenId> cur;
  for (char ch : bytes) {
    if (ch == '\n') {
      if (!cur.empty()) docs.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<unsigned char>(ch));
    }
  }
  if (!cur.empty()) docs.push_back(std::move(cur));
  return docs;
}

std::uint32_t infer_vocab(std::span<const TokenId> tokens, TokenId separator) {
  TokenId hi = separator;
  for (TokenId t : tokens) hi = std::max(hi, t);
  if (hi == std::numeric_limits<TokenId>::max()) {
    throw Error(ErrorKind::kValidation, "token id 2^32-1 is reserved");
  }
  return hi + 1;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "binary-u16") return CorpusFormat::kBinaryU16;
  if (name == "binary-u32") return CorpusFormat::kBinaryU32;
  if (name == "jsonl-token-arrays" || name == "jsonl") return CorpusFormat::kJsonlTokenArrays;
  if (name == "char-text") return CorpusFormat::kCharText;
  throw Error(ErrorKind::kUsage, "unknown corpus format '" + std::string(name) + "'");
}

std::string_view corpus_format_name(CorpusFormat format) {
  switch (format) {
    case CorpusFormat::kBinaryU16: return "binary-u16";
    case CorpusFormat::kBinaryU32: return "binary-u32";
    case CorpusFormat::kJsonlTokenArrays: return "jsonl-token-arrays";
    case CorpusFormat::kCharText: return "char-text";
  }
  return "?";
}

Corpus Corpus::from_documents(const std::vector<std::vector<TokenId>>& docs,
                              TokenId separator, std::uint32_t vocab_size) {
  if (docs.empty()) throw Error(ErrorKind::kValidation, "empty input");
  Corpus c;
  c.separator_ = separator;
  c.vocab_size_ = vocab_size;
  std::size_t total = docs.size();
  for (const auto& d : docs) total += d.size();
  c.tokens_.reserve(total);
  c.doc_ends_.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (TokenId t : docs[d]) {
      if (t == separator) {
        throw Error(ErrorKind::kValidation,
                    "document " + std::to_string(d) + " contains the separator token");
      }
      c.tokens_.push_back(t);
    }
    c.doc_ends_.push_back(c.tokens_.size());
    c.tokens_.push_back(separator);
  }
  c.validate();
  return c;
}

Corpus Corpus::from_tokens(std::vector<TokenId> tokens, TokenId separator,
                           std::uint32_t vocab_size) {
  if (tokens.empty()) throw Error(ErrorKind::kValidation, "empty input");
  Corpus c;
  c.separator_ = separator;
  c.vocab_size_ = vocab_size;
  c.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < c.tokens_.size(); ++i) {
    if (c.tokens_[i] == separator) c.doc_ends_.push_back(i);
  }
  c.validate();
  return c;
}

Span Corpus::doc_span(std::size_t d) const {
  const std::uint64_t begin = d == 0 ? 0 : doc_ends_[d - 1] + 1;
  return {begin, doc_ends_[d] + 1};
}

std::span<const TokenId> Corpus::document(std::size_t d) const {
  const Span s = doc_span(d);
  return std::span<const TokenId>(tokens_).subspan(s.alpha, s.size());
}

TokenWidth Corpus::token_width() const {
  return vocab_size_ <= 0xFFFF ? TokenWidth::k16 : TokenWidth::k32;
}

void Corpus::validate() const {
  if (tokens_.empty()) throw Error(ErrorKind::kValidation, "empty input");
  if (vocab_size_ == 0 || vocab_size_ == std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::kValidation, "vocab_size must be in [1, 2^32-2]");
  }
  if (separator_ >= vocab_size_) {
    throw Error(ErrorKind::kValidation, "separator id " + std::to_string(separator_) +
                                            " is not below vocab_size " +
                                            std::to_string(vocab_size_));
  }
  if (tokens_.back() != separator_) {
    throw Error(ErrorKind::kValidation, "corpus must end with the separator token");
  }
  std::size_t next_end = 0;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const TokenId t = tokens_[i];
    if (t >= vocab_size_) {
      throw Error(ErrorKind::kValidation, "token id " + std::to_string(t) + " at position " +
                                              std::to_string(i) + " is >= vocab_size " +
                                              std::to_string(vocab_size_));
    }
    if (t == separator_) {
      if (next_end >= doc_ends_.size() || doc_ends_[next_end] != i) {
        throw Error(ErrorKind::kValidation, "doc_ends out of sync at position " +
                                                std::to_string(i));
      }
      ++next_end;
    }
  }
  if (next_end != doc_ends_.size()) {
    throw Error(ErrorKind::kValidation, "doc_ends lists a non-separator position");
  }
}

Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options) {
  const std::vector<char> bytes = read_file(path);
  switch (options.format) {
    case CorpusFormat::kBinaryU16:
    case CorpusFormat::kBinaryU32: {
      auto tokens = options.format == CorpusFormat::kBinaryU16
                        ? decode_fixed_width<std::uint16_t>(bytes, path)
                        : decode_fixed_width<std::uint32_t>(bytes, path);
      if (tokens.empty()) throw Error(ErrorKind::kValidation, "empty input");
      const auto vocab = options.vocab_size.value_or(infer_vocab(tokens, options.separator));
      return Corpus::from_tokens(std::move(tokens), options.separator, vocab);
    }
    case CorpusFormat::kJsonlTokenArrays: {
      const auto docs = parse_jsonl(bytes, path);
      if (docs.empty()) throw Error(ErrorKind::kValidation, "empty input");
      std::uint32_t vocab = 0;
      if (options.vocab_size) {
        vocab = *options.vocab_size;
      } else {
        TokenId hi = options.separator;
        for (const auto& d : docs)
          for (TokenId t : d) hi = std::max(hi, t);
        vocab = infer_vocab(std::span<const TokenId>(&hi, 1), options.separator);
      }
      return Corpus::from_documents(docs, options.separator, vocab);
    }
    case CorpusFormat::kCharText: {
      const auto docs = parse_char_text(bytes);
      return Corpus::from_documents(docs, options.separator, options.vocab_size.value_or(256));
    }
  }
  throw Error(ErrorKind::kUsage, "unhandled corpus format");
}

void save_corpus_binary(const Corpus& corpus, const std::filesystem::path& path,
                        TokenWidth width) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFormat, "cannot write " + path.string());
  for (TokenId t : corpus.tokens()) {
    if (width == TokenWidth::k16) {
      if (t > 0xFFFF) {
        throw Error(ErrorKind::kCapacity, "token id " + std::to_string(t) +
                                              " does not fit in 16 bits");
      }
      const auto v = static_cast<std::uint16_t>(t);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    } else {
      out.write(reinterpret_cast<const char*>(&t), sizeof t);
    }
  }
  if (!out) throw Error(ErrorKind::kFormat, "write failed: " + path.string());
}

std::vector<Shard> shard_corpus(const Corpus& corpus, std::size_t k) {
  const std::size_t n_docs = corpus.num_docs();
  if (k == 0) throw Error(ErrorKind::kUsage, "shard count must be positive");
  if (k > n_docs) {
    throw Error(ErrorKind::kUsage, "shard count " + std::to_string(k) +
                                       " exceeds document count " + std::to_string(n_docs));
  }
  std::vector<Shard> shards;
  shards.reserve(k);
  std::size_t doc = 0;
  std::uint64_t pos = 0;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t shards_left = k - s;
    const double target =
        static_cast<double>(corpus.size() - pos) / static_cast<double>(shards_left);
    const std::size_t doc_begin = doc;
    std::uint64_t size = 0;
    // Last shard takes everything; otherwise fill up to target while leaving
    // one document per remaining shard.
    while (doc < n_docs) {
      const bool must_take = doc == doc_begin;
      const bool room_for_rest = n_docs - doc > shards_left - 1;
      if (!must_take && (!room_for_rest || (shards_left > 1 && static_cast<double>(size) >= target))) {
        break;
      }
      size += corpus.doc_span(doc).size();
      ++doc;
    }
    Shard shard;
    shard.spec.shard_id = s;
    shard.spec.doc_begin = doc_begin;
    shard.spec.doc_end = doc;
    shard.spec.tokens = {pos, pos + size};
    auto toks = corpus.tokens().subspan(pos, size);
    shard.corpus = Corpus::from_tokens(std::vector<TokenId>(toks.begin(), toks.end()),
                                       corpus.separator(), corpus.vocab_size());
    pos += size;
    shards.push_back(std::move(shard));
  }
  return shards;
}

}  // namespace cdawgscan
