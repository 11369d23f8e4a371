#include "cdawgscan/shard.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace cdawgscan {

namespace {

std::string shard_file_name(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "shard_%03zu.cdawg", id);
  return buf;
}

// Runs fn(i) for i in [0, n) on up to `parallelism` threads. The first
// exception (by index) is rethrown after every worker finishes.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t parallelism, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(parallelism, n));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Error with_shard(std::size_t id, const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  return Error(err ? err->kind() : ErrorKind::kState,
               "shard " + std::to_string(id) + ": " + e.what());
}

}  // namespace

ShardedIndex build_sharded(const Corpus& corpus, std::size_t k, std::size_t parallelism,
                           const BuildOptions& options) {
  auto parts = shard_corpus(corpus, k);
  ShardedIndex index;
  index.manifest.separator = corpus.separator();
  index.manifest.vocab_size = corpus.vocab_size();
  index.manifest.total_tokens = corpus.size();
  index.manifest.total_docs = corpus.num_docs();
  index.shards.resize(parts.size());
  index.manifest.shards.resize(parts.size());
  parallel_for(parts.size(), parallelism, [&](std::size_t s) {
    try {
      index.shards[s] = build_index(parts[s].corpus, options);
    } catch (const std::exception& e) {
      throw with_shard(s, e);
    }
    auto& entry = index.manifest.shards[s];
    entry.spec = parts[s].spec;
    entry.file = shard_file_name(s);
    entry.corpus_size = parts[s].corpus.size();
    entry.checksum = image_checksum(index.shards[s].image());
  });
  return index;
}

void write_manifest(const ShardManifest& manifest, const std::filesystem::path& manifest_path) {
  nlohmann::json shards = nlohmann::json::array();
  for (const auto& s : manifest.shards) {
    shards.push_back({{"id", s.spec.shard_id},
                      {"file", s.file},
                      {"tokens", s.corpus_size},
                      {"doc_begin", s.spec.doc_begin},
                      {"doc_end", s.spec.doc_end},
                      {"token_begin", s.spec.tokens.alpha},
                      {"token_end", s.spec.tokens.omega},
                      {"checksum", s.checksum}});
  }
  nlohmann::json j = {{"format_version", kIndexVersion},
                      {"separator", manifest.separator},
                      {"vocab_size", manifest.vocab_size},
                      {"total_tokens", manifest.total_tokens},
                      {"total_docs", manifest.total_docs},
                      {"shards", shards}};
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFormat, "cannot write " + manifest_path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kFormat, "write failed: " + manifest_path.string());
}

std::filesystem::path save_sharded(ShardedIndex& index, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t s = 0; s < index.shards.size(); ++s) {
    auto& entry = index.manifest.shards[s];
    save_index(index.shards[s], dir / entry.file);
    entry.checksum = image_checksum(index.shards[s].image());
  }
  const auto path = dir / "manifest.json";
  write_manifest(index.manifest, path);
  return path;
}

ShardManifest read_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::kFormat, "cannot open manifest " + manifest_path.string());
  ShardManifest m;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format_version").get<std::uint32_t>() != kIndexVersion) {
      throw Error(ErrorKind::kVersion, "unsupported manifest version");
    }
    m.separator = j.at("separator").get<TokenId>();
    m.vocab_size = j.at("vocab_size").get<std::uint32_t>();
    m.total_tokens = j.at("total_tokens").get<std::uint64_t>();
    m.total_docs = j.at("total_docs").get<std::uint64_t>();
    for (const auto& s : j.at("shards")) {
      ShardManifestEntry e;
      e.spec.shard_id = s.at("id").get<std::size_t>();
      e.file = s.at("file").get<std::string>();
      e.corpus_size = s.at("tokens").get<std::uint64_t>();
      e.spec.doc_begin = s.at("doc_begin").get<std::size_t>();
      e.spec.doc_end = s.at("doc_end").get<std::size_t>();
      e.spec.tokens = {s.at("token_begin").get<std::uint64_t>(),
                       s.at("token_end").get<std::uint64_t>()};
      e.checksum = s.at("checksum").get<std::uint32_t>();
      m.shards.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, manifest_path.string() + ": " + e.what());
  }
  if (m.shards.empty()) throw Error(ErrorKind::kFormat, "manifest lists no shards");
  std::uint64_t pos = 0;
  std::size_t doc = 0;
  for (std::size_t s = 0; s < m.shards.size(); ++s) {
    const auto& e = m.shards[s];
    if (e.spec.shard_id != s || e.spec.tokens.alpha != pos || e.spec.doc_begin != doc ||
        e.spec.doc_end <= e.spec.doc_begin || e.spec.tokens.size() != e.corpus_size) {
      throw Error(ErrorKind::kFormat,
                  "manifest shard " + std::to_string(s) + " does not continue the partition");
    }
    pos = e.spec.tokens.omega;
    doc = e.spec.doc_end;
  }
  if (pos != m.total_tokens || doc != m.total_docs) {
    throw Error(ErrorKind::kFormat, "manifest shards do not cover the corpus");
  }
  return m;
}

ShardedIndex load_sharded(const std::filesystem::path& path, Backend backend,
                          bool verify_checksum) {
  const auto manifest_path =
      std::filesystem::is_directory(path) ? path / "manifest.json" : path;
  ShardedIndex index;
  index.manifest = read_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  index.shards.resize(index.manifest.shards.size());
  for (std::size_t s = 0; s < index.shards.size(); ++s) {
    const auto& e = index.manifest.shards[s];
    try {
      const auto file = dir / e.file;
      if (!std::filesystem::exists(file)) {
        throw Error(ErrorKind::kFormat, "missing file " + file.string());
      }
      index.shards[s] = load_index(file, backend, verify_checksum);
      const Cdawg& c = index.shards[s];
      if (c.corpus_size() != e.corpus_size || c.separator() != index.manifest.separator ||
          c.vocab_size() != index.manifest.vocab_size) {
        throw Error(ErrorKind::kCorrupt, "index header disagrees with the manifest");
      }
      if (verify_checksum && image_checksum(c.image()) != e.checksum) {
        throw Error(ErrorKind::kCorrupt, "checksum differs from the manifest");
      }
    } catch (const std::exception& ex) {
      throw with_shard(s, ex);
    }
  }
  return index;
}

Corpus reassemble_corpus(const ShardedIndex& index) {
  std::vector<TokenId> tokens;
  tokens.reserve(index.manifest.total_tokens);
  for (const auto& shard : index.shards) {
    for (std::uint64_t i = 0; i < shard.corpus_size(); ++i) tokens.push_back(shard.token_at(i));
  }
  return Corpus::from_tokens(std::move(tokens), index.manifest.separator,
                             index.manifest.vocab_size);
}

MatchAnnotations aggregate_annotations(std::span<const MatchAnnotations> per_shard) {
  if (per_shard.empty()) throw Error(ErrorKind::kUsage, "nothing to aggregate");
  MatchAnnotations out = per_shard.front();
  for (const auto& a : per_shard.subspan(1)) {
    if (a.nnsl.size() != out.nnsl.size()) {
      throw Error(ErrorKind::kValidation, "shard annotations differ in length");
    }
    for (std::size_t i = 0; i < a.nnsl.size(); ++i) {
      if (a.nnsl[i] > out.nnsl[i]) {
        out.nnsl[i] = a.nnsl[i];
        out.counts[i] = a.counts[i];
      } else if (a.nnsl[i] == out.nnsl[i]) {
        out.counts[i] += a.counts[i];
      }
    }
    if (!a.suffix_counts.empty()) {
      out.suffix_counts.resize(a.suffix_counts.size());
      for (std::size_t i = 0; i < a.suffix_counts.size(); ++i) {
        auto& dst = out.suffix_counts[i];
        const auto& src = a.suffix_counts[i];
        if (dst.size() < src.size()) dst.resize(src.size(), 0);
        for (std::size_t m = 0; m < src.size(); ++m) dst[m] += src[m];
      }
    }
    out.has_separator = out.has_separator || a.has_separator;
  }
  return out;
}

MatchAnnotations sharded_nnsl_query(const ShardedIndex& index, std::span<const TokenId> query,
                                    const QueryOptions& options, std::size_t parallelism) {
  if (index.shards.empty()) throw Error(ErrorKind::kState, "sharded index has no shards");
  std::vector<MatchAnnotations> parts(index.shards.size());
  parallel_for(parts.size(), parallelism, [&](std::size_t s) {
    parts[s] = nnsl_query(index.shards[s], query, options);
  });
  return aggregate_annotations(parts);
}

std::vector<QueryOutcome> sharded_batch_query(const ShardedIndex& index,
                                              std::span<const QueryDocument> docs,
                                              std::size_t parallelism,
                                              const QueryOptions& options) {
  std::vector<QueryOutcome> out(docs.size());
  parallel_for(docs.size(), parallelism, [&](std::size_t d) {
    out[d].annotations.doc_id = docs[d].id;
    try {
      out[d].annotations = sharded_nnsl_query(index, docs[d].tokens, options);
      out[d].annotations.doc_id = docs[d].id;
    } catch (const std::exception& e) {
      out[d].error = e.what();
    }
  });
  return out;
}

}  // namespace cdawgscan
