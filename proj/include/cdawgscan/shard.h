#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cdawgscan/cdawg.h"
#include "cdawgscan/corpus.h"
#include "cdawgscan/query.h"

namespace cdawgscan {

struct ShardManifestEntry {
  ShardSpec spec;
  std::string file;  // relative to the manifest directory
  std::uint64_t corpus_size = 0;
  std::uint32_t checksum = 0;
};

struct ShardManifest {
  TokenId separator = 0;
  std::uint32_t vocab_size = 0;
  std::uint64_t total_tokens = 0;
  std::uint64_t total_docs = 0;
  std::vector<ShardManifestEntry> shards;
};

struct ShardedIndex {
  ShardManifest manifest;
  std::vector<Cdawg> shards;

  std::size_t size() const { return shards.size(); }
};

// Shards the corpus and builds every shard (build + counts) on up to
// `parallelism` threads. Failures name the shard id.
ShardedIndex build_sharded(const Corpus& corpus, std::size_t k, std::size_t parallelism,
                           const BuildOptions& options = {});

// Writes shard_<id>.cdawg files and manifest.json into `dir`; returns the
// manifest path and fills in checksums.
std::filesystem::path save_sharded(ShardedIndex& index, const std::filesystem::path& dir);

ShardManifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const ShardManifest& manifest, const std::filesystem::path& manifest_path);

// Accepts the manifest file or its directory. Any missing, corrupt or
// mismatching shard aborts with Error naming the shard id.
ShardedIndex load_sharded(const std::filesystem::path& path, Backend backend,
                          bool verify_checksum = true);

// The parent corpus, reassembled from the shards' embedded token slices.
Corpus reassemble_corpus(const ShardedIndex& index);

// Elementwise max of lengths, counts summed over shards at the maximum, and
// suffix_counts summed per length. Inputs must describe the same query.
MatchAnnotations aggregate_annotations(std::span<const MatchAnnotations> per_shard);

// Queries every shard (concurrently when parallelism > 1) and aggregates.
MatchAnnotations sharded_nnsl_query(const ShardedIndex& index, std::span<const TokenId> query,
                                    const QueryOptions& options = {},
                                    std::size_t parallelism = 1);

std::vector<QueryOutcome> sharded_batch_query(const ShardedIndex& index,
                                              std::span<const QueryDocument> docs,
                                              std::size_t parallelism,
                                              const QueryOptions& options = {});

}  // namespace cdawgscan
