#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdawgscan/cdawg.h"
#include "cdawgscan/novelty.h"
#include "cdawgscan/query.h"
#include "cdawgscan/types.h"

// Brute-force references for differential testing and --verify. Nothing here
// touches the automaton; everything is computed by scanning the corpus.
namespace cdawgscan::oracle {

// Number of (possibly overlapping) occurrences of `pattern` in `text`.
std::uint64_t count_occurrences(std::span<const TokenId> text,
                                std::span<const TokenId> pattern);

// Per-position longest suffix of query[0..i] occurring in `text`, and its
// occurrence count. Runs a longest-common-suffix scan against every text
// position: O(|Q| * |C|).
MatchAnnotations nnsl(std::span<const TokenId> text, std::span<const TokenId> query);

// For each query start s, the length of the longest prefix of query[s..]
// that occurs in `text` (forward scan, independent of nnsl()).
std::vector<std::uint64_t> longest_prefix_matches(std::span<const TokenId> text,
                                                  std::span<const TokenId> query);

// (novel, total) n-gram tallies of `query`; (0, 0) when n > |Q|.
std::pair<std::uint64_t, std::uint64_t> novelty(std::span<const TokenId> text,
                                                std::span<const TokenId> query,
                                                std::uint64_t n);

// novelty() for n = 1..max_n from a single forward scan.
std::vector<std::pair<std::uint64_t, std::uint64_t>> novelty_all(
    std::span<const TokenId> text, std::span<const TokenId> query, std::uint64_t max_n);

// Pooled curve over several queries by direct n-gram counting.
NoveltyCurve novelty_curve(std::span<const TokenId> text,
                           std::span<const std::vector<TokenId>> queries, std::uint64_t max_n);

// Compares nnsl() and counts against `actual` for every document; returns a
// description of the first mismatch.
std::optional<std::string> compare_annotations(std::span<const TokenId> text,
                                               std::span<const QueryDocument> docs,
                                               std::span<const MatchAnnotations> actual);

// Structural audit of a finalized index: bounds of every handle and span,
// edge determinism and sorting, failure chains strictly shortening, size
// bounds, acyclicity, and (when populated) the count recurrence. Linear in
// the index size; returns a description of the first violation.
std::optional<std::string> check_index_structure(const Cdawg& index);

}  // namespace cdawgscan::oracle
