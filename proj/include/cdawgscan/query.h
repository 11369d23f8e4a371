#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdawgscan/cdawg.h"
#include "cdawgscan/types.h"

namespace cdawgscan {

// Per-position non-novel suffix lengths L(Q) and the corpus frequency N(Q) of
// each longest matched suffix.
struct MatchAnnotations {
  std::string doc_id;
  std::vector<std::uint64_t> nnsl;
  std::vector<std::uint64_t> counts;
  // Optional: suffix_counts[i][m-1] = occurrences of the length-m suffix
  // ending at i, for m = 1..min(nnsl[i], profile_max_len).
  std::vector<std::vector<std::uint64_t>> suffix_counts;
  bool has_separator = false;  // query contained the corpus separator

  std::size_t size() const { return nnsl.size(); }
  friend bool operator==(const MatchAnnotations&, const MatchAnnotations&) = default;
};

struct QueryOptions {
  // When > 0, fill MatchAnnotations::suffix_counts up to this length.
  std::uint64_t profile_max_len = 0;
};

MatchAnnotations nnsl_query(const Cdawg& index, std::span<const TokenId> query,
                            const QueryOptions& options = {},
                            TransitionStats* stats = nullptr);

struct QueryDocument {
  std::string id;
  std::vector<TokenId> tokens;
};

struct QueryOutcome {
  MatchAnnotations annotations;
  std::optional<std::string> error;
};

// Runs documents on `parallelism` worker threads; output order matches input
// order and each result equals the serial nnsl_query result.
std::vector<QueryOutcome> batch_query(const Cdawg& index, std::span<const QueryDocument> docs,
                                      std::size_t parallelism,
                                      const QueryOptions& options = {});

// Removes every occurrence of `separator`.
std::vector<TokenId> strip_separators(std::span<const TokenId> tokens, TokenId separator);

// JSONL helpers: {"id": string, "tokens": [ints]} in, {"id", "nnsl", "counts"}
// out. Throws Error(kFormat) with the line number on malformed input.
std::vector<QueryDocument> read_query_jsonl(std::istream& in);
// Newline-delimited text, one document per line, bytes as tokens; ids are
// "line-<n>" (1-based).
std::vector<QueryDocument> read_query_char_text(std::istream& in);
void write_annotation_jsonl(std::ostream& out, const MatchAnnotations& annotations);
std::vector<MatchAnnotations> read_annotation_jsonl(std::istream& in);

// Invariants every query output must satisfy; returns a description of the
// first violation.
std::optional<std::string> check_annotation_invariants(const MatchAnnotations& a);

}  // namespace cdawgscan
