#include "cdawgscan/oracle.h"

#include <algorithm>
#include <exception>

namespace cdawgscan::oracle {

std::uint64_t count_occurrences(std::span<const TokenId> text,
                                std::span<const TokenId> pattern) {
  if (pattern.empty()) return text.size();
  if (pattern.size() > text.size()) return 0;
  std::uint64_t count = 0;
  for (std::size_t i = 0; i + pattern.size() <= text.size(); ++i) {
    if (std::equal(pattern.begin(), pattern.end(), text.begin() + static_cast<std::ptrdiff_t>(i))) {
      ++count;
    }
  }
  return count;
}

MatchAnnotations nnsl(std::span<const TokenId> text, std::span<const TokenId> query) {
  MatchAnnotations out;
  out.nnsl.resize(query.size());
  out.counts.resize(query.size());
  // row[j] = length of the common suffix of query[..i] and text[..j].
  std::vector<std::uint64_t> prev(text.size(), 0);
  std::vector<std::uint64_t> row(text.size(), 0);
  for (std::size_t i = 0; i < query.size(); ++i) {
    std::uint64_t best = 0;
    for (std::size_t j = 0; j < text.size(); ++j) {
      row[j] = text[j] == query[i] ? (j > 0 ? prev[j - 1] : 0) + 1 : 0;
      best = std::max(best, row[j]);
    }
    std::uint64_t hits = 0;
    if (best > 0) {
      for (std::size_t j = 0; j < text.size(); ++j) hits += row[j] >= best ? 1 : 0;
    }
    out.nnsl[i] = best;
    out.counts[i] = hits;
    std::swap(prev, row);
  }
  return out;
}

std::vector<std::uint64_t> longest_prefix_matches(std::span<const TokenId> text,
                                                  std::span<const TokenId> query) {
  std::vector<std::uint64_t> out(query.size(), 0);
  for (std::size_t s = 0; s < query.size(); ++s) {
    std::uint64_t best = 0;
    for (std::size_t j = 0; j < text.size(); ++j) {
      std::uint64_t m = 0;
      while (s + m < query.size() && j + m < text.size() && query[s + m] == text[j + m]) ++m;
      best = std::max(best, m);
    }
    out[s] = best;
  }
  return out;
}

std::pair<std::uint64_t, std::uint64_t> novelty(std::span<const TokenId> text,
                                                std::span<const TokenId> query,
                                                std::uint64_t n) {
  if (n == 0 || n > query.size()) return {0, 0};
  std::uint64_t novel = 0;
  const std::uint64_t total = query.size() - n + 1;
  for (std::uint64_t s = 0; s < total; ++s) {
    if (count_occurrences(text, query.subspan(s, n)) == 0) ++novel;
  }
  return {novel, total};
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> novelty_all(
    std::span<const TokenId> text, std::span<const TokenId> query, std::uint64_t max_n) {
  const auto prefix = longest_prefix_matches(text, query);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (std::uint64_t n = 1; n <= max_n; ++n) {
    if (n > query.size()) {
      out.emplace_back(0, 0);
      continue;
    }
    const std::uint64_t total = query.size() - n + 1;
    std::uint64_t novel = 0;
    for (std::uint64_t s = 0; s < total; ++s) novel += prefix[s] < n ? 1 : 0;
    out.emplace_back(novel, total);
  }
  return out;
}

NoveltyCurve novelty_curve(std::span<const TokenId> text,
                           std::span<const std::vector<TokenId>> queries, std::uint64_t max_n) {
  NoveltyCurve curve;
  for (const auto& q : queries) {
    const auto tallies = novelty_all(text, q, max_n);
    for (std::uint64_t n = 1; n <= tallies.size(); ++n) {
      if (tallies[n - 1].second == 0) break;
      if (curve.rows.size() < n) curve.rows.push_back({n, 0, 0});
      curve.rows[n - 1].novel += tallies[n - 1].first;
      curve.rows[n - 1].total += tallies[n - 1].second;
    }
  }
  return curve;
}

std::optional<std::string> compare_annotations(std::span<const TokenId> text,
                                               std::span<const QueryDocument> docs,
                                               std::span<const MatchAnnotations> actual) {
  if (docs.size() != actual.size()) return "document count differs";
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto expected = nnsl(text, docs[d].tokens);
    const auto& got = actual[d];
    if (got.nnsl.size() != expected.nnsl.size()) {
      return "document '" + docs[d].id + "': length differs";
    }
    for (std::size_t i = 0; i < expected.nnsl.size(); ++i) {
      if (got.nnsl[i] != expected.nnsl[i] || got.counts[i] != expected.counts[i]) {
        return "document '" + docs[d].id + "' position " + std::to_string(i) + ": index (" +
               std::to_string(got.nnsl[i]) + ", " + std::to_string(got.counts[i]) +
               ") vs oracle (" + std::to_string(expected.nnsl[i]) + ", " +
               std::to_string(expected.counts[i]) + ")";
      }
    }
  }
  return std::nullopt;
}

std::optional<std::string> check_index_structure(const Cdawg& index) {
  const std::uint64_t n_states = index.num_nodes();
  const std::uint64_t n_edges = index.num_edges();
  const std::uint64_t text_end = index.corpus_size() + 1;  // sentinel included
  auto where = [](const char* what, std::uint64_t id) {
    return std::string(what) + " " + std::to_string(id) + ": ";
  };
  if (n_states > 2 * index.corpus_size() + 2) return "more than 2|C| states";
  if (n_edges > 3 * index.corpus_size()) return "more than 3|C| edges";
  if (index.node_length(index.source()) != 0) return "source length is not 0";
  if (index.node_failure(index.source()) != kNoNode) return "source has a failure link";
  if (index.node_length(index.sink()) != text_end) return "sink length is not |C| + 1";
  EdgeId prev_begin = 0;
  for (NodeId v = 0; v < n_states; ++v) {
    const EdgeId b = index.edges_begin(v);
    if (b < prev_begin || b > n_edges) return where("node", v) + "edge range out of order";
    prev_begin = b;
  }
  for (std::uint64_t e = 0; e < n_edges; ++e) {
    const auto id = static_cast<EdgeId>(e);
    const Span s = index.edge_span(id);
    if (s.empty() || s.omega > text_end) return where("edge", e) + "span out of range";
    if (index.edge_target(id) >= n_states) return where("edge", e) + "target out of range";
    if (index.token_at(s.alpha) != index.edge_token(id)) {
      return where("edge", e) + "first token disagrees with its label";
    }
  }
  for (NodeId v = 0; v < n_states; ++v) {
    for (EdgeId e = index.edges_begin(v); e < index.edges_end(v); ++e) {
      if (e > index.edges_begin(v) && index.edge_token(e - 1) >= index.edge_token(e)) {
        return where("node", v) + "edges not strictly sorted by first token";
      }
      if (index.node_length(index.edge_target(e)) < index.node_length(v) + index.edge_span(e).size()) {
        return where("edge", e) + "target shorter than its longest path";
      }
    }
    if (v == index.source()) continue;
    const NodeId f = index.node_failure(v);
    if (f == kNoNode || f >= n_states) return where("node", v) + "failure link out of range";
    if (index.node_length(f) >= index.node_length(v)) {
      return where("node", v) + "failure link does not shorten";
    }
  }
  try {
    (void)index.topological_order();
  } catch (const std::exception& e) {
    return e.what();
  }
  if (index.counts_populated()) {
    for (NodeId v = 0; v < n_states; ++v) {
      std::uint64_t sum = v == index.sink() ? 1 : 0;
      for (EdgeId e = index.edges_begin(v); e < index.edges_end(v); ++e) {
        sum += index.node_count(index.edge_target(e));
      }
      if (index.node_count(v) != sum) return where("node", v) + "count breaks the edge sum";
    }
    if (index.node_count(index.source()) != index.corpus_size()) return "source count is not |C|";
  }
  return std::nullopt;
}

}  // namespace cdawgscan::oracle
