#include "cdawgscan/query.h"

#include <algorithm>
#include <limits>
#include <atomic>
#include <istream>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace cdawgscan {

MatchAnnotations nnsl_query(const Cdawg& index, std::span<const TokenId> query,
                            const QueryOptions& options, TransitionStats* stats) {
  MatchAnnotations out;
  out.nnsl.resize(query.size());
  out.counts.resize(query.size());
  if (options.profile_max_len > 0) out.suffix_counts.resize(query.size());
  QueryCursor cursor = index.start();
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (query[i] == index.separator()) out.has_separator = true;
    cursor = index.transition(cursor, query[i], stats);
    out.nnsl[i] = cursor.length;
    out.counts[i] = index.cursor_count(cursor);
    if (options.profile_max_len > 0 && cursor.length > 0) {
      auto& dense = out.suffix_counts[i];
      dense.assign(std::min(cursor.length, options.profile_max_len), 0);
      for (const CountInterval& iv : index.suffix_count_profile(cursor)) {
        for (std::uint64_t m = iv.lo; m <= std::min(iv.hi, dense.size()); ++m) {
          dense[m - 1] = iv.count;
        }
      }
    }
  }
  return out;
}

std::vector<QueryOutcome> batch_query(const Cdawg& index, std::span<const QueryDocument> docs,
                                      std::size_t parallelism, const QueryOptions& options) {
  std::vector<QueryOutcome> out(docs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < docs.size(); i = next++) {
      try {
        out[i].annotations = nnsl_query(index, docs[i].tokens, options);
        out[i].annotations.doc_id = docs[i].id;
      } catch (const std::exception& e) {
        out[i].annotations.doc_id = docs[i].id;
        out[i].error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(parallelism, docs.size()));
  if (n_threads == 1) {
    worker();
    return out;
  }
  {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  return out;
}

std::vector<TokenId> strip_separators(std::span<const TokenId> tokens, TokenId separator) {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (TokenId t : tokens)
    if (t != separator) out.push_back(t);
  return out;
}

namespace {

std::vector<TokenId> parse_token_array(const nlohmann::json& arr, std::size_t line_no) {
  if (!arr.is_array()) {
    throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": \"tokens\" must be an array");
  }
  std::vector<TokenId> tokens;
  tokens.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > std::numeric_limits<TokenId>::max()) {
      throw Error(ErrorKind::kFormat,
                  "line " + std::to_string(line_no) + ": token ids must be 32-bit unsigned integers");
    }
    tokens.push_back(v.get<TokenId>());
  }
  return tokens;
}

std::vector<std::uint64_t> parse_u64_array(const nlohmann::json& j, const char* key,
                                           std::size_t line_no) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw Error(ErrorKind::kFormat,
                "line " + std::to_string(line_no) + ": missing array \"" + key + "\"");
  }
  std::vector<std::uint64_t> out;
  out.reserve(j[key].size());
  for (const auto& v : j[key]) {
    if (!v.is_number_unsigned()) {
      throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": \"" + key +
                                          "\" must hold non-negative integers");
    }
    out.push_back(v.get<std::uint64_t>());
  }
  return out;
}

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) {
      throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": expected an object");
    }
    fn(j, line_no);
  }
}

std::string id_of(const nlohmann::json& j, std::size_t line_no) {
  if (!j.contains("id")) return "line-" + std::to_string(line_no);
  if (j["id"].is_string()) return j["id"].get<std::string>();
  if (j["id"].is_number()) return j["id"].dump();
  throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": \"id\" must be a string");
}

}  // namespace

std::vector<QueryDocument> read_query_jsonl(std::istream& in) {
  std::vector<QueryDocument> docs;
  for_each_json_line(in, [&](const nlohmann::json& j, std::size_t line_no) {
    if (!j.contains("tokens")) {
      throw Error(ErrorKind::kFormat, "line " + std::to_string(line_no) + ": missing \"tokens\"");
    }
    docs.push_back({id_of(j, line_no), parse_token_array(j["tokens"], line_no)});
  });
  return docs;
}

std::vector<QueryDocument> read_query_char_text(std::istream& in) {
  std::vector<QueryDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    QueryDocument d;
    d.id = "line-" + std::to_string(line_no);
    for (char ch : line) d.tokens.push_back(static_cast<unsigned char>(ch));
    docs.push_back(std::move(d));
  }
  return docs;
}

void write_annotation_jsonl(std::ostream& out, const MatchAnnotations& a) {
  nlohmann::json j;
  j["id"] = a.doc_id;
  j["nnsl"] = a.nnsl;
  j["counts"] = a.counts;
  out << j.dump() << '\n';
}

std::vector<MatchAnnotations> read_annotation_jsonl(std::istream& in) {
  std::vector<MatchAnnotations> out;
  for_each_json_line(in, [&](const nlohmann::json& j, std::size_t line_no) {
    MatchAnnotations a;
    a.doc_id = id_of(j, line_no);
    a.nnsl = parse_u64_array(j, "nnsl", line_no);
    a.counts = parse_u64_array(j, "counts", line_no);
    if (a.nnsl.size() != a.counts.size()) {
      throw Error(ErrorKind::kFormat,
                  "line " + std::to_string(line_no) + ": nnsl and counts differ in length");
    }
    out.push_back(std::move(a));
  });
  return out;
}

std::optional<std::string> check_annotation_invariants(const MatchAnnotations& a) {
  if (a.nnsl.size() != a.counts.size()) return "nnsl and counts differ in length";
  for (std::size_t i = 0; i < a.nnsl.size(); ++i) {
    const std::uint64_t prev = i == 0 ? 0 : a.nnsl[i - 1];
    if (a.nnsl[i] > prev + 1) {
      return "position " + std::to_string(i) + ": nnsl grows by more than one";
    }
    if ((a.counts[i] == 0) != (a.nnsl[i] == 0)) {
      return "position " + std::to_string(i) + ": count is zero iff nnsl is zero violated";
    }
  }
  return std::nullopt;
}

}  // namespace cdawgscan
