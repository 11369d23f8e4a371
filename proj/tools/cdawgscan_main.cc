// cdawgscan: build CDAWG indexes over tokenized corpora and compute NNSL,
// novelty and completion-loss statistics from them.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdawgscan/cdawg.h"
#include "cdawgscan/corpus.h"
#include "cdawgscan/novelty.h"
#include "cdawgscan/oracle.h"
#include "cdawgscan/query.h"
#include "cdawgscan/shard.h"

namespace cs = cdawgscan;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitMismatch = 3;

constexpr const char* kIndexEnv = "CDAWGSCAN_INDEX_DIR";

struct VerificationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_index_dir() {
  const char* v = std::getenv(kIndexEnv);
  return v != nullptr ? v : "";
}

std::string require_index(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  throw cs::Error(cs::ErrorKind::kUsage,
                  std::string("no index given: pass --index or set ") + kIndexEnv);
}

// "36" is a token id; any other single character stands for its byte value.
cs::TokenId parse_separator(const std::string& s) {
  if (s.empty()) throw cs::Error(cs::ErrorKind::kUsage, "empty --separator");
  if (s.find_first_not_of("0123456789") == std::string::npos) {
    const auto v = std::stoull(s);
    if (v > 0xFFFFFFFFull) throw cs::Error(cs::ErrorKind::kUsage, "--separator out of range");
    return static_cast<cs::TokenId>(v);
  }
  if (s.size() == 1) return static_cast<unsigned char>(s[0]);
  throw cs::Error(cs::ErrorKind::kUsage, "--separator must be an id or a single character");
}

cs::Backend parse_backend(const std::string& s) {
  return s == "disk" ? cs::Backend::kDisk : cs::Backend::kRam;
}

std::size_t resolve_parallelism(std::size_t p) {
  return p != 0 ? p : std::max(1u, std::thread::hardware_concurrency());
}

// Output stream: stdout for "" or "-", else the named file.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::trunc);
      if (!file_) throw cs::Error(cs::ErrorKind::kFormat, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

template <typename Fn>
auto with_input(const std::string& path, Fn&& fn) {
  if (path == "-") return fn(std::cin);
  std::ifstream in(path);
  if (!in) throw cs::Error(cs::ErrorKind::kFormat, "cannot open " + path);
  return fn(in);
}

json stats_json(const cs::IndexStats& s) {
  return {{"tokens", s.corpus_size},
          {"n_states", s.n_states},
          {"n_edges", s.n_edges},
          {"bytes", s.bytes_total},
          {"bytes_per_token", s.bytes_per_corpus_token},
          {"states_per_token", s.corpus_size ? double(s.n_states) / double(s.corpus_size) : 0.0},
          {"edges_per_token", s.corpus_size ? double(s.n_edges) / double(s.corpus_size) : 0.0}};
}

json sharded_stats_json(const cs::ShardedIndex& index) {
  cs::IndexStats total;
  json shards = json::array();
  for (std::size_t s = 0; s < index.size(); ++s) {
    const auto st = index.shards[s].stats();
    json j = stats_json(st);
    j["id"] = s;
    j["checksum"] = index.manifest.shards[s].checksum;
    shards.push_back(std::move(j));
    total.corpus_size += st.corpus_size;
    total.n_states += st.n_states;
    total.n_edges += st.n_edges;
    total.bytes_total += st.bytes_total;
  }
  total.bytes_per_corpus_token =
      total.corpus_size ? double(total.bytes_total) / double(total.corpus_size) : 0.0;
  json out = stats_json(total);
  out["documents"] = index.manifest.total_docs;
  out["vocab_size"] = index.manifest.vocab_size;
  out["separator"] = index.manifest.separator;
  out["shards"] = std::move(shards);
  return out;
}

// Shared query-side flags.
struct QueryInputs {
  std::string index;
  std::string queries;
  std::string query_format = "jsonl";
  std::string backend = "ram";
  std::size_t parallelism = 1;
  bool keep_separators = false;

  void add_to(CLI::App* cmd, bool queries_required) {
    cmd->add_option("--index", index, "Index directory or manifest (default: $" +
                                          std::string(kIndexEnv) + ")");
    auto* q = cmd->add_option("--queries", queries, "Query documents ('-' for stdin)");
    if (queries_required) q->required();
    cmd->add_option("--query-format", query_format, "jsonl or char-text")
        ->check(CLI::IsMember({"jsonl", "char-text"}));
    cmd->add_option("--backend", backend, "ram or disk")->check(CLI::IsMember({"ram", "disk"}));
    cmd->add_option("--parallelism", parallelism, "Worker threads (0 = all cores)");
    cmd->add_flag("--keep-separators", keep_separators,
                  "Do not strip separator tokens from queries");
  }

  cs::ShardedIndex load_index() const {
    return cs::load_sharded(require_index(index), parse_backend(backend));
  }

  std::vector<cs::QueryDocument> load_queries(cs::TokenId separator) const {
    auto docs = with_input(queries, [&](std::istream& in) {
      return query_format == "char-text" ? cs::read_query_char_text(in)
                                         : cs::read_query_jsonl(in);
    });
    std::size_t touched = 0;
    for (auto& d : docs) {
      const auto stripped = cs::strip_separators(d.tokens, separator);
      if (stripped.size() == d.tokens.size()) continue;
      ++touched;
      if (!keep_separators) d.tokens = stripped;
    }
    if (touched > 0) {
      std::cerr << (keep_separators ? "warning: " : "note: ") << touched
                << " query document(s) contain the separator"
                << (keep_separators ? "; matches may span document boundaries\n"
                                    : "; separators stripped\n");
    }
    return docs;
  }

  std::vector<cs::MatchAnnotations> run(const cs::ShardedIndex& idx,
                                        const std::vector<cs::QueryDocument>& docs,
                                        const cs::QueryOptions& opts = {}) const {
    const auto outcomes =
        cs::sharded_batch_query(idx, docs, resolve_parallelism(parallelism), opts);
    std::vector<cs::MatchAnnotations> out;
    out.reserve(outcomes.size());
    std::size_t failed = 0;
    for (const auto& o : outcomes) {
      if (o.error) {
        std::cerr << "error: document '" << o.annotations.doc_id << "': " << *o.error << '\n';
        ++failed;
        continue;
      }
      out.push_back(o.annotations);
    }
    if (failed > 0) {
      throw cs::Error(cs::ErrorKind::kValidation, std::to_string(failed) + " document(s) failed");
    }
    return out;
  }
};

// Runs the brute-force oracle over `docs` when the corpus is small enough.
void verify_against_oracle(const cs::ShardedIndex& idx,
                           const std::vector<cs::QueryDocument>& docs,
                           const std::vector<cs::MatchAnnotations>& got,
                           std::uint64_t max_tokens, std::optional<std::uint64_t> novelty_max_n) {
  if (idx.manifest.total_tokens > max_tokens) {
    std::cerr << "verify: skipped, corpus has " << idx.manifest.total_tokens
              << " tokens (limit --verify-max-tokens " << max_tokens << ")\n";
    return;
  }
  const cs::Corpus corpus = cs::reassemble_corpus(idx);
  if (auto diff = cs::oracle::compare_annotations(corpus.tokens(), docs, got)) {
    throw VerificationFailed("annotations differ from the oracle: " + *diff);
  }
  if (novelty_max_n) {
    std::vector<std::vector<cs::TokenId>> queries;
    for (const auto& d : docs) queries.push_back(d.tokens);
    const auto expected = cs::oracle::novelty_curve(corpus.tokens(), queries, *novelty_max_n);
    const auto actual = cs::novelty_curve(got, *novelty_max_n);
    if (expected.rows != actual.rows) {
      throw VerificationFailed("novelty curve differs from direct n-gram counting");
    }
  }
  std::cerr << "verify: " << docs.size() << " document(s) match the oracle\n";
}

int run(int argc, char** argv) {
  CLI::App app{"CDAWG corpus index: unbounded n-gram overlap queries and novelty analytics"};
  app.require_subcommand(1);

  // build
  auto* build = app.add_subcommand("build", "Build a (sharded) index from a corpus");
  std::string build_input, build_format = "jsonl-token-arrays", build_sep, build_out;
  std::optional<std::uint32_t> build_vocab;
  std::size_t build_shards = 1, build_parallelism = 1;
  unsigned build_handle = 0;
  build->add_option("--input", build_input, "Corpus file")->required();
  build->add_option("--format", build_format,
                    "binary-u16, binary-u32, jsonl-token-arrays or char-text");
  build->add_option("--separator", build_sep, "Separator token id, or a single character")
      ->required();
  build->add_option("--vocab-size", build_vocab, "Vocabulary size (default: inferred)");
  build->add_option("--shards", build_shards, "Number of document-aligned shards");
  build->add_option("--parallelism", build_parallelism, "Shard build threads (0 = all cores)");
  build->add_option("--handle-width", build_handle, "Index handle bytes: 4, 5 or 0 for auto")
      ->check(CLI::IsMember({0u, 4u, 5u}));
  build->add_option("--out", build_out, "Output directory (default: $" +
                                            std::string(kIndexEnv) + ")");

  // stats
  auto* stats = app.add_subcommand("stats", "Print index statistics as JSON");
  std::string stats_index, stats_backend = "ram";
  stats->add_option("--index", stats_index, "Index directory or manifest");
  stats->add_option("--backend", stats_backend)->check(CLI::IsMember({"ram", "disk"}));

  // query
  auto* query = app.add_subcommand("query", "Per-position NNSL and counts as JSONL");
  QueryInputs query_in;
  query_in.add_to(query, true);
  std::string query_out;
  bool query_verify = false;
  std::uint64_t verify_max_tokens = 1'000'000;
  query->add_option("--output", query_out, "Output JSONL (default stdout)");
  query->add_flag("--verify", query_verify, "Re-check every document against the oracle");
  query->add_option("--verify-max-tokens", verify_max_tokens,
                    "Skip --verify above this corpus size");

  // novelty
  auto* novelty = app.add_subcommand("novelty", "n-novelty curve and NNSL statistics");
  std::string nov_annotations, nov_out, nov_format = "csv";
  std::uint64_t nov_max_n = 100;
  bool nov_per_doc = false, nov_verify = false, nov_stats = false;
  QueryInputs nov_in;
  nov_in.add_to(novelty, false);
  novelty->add_option("--annotations", nov_annotations, "Query output JSONL ('-' for stdin)");
  novelty->add_option("--max-n", nov_max_n, "Largest n");
  novelty->add_option("--format", nov_format)->check(CLI::IsMember({"csv", "json"}));
  novelty->add_flag("--per-document", nov_per_doc, "Also emit per-document curves (json)");
  novelty->add_flag("--nnsl-stats", nov_stats, "Add mean/max/median NNSL (json)");
  novelty->add_flag("--verify", nov_verify, "Recount n-grams directly (needs --queries)");
  novelty->add_option("--verify-max-tokens", verify_max_tokens);
  novelty->add_option("--output", nov_out);

  // bound
  auto* bound = app.add_subcommand("bound", "Lower bound on n-novelty of random text");
  cs::LowerBoundParams bp;
  double bound_threshold = 0.99;
  std::string bound_format = "json", bound_out;
  bound->add_option("--corpus-size", bp.corpus_size, "|C|")->required();
  bound->add_option("--p", bp.p, "Probability mass of high-entropy tokens")->required();
  bound->add_option("--entropy-bits", bp.entropy_bits, "Entropy per token, in bits")->required();
  bound->add_option("--n-min", bp.n_min);
  bound->add_option("--n-max", bp.n_max);
  bound->add_option("--threshold", bound_threshold, "Report the first n reaching this value");
  bound->add_option("--format", bound_format)->check(CLI::IsMember({"csv", "json"}));
  bound->add_option("--output", bound_out);

  // loss-bins
  auto* loss = app.add_subcommand("loss-bins", "Mean per-token loss by In-Train/Not-in-Train");
  QueryInputs loss_in;
  loss_in.add_to(loss, true);
  std::string loss_file, loss_edges, loss_mode = "per-n", loss_format = "csv", loss_out;
  cs::LossBinOptions loss_opts;
  loss->add_option("--losses", loss_file, "Per-token values JSONL")->required();
  loss->add_option("--max-n", loss_opts.max_n);
  loss->add_option("--edges", loss_edges, "Comma-separated ascending frequency bucket edges");
  loss->add_option("--mode", loss_mode)->check(CLI::IsMember({"per-n", "exactly-one"}));
  loss->add_option("--format", loss_format)->check(CLI::IsMember({"csv", "json"}));
  loss->add_option("--output", loss_out);

  // verify
  auto* verify = app.add_subcommand("verify", "Audit index structure, optionally vs the oracle");
  QueryInputs ver_in;
  ver_in.add_to(verify, false);
  std::uint64_t ver_max_n = 16;
  verify->add_option("--max-n", ver_max_n, "Novelty cross-check depth");
  verify->add_option("--verify-max-tokens", verify_max_tokens);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*build) {
    const std::string out_dir = build_out.empty() ? require_index(default_index_dir()) : build_out;
    if (build_shards == 0) throw cs::Error(cs::ErrorKind::kUsage, "--shards must be at least 1");
    cs::LoadOptions lo;
    lo.format = cs::parse_corpus_format(build_format);
    lo.separator = parse_separator(build_sep);
    lo.vocab_size = build_vocab;
    std::cerr << "loading " << build_input << '\n';
    const cs::Corpus corpus = cs::load_corpus(build_input, lo);
    std::cerr << "building " << build_shards << " shard(s) over " << corpus.size()
              << " tokens, " << corpus.num_docs() << " documents\n";
    const auto t0 = std::chrono::steady_clock::now();
    cs::ShardedIndex idx = cs::build_sharded(corpus, build_shards,
                                             resolve_parallelism(build_parallelism),
                                             cs::BuildOptions{build_handle});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto manifest = cs::save_sharded(idx, out_dir);
    json j = sharded_stats_json(idx);
    j["manifest"] = manifest.string();
    j["build_seconds"] = secs;
    j["tokens_per_second"] = secs > 0 ? double(corpus.size()) / secs : 0.0;
    std::cout << j.dump(2) << '\n';
    return kExitOk;
  }

  if (*stats) {
    const auto idx = cs::load_sharded(require_index(stats_index.empty() ? default_index_dir()
                                                                        : stats_index),
                                      parse_backend(stats_backend));
    std::cout << sharded_stats_json(idx).dump(2) << '\n';
    return kExitOk;
  }

  for (QueryInputs* qi : {&query_in, &nov_in, &loss_in, &ver_in}) {
    if (qi->index.empty()) qi->index = default_index_dir();
  }

  if (*query) {
    const auto idx = query_in.load_index();
    const auto docs = query_in.load_queries(idx.manifest.separator);
    const auto annotations = query_in.run(idx, docs);
    for (const auto& a : annotations) {
      if (auto bad = cs::check_annotation_invariants(a)) {
        throw VerificationFailed("document '" + a.doc_id + "': " + *bad);
      }
    }
    if (query_verify) verify_against_oracle(idx, docs, annotations, verify_max_tokens, {});
    Output out(query_out);
    for (const auto& a : annotations) cs::write_annotation_jsonl(out.stream(), a);
    return kExitOk;
  }

  if (*novelty) {
    if (nov_annotations.empty() == nov_in.queries.empty()) {
      throw cs::Error(cs::ErrorKind::kUsage, "give exactly one of --annotations or --queries");
    }
    if (nov_verify && nov_in.queries.empty()) {
      throw cs::Error(cs::ErrorKind::kUsage, "--verify needs --index and --queries");
    }
    if ((nov_per_doc || nov_stats) && nov_format != "json") {
      throw cs::Error(cs::ErrorKind::kUsage, "--per-document and --nnsl-stats need --format json");
    }
    std::vector<cs::MatchAnnotations> annotations;
    if (!nov_annotations.empty()) {
      annotations = with_input(nov_annotations, [](std::istream& in) {
        return cs::read_annotation_jsonl(in);
      });
    } else {
      const auto idx = nov_in.load_index();
      const auto docs = nov_in.load_queries(idx.manifest.separator);
      annotations = nov_in.run(idx, docs);
      if (nov_verify) verify_against_oracle(idx, docs, annotations, verify_max_tokens, nov_max_n);
    }
    const auto curve = cs::novelty_curve(annotations, nov_max_n);
    Output out(nov_out);
    if (nov_format == "csv") {
      cs::write_novelty_csv(out.stream(), curve);
      return kExitOk;
    }
    std::vector<cs::NoveltyCurve> per_doc;
    if (nov_per_doc) per_doc = cs::per_document_novelty_curves(annotations, nov_max_n);
    if (!nov_stats) {
      cs::write_novelty_json(out.stream(), curve, nov_per_doc ? &per_doc : nullptr);
      return kExitOk;
    }
    std::ostringstream curve_text;
    cs::write_novelty_json(curve_text, curve, nov_per_doc ? &per_doc : nullptr);
    json j = json::parse(curve_text.str());
    const auto st = cs::nnsl_stats(annotations);
    auto summary = [](const cs::NnslSummary& s) {
      return json{{"positions", s.positions}, {"mean", s.mean}, {"max", s.max}, {"median", s.median}};
    };
    j["nnsl"]["pooled"] = summary(st.pooled);
    j["nnsl"]["per_document"] = json::array();
    for (const auto& d : st.per_document) {
      j["nnsl"]["per_document"].push_back(d ? summary(*d) : json(nullptr));
    }
    out.stream() << j.dump(2) << '\n';
    return kExitOk;
  }

  if (*bound) {
    const auto curve = cs::lower_bound_curve(bp);
    const auto first = cs::first_n_reaching(bp, bound_threshold);
    Output out(bound_out);
    if (bound_format == "csv") {
      out.stream() << "n,bound\n";
      for (const auto& [n, v] : curve) out.stream() << n << ',' << v << '\n';
    } else {
      json rows = json::array();
      for (const auto& [n, v] : curve) rows.push_back({{"n", n}, {"bound", v}});
      out.stream() << json{{"threshold", bound_threshold},
                           {"first_n", first ? json(*first) : json(nullptr)},
                           {"curve", rows}}
                          .dump(2)
                   << '\n';
    }
    if (first) std::cerr << "first n with bound >= " << bound_threshold << ": " << *first << '\n';
    return kExitOk;
  }

  if (*loss) {
    if (!loss_edges.empty()) {
      loss_opts.frequency_edges.clear();
      std::stringstream ss(loss_edges);
      for (std::string item; std::getline(ss, item, ',');) {
        try {
          loss_opts.frequency_edges.push_back(std::stoull(item));
        } catch (const std::exception&) {
          throw cs::Error(cs::ErrorKind::kUsage, "bad --edges value '" + item + "'");
        }
      }
    }
    loss_opts.mode = loss_mode == "exactly-one" ? cs::ConditionMode::kExactlyOne
                                                : cs::ConditionMode::kPerN;
    const auto idx = loss_in.load_index();
    const auto docs = loss_in.load_queries(idx.manifest.separator);
    const auto annotations = loss_in.run(idx, docs, cs::QueryOptions{loss_opts.max_n});
    const auto file = with_input(loss_file, [](std::istream& in) { return cs::read_loss_jsonl(in); });
    const auto losses = cs::align_losses(file, annotations);
    auto table = cs::completion_loss_bins(annotations, losses, loss_opts);
    table.value_label = file.value_label;
    Output out(loss_out);
    if (loss_format == "csv") {
      cs::write_loss_bins_csv(out.stream(), table);
    } else {
      cs::write_loss_bins_json(out.stream(), table);
    }
    return kExitOk;
  }

  if (*verify) {
    const auto idx = ver_in.load_index();
    for (std::size_t s = 0; s < idx.size(); ++s) {
      if (auto bad = cs::oracle::check_index_structure(idx.shards[s])) {
        throw VerificationFailed("shard " + std::to_string(s) + ": " + *bad);
      }
    }
    std::cerr << "verify: " << idx.size() << " shard(s) structurally sound\n";
    if (!ver_in.queries.empty()) {
      const auto docs = ver_in.load_queries(idx.manifest.separator);
      const auto annotations = ver_in.run(idx, docs);
      verify_against_oracle(idx, docs, annotations, verify_max_tokens, ver_max_n);
    }
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const VerificationFailed& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return kExitMismatch;
  } catch (const cs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == cs::ErrorKind::kUsage ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
