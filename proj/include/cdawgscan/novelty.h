#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdawgscan/query.h"

namespace cdawgscan {

// c(n): number of positions whose NNSL is exactly n.
struct LengthHistogram {
  std::map<std::uint64_t, std::uint64_t> counts;
  std::uint64_t total_positions = 0;
};

LengthHistogram length_histogram(std::span<const MatchAnnotations> annotations);

struct NoveltyRow {
  std::uint64_t n = 0;
  std::uint64_t novel = 0;
  std::uint64_t total = 0;
  double ratio() const {
    return total == 0 ? 0.0 : static_cast<double>(novel) / static_cast<double>(total);
  }
  friend bool operator==(const NoveltyRow&, const NoveltyRow&) = default;
};

// One row per n in 1..max_n that has at least one n-gram; rows stop after the
// longest document.
struct NoveltyCurve {
  std::vector<NoveltyRow> rows;
};

// Pooled n-novelty: per document, novel = #{i : L(i) < n} - (n - 1) and
// total = |Q| - (n - 1), both clamped at 0, summed over documents.
NoveltyCurve novelty_curve(std::span<const MatchAnnotations> annotations, std::uint64_t max_n);
std::vector<NoveltyCurve> per_document_novelty_curves(
    std::span<const MatchAnnotations> annotations, std::uint64_t max_n);

struct NnslSummary {
  std::uint64_t positions = 0;
  double mean = 0.0;
  std::uint64_t max = 0;
  double median = 0.0;  // mean of the two middle values for even counts
};

struct NnslStats {
  NnslSummary pooled;
  std::vector<std::optional<NnslSummary>> per_document;  // nullopt for empty documents
};

// Throws Error(kUsage) when there are no positions at all.
NnslStats nnsl_stats(std::span<const MatchAnnotations> annotations);

struct LowerBoundParams {
  double corpus_size = 0.0;   // |C|
  double p = 0.0;             // mass of tokens with at least `entropy_bits` of entropy
  double entropy_bits = 0.0;  // per-token entropy, in bits
  std::uint64_t n_min = 1;
  std::uint64_t n_max = 100;
};

// max(0, 1 - |C| * exp(n * (ln p - entropy_bits * ln 2))).
double lower_bound_value(const LowerBoundParams& params, std::uint64_t n);
std::vector<std::pair<std::uint64_t, double>> lower_bound_curve(const LowerBoundParams& params);
// Smallest n (scanning from n_min, unbounded) whose bound reaches `threshold`;
// nullopt if threshold > 1 or the bound never grows.
std::optional<std::uint64_t> first_n_reaching(const LowerBoundParams& params, double threshold);

enum class TokenCondition { kInTrain, kNotInTrain };
std::string_view condition_name(TokenCondition c);

enum class ConditionMode {
  kPerN,       // a token joins every n whose predicate it satisfies
  kExactlyOne  // In-Train only at n = L(i); Not-in-Train only at n = L(i-1) + 1
};

struct LossBinOptions {
  std::uint64_t max_n = 10;
  // Ascending bucket edges; bucket j is [edge_j, edge_{j+1}), the last is
  // open-ended, counts below edge_0 fall in [0, edge_0).
  std::vector<std::uint64_t> frequency_edges = default_frequency_edges();
  ConditionMode mode = ConditionMode::kPerN;

  static std::vector<std::uint64_t> default_frequency_edges();  // 1, 10, ..., 1e18
};

struct LossBinRow {
  std::uint64_t n = 0;
  TokenCondition condition = TokenCondition::kInTrain;
  // Frequency bucket [lo, hi); absent on per-condition summary rows. hi is
  // nullopt for the open-ended last bucket.
  std::optional<std::uint64_t> freq_lo;
  std::optional<std::uint64_t> freq_hi;
  bool bucketed = false;
  double sum = 0.0;
  std::uint64_t count = 0;
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

struct LossBinTable {
  std::string value_label = "mean_loss";
  std::vector<LossBinRow> rows;  // ordered by n; summaries before buckets
};

// In-Train_n at i: L(i) >= n. Not-in-Train_n at i: L(i) < n <= L(i-1) + 1,
// with L(-1) taken as 0. In-Train tokens are bucketed by the frequency of the
// n-gram ending at i (N(i) when n = L(i), else the suffix count profile, so
// annotations need suffix_counts up to min(L(i), max_n)).
LossBinTable completion_loss_bins(std::span<const MatchAnnotations> annotations,
                                  std::span<const std::vector<double>> losses,
                                  const LossBinOptions& options);

struct LossFile {
  std::string value_label = "mean_loss";
  std::unordered_map<std::string, std::vector<double>> losses;
};

// JSONL {"id": ..., "losses": [floats]}; an optional {"meta": {"label": ...}}
// line names the value column.
LossFile read_loss_jsonl(std::istream& in);

// Losses in annotation order; throws Error(kValidation) on missing ids or
// length mismatches.
std::vector<std::vector<double>> align_losses(const LossFile& file,
                                              std::span<const MatchAnnotations> annotations);

void write_novelty_csv(std::ostream& out, const NoveltyCurve& curve);
void write_novelty_json(std::ostream& out, const NoveltyCurve& curve,
                        const std::vector<NoveltyCurve>* per_document = nullptr);
void write_loss_bins_csv(std::ostream& out, const LossBinTable& table);
void write_loss_bins_json(std::ostream& out, const LossBinTable& table);

}  // namespace cdawgscan
