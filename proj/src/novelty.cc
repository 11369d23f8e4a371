#include "cdawgscan/novelty.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <tuple>

#include <json.hpp>

namespace cdawgscan {

LengthHistogram length_histogram(std::span<const MatchAnnotations> annotations) {
  LengthHistogram h;
  for (const auto& a : annotations) {
    for (std::uint64_t l : a.nnsl) ++h.counts[l];
    h.total_positions += a.nnsl.size();
  }
  return h;
}

namespace {

// below[n] = #{i : L(i) < n} for n = 0..max_n.
std::vector<std::uint64_t> positions_below(const MatchAnnotations& a, std::uint64_t max_n) {
  std::vector<std::uint64_t> below(max_n + 1, 0);
  for (std::uint64_t l : a.nnsl) {
    if (l < max_n) ++below[l + 1];
  }
  for (std::uint64_t n = 1; n <= max_n; ++n) below[n] += below[n - 1];
  return below;
}

void accumulate_curve(const MatchAnnotations& a, std::uint64_t max_n,
                      std::vector<NoveltyRow>& rows) {
  const std::uint64_t len = a.nnsl.size();
  const std::uint64_t top = std::min(max_n, len);
  if (top == 0) return;
  const auto below = positions_below(a, top);
  if (rows.size() < top) {
    const std::size_t old = rows.size();
    rows.resize(top);
    for (std::size_t i = old; i < top; ++i) rows[i].n = i + 1;
  }
  for (std::uint64_t n = 1; n <= top; ++n) {
    const std::uint64_t shift = n - 1;
    rows[n - 1].novel += below[n] > shift ? below[n] - shift : 0;
    rows[n - 1].total += len - shift;
  }
}

}  // namespace

NoveltyCurve novelty_curve(std::span<const MatchAnnotations> annotations, std::uint64_t max_n) {
  if (max_n == 0) throw Error(ErrorKind::kUsage, "max_n must be at least 1");
  NoveltyCurve curve;
  for (const auto& a : annotations) accumulate_curve(a, max_n, curve.rows);
  return curve;
}

std::vector<NoveltyCurve> per_document_novelty_curves(
    std::span<const MatchAnnotations> annotations, std::uint64_t max_n) {
  if (max_n == 0) throw Error(ErrorKind::kUsage, "max_n must be at least 1");
  std::vector<NoveltyCurve> out(annotations.size());
  for (std::size_t d = 0; d < annotations.size(); ++d) {
    accumulate_curve(annotations[d], max_n, out[d].rows);
  }
  return out;
}

namespace {

NnslSummary summarize(std::vector<std::uint64_t> values) {
  NnslSummary s;
  s.positions = values.size();
  std::uint64_t sum = 0;
  for (std::uint64_t v : values) {
    sum += v;
    s.max = std::max(s.max, v);
  }
  s.mean = static_cast<double>(sum) / static_cast<double>(values.size());
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const std::uint64_t upper = values[mid];
  if (values.size() % 2 == 1) {
    s.median = static_cast<double>(upper);
  } else {
    const std::uint64_t lower =
        *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    s.median = (static_cast<double>(lower) + static_cast<double>(upper)) / 2.0;
  }
  return s;
}

}  // namespace

NnslStats nnsl_stats(std::span<const MatchAnnotations> annotations) {
  NnslStats stats;
  std::vector<std::uint64_t> pooled;
  for (const auto& a : annotations) {
    pooled.insert(pooled.end(), a.nnsl.begin(), a.nnsl.end());
    stats.per_document.push_back(a.nnsl.empty() ? std::nullopt
                                                : std::optional(summarize(a.nnsl)));
  }
  if (pooled.empty()) throw Error(ErrorKind::kUsage, "nnsl_stats needs at least one position");
  stats.pooled = summarize(std::move(pooled));
  return stats;
}

namespace {

void check_bound_params(const LowerBoundParams& params) {
  if (!(params.p > 0.0 && params.p <= 1.0)) {
    throw Error(ErrorKind::kUsage, "p must be in (0, 1]");
  }
  if (!(params.entropy_bits > 0.0)) throw Error(ErrorKind::kUsage, "entropy must be positive");
  if (!(params.corpus_size > 0.0)) throw Error(ErrorKind::kUsage, "corpus size must be positive");
}

}  // namespace

double lower_bound_value(const LowerBoundParams& params, std::uint64_t n) {
  check_bound_params(params);
  const double rate = std::log(params.p) - params.entropy_bits * std::log(2.0);
  const double log_mass = std::log(params.corpus_size) + static_cast<double>(n) * rate;
  return std::max(0.0, 1.0 - std::exp(log_mass));
}

std::vector<std::pair<std::uint64_t, double>> lower_bound_curve(const LowerBoundParams& params) {
  check_bound_params(params);
  std::vector<std::pair<std::uint64_t, double>> out;
  for (std::uint64_t n = params.n_min; n <= params.n_max; ++n) {
    out.emplace_back(n, lower_bound_value(params, n));
  }
  return out;
}

std::optional<std::uint64_t> first_n_reaching(const LowerBoundParams& params, double threshold) {
  check_bound_params(params);
  if (threshold > 1.0) return std::nullopt;
  if (threshold <= 0.0) return params.n_min;
  const double rate = std::log(params.p) - params.entropy_bits * std::log(2.0);
  // 1 - exp(ln|C| + n * rate) >= t  <=>  n >= (ln(1 - t) - ln|C|) / rate.
  double estimate = threshold >= 1.0 ? std::numeric_limits<double>::infinity()
                                     : (std::log1p(-threshold) - std::log(params.corpus_size)) / rate;
  if (!std::isfinite(estimate) || estimate > 1e15) return std::nullopt;
  std::uint64_t n = std::max<std::uint64_t>(
      params.n_min, estimate <= 1.0 ? 0 : static_cast<std::uint64_t>(estimate) - 1);
  // Settle floating-point edge cases against the exact evaluation.
  while (n > params.n_min && lower_bound_value(params, n - 1) >= threshold) --n;
  while (lower_bound_value(params, n) < threshold) ++n;
  return n;
}

std::string_view condition_name(TokenCondition c) {
  return c == TokenCondition::kInTrain ? "in_train" : "not_in_train";
}

std::vector<std::uint64_t> LossBinOptions::default_frequency_edges() {
  std::vector<std::uint64_t> edges;
  std::uint64_t e = 1;
  for (int i = 0; i <= 18; ++i, e *= 10) edges.push_back(e);
  return edges;
}

LossBinTable completion_loss_bins(std::span<const MatchAnnotations> annotations,
                                  std::span<const std::vector<double>> losses,
                                  const LossBinOptions& options) {
  if (options.max_n == 0) throw Error(ErrorKind::kUsage, "max_n must be at least 1");
  if (losses.size() != annotations.size()) {
    throw Error(ErrorKind::kValidation, "losses and annotations differ in document count");
  }
  const auto& edges = options.frequency_edges;
  if (edges.empty() || !std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw Error(ErrorKind::kUsage, "frequency edges must be non-empty and strictly ascending");
  }
  // bucket index: 0 = [0, edge_0), j + 1 = [edge_j, edge_{j+1}).
  auto bucket_of = [&](std::uint64_t freq) -> std::size_t {
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), freq) -
                                    edges.begin());
  };

  struct Acc {
    double sum = 0.0;
    std::uint64_t count = 0;
  };
  // Key: (n, condition, bucket + 1) with bucket slot 0 holding the summary.
  std::map<std::tuple<std::uint64_t, int, std::size_t>, Acc> acc;
  auto add = [&](std::uint64_t n, TokenCondition c, std::size_t slot, double v) {
    Acc& a = acc[{n, static_cast<int>(c), slot}];
    a.sum += v;
    ++a.count;
  };

  for (std::size_t d = 0; d < annotations.size(); ++d) {
    const auto& a = annotations[d];
    const auto& loss = losses[d];
    if (loss.size() != a.nnsl.size()) {
      throw Error(ErrorKind::kValidation, "document '" + a.doc_id + "': " +
                                              std::to_string(loss.size()) + " losses for " +
                                              std::to_string(a.nnsl.size()) + " positions");
    }
    for (std::size_t i = 0; i < a.nnsl.size(); ++i) {
      const std::uint64_t l = a.nnsl[i];
      const std::uint64_t prev = i == 0 ? 0 : a.nnsl[i - 1];
      auto frequency = [&](std::uint64_t n) -> std::uint64_t {
        if (n == l) return a.counts[i];
        if (i >= a.suffix_counts.size() || a.suffix_counts[i].size() < n) {
          throw Error(ErrorKind::kValidation,
                      "document '" + a.doc_id + "' lacks suffix counts at position " +
                          std::to_string(i) + "; query with a profile length >= max_n");
        }
        return a.suffix_counts[i][n - 1];
      };
      auto in_train = [&](std::uint64_t n) {
        add(n, TokenCondition::kInTrain, 0, loss[i]);
        add(n, TokenCondition::kInTrain, bucket_of(frequency(n)) + 1, loss[i]);
      };
      if (options.mode == ConditionMode::kPerN) {
        for (std::uint64_t n = 1; n <= std::min(l, options.max_n); ++n) in_train(n);
        for (std::uint64_t n = l + 1; n <= std::min(prev + 1, options.max_n); ++n) {
          add(n, TokenCondition::kNotInTrain, 0, loss[i]);
        }
      } else {
        if (l >= 1 && l <= options.max_n) in_train(l);
        if (l < prev + 1 && prev + 1 <= options.max_n) {
          add(prev + 1, TokenCondition::kNotInTrain, 0, loss[i]);
        }
      }
    }
  }

  LossBinTable table;
  for (const auto& [key, a] : acc) {
    const auto& [n, cond, slot] = key;
    LossBinRow row;
    row.n = n;
    row.condition = static_cast<TokenCondition>(cond);
    row.sum = a.sum;
    row.count = a.count;
    if (slot > 0) {
      const std::size_t b = slot - 1;
      row.bucketed = true;
      row.freq_lo = b == 0 ? 0 : edges[b - 1];
      row.freq_hi = b < edges.size() ? std::optional(edges[b]) : std::nullopt;
    }
    table.rows.push_back(row);
  }
  return table;
}

LossFile read_loss_jsonl(std::istream& in) {
  LossFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "losses line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kFormat, where + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::kFormat, where + "expected an object");
    if (j.contains("meta")) {
      if (j["meta"].contains("label") && j["meta"]["label"].is_string()) {
        file.value_label = j["meta"]["label"].get<std::string>();
      }
      continue;
    }
    if (!j.contains("id") || !j.contains("losses") || !j["losses"].is_array()) {
      throw Error(ErrorKind::kFormat, where + "expected {\"id\", \"losses\": [...]}");
    }
    const std::string id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    std::vector<double> values;
    for (const auto& v : j["losses"]) {
      if (!v.is_number()) throw Error(ErrorKind::kFormat, where + "losses must be numbers");
      values.push_back(v.get<double>());
    }
    file.losses[id] = std::move(values);
  }
  return file;
}

std::vector<std::vector<double>> align_losses(const LossFile& file,
                                              std::span<const MatchAnnotations> annotations) {
  std::vector<std::vector<double>> out;
  out.reserve(annotations.size());
  for (const auto& a : annotations) {
    const auto it = file.losses.find(a.doc_id);
    if (it == file.losses.end()) {
      throw Error(ErrorKind::kValidation, "no losses for document '" + a.doc_id + "'");
    }
    if (it->second.size() != a.nnsl.size()) {
      throw Error(ErrorKind::kValidation, "document '" + a.doc_id + "': misaligned lengths (" +
                                              std::to_string(it->second.size()) + " losses, " +
                                              std::to_string(a.nnsl.size()) + " tokens)");
    }
    out.push_back(it->second);
  }
  return out;
}

void write_novelty_csv(std::ostream& out, const NoveltyCurve& curve) {
  out << "n,novel,total,ratio\n";
  for (const auto& r : curve.rows) {
    out << r.n << ',' << r.novel << ',' << r.total << ',' << std::setprecision(6) << r.ratio()
        << '\n';
  }
}

namespace {

nlohmann::json curve_json(const NoveltyCurve& curve) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : curve.rows) {
    rows.push_back({{"n", r.n}, {"novel", r.novel}, {"total", r.total}, {"ratio", r.ratio()}});
  }
  return rows;
}

}  // namespace

void write_novelty_json(std::ostream& out, const NoveltyCurve& curve,
                        const std::vector<NoveltyCurve>* per_document) {
  nlohmann::json j;
  j["curve"] = curve_json(curve);
  if (per_document != nullptr) {
    j["per_document"] = nlohmann::json::array();
    for (const auto& c : *per_document) j["per_document"].push_back(curve_json(c));
  }
  out << j.dump(2) << '\n';
}

void write_loss_bins_csv(std::ostream& out, const LossBinTable& table) {
  out << "n,condition,freq_lo,freq_hi," << table.value_label << ",count\n";
  for (const auto& r : table.rows) {
    out << r.n << ',' << condition_name(r.condition) << ',';
    if (r.bucketed) {
      out << *r.freq_lo << ',';
      if (r.freq_hi) {
        out << *r.freq_hi;
      } else {
        out << "inf";
      }
    } else {
      out << ',';
    }
    out << ',' << std::setprecision(8) << r.mean() << ',' << r.count << '\n';
  }
}

void write_loss_bins_json(std::ostream& out, const LossBinTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    nlohmann::json row = {{"n", r.n},
                          {"condition", condition_name(r.condition)},
                          {"mean", r.mean()},
                          {"count", r.count}};
    if (r.bucketed) {
      row["freq_lo"] = *r.freq_lo;
      row["freq_hi"] = r.freq_hi ? nlohmann::json(*r.freq_hi) : nlohmann::json(nullptr);
    }
    rows.push_back(std::move(row));
  }
  out << nlohmann::json{{"value_label", table.value_label}, {"rows", rows}}.dump(2) << '\n';
}

}  // namespace cdawgscan
