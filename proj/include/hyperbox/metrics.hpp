#pragma once

// Ranking metrics over prediction lists vs. gold hypernym sets: MRR, MAP and
// P@k, evaluated over the top 15 (at most) predictions per query. Metrics
// are stored in [0,1] and displayed x100 with two decimals.

#include <cstdio>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "hyperbox/data_io.hpp"

namespace hyperbox {

inline constexpr int kRankCutoff = 15;
inline constexpr int kPrecisionCutoffs[] = {1, 3, 5, 15};

struct EvalReport {
  double mrr = 0.0;
  double map = 0.0;
  std::map<int, double> p_at;  // keys 1, 3, 5, 15
  int num_queries = 0;         // queries with non-empty gold
  int skipped_empty_gold = 0;
};

// A repeated prediction of an already-hit gold term counts as a false
// positive, not a second hit; this keeps every metric inside [0,1].

inline double reciprocal_rank(const std::vector<std::string>& predictions,
                              const std::unordered_set<std::string>& gold) {
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (gold.count(predictions[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

// AP normalized by min(|gold|, cutoff): the best achievable hit count for a
// truncated list, so a perfect truncated list scores 1. Kept in one place so
// the normalization can be swapped if a different convention is needed.
inline double average_precision(const std::vector<std::string>& predictions,
                                const std::unordered_set<std::string>& gold) {
  if (gold.empty()) return 0.0;
  std::unordered_set<std::string> hit;
  double sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (gold.count(predictions[i]) && hit.insert(predictions[i]).second) {
      sum += static_cast<double>(hit.size()) / static_cast<double>(i + 1);
    }
  }
  const size_t denom = std::min(gold.size(), size_t(kRankCutoff));
  return sum / static_cast<double>(denom);
}

inline double precision_at_k(const std::vector<std::string>& predictions,
                             const std::unordered_set<std::string>& gold,
                             int k) {
  if (k < 1) throw std::invalid_argument("precision_at_k: k must be >= 1");
  std::unordered_set<std::string> hit;
  const size_t limit = std::min(predictions.size(), size_t(k));
  for (size_t i = 0; i < limit; ++i) {
    if (gold.count(predictions[i])) hit.insert(predictions[i]);
  }
  return static_cast<double>(hit.size()) / static_cast<double>(k);
}

// Shared core over already-parsed per-query term lists. Queries with empty
// gold are skipped (counted); empty prediction lists simply score zero.
inline EvalReport evaluate_lists(
    const std::vector<std::vector<std::string>>& predictions,
    const std::vector<std::vector<std::string>>& gold) {
  if (predictions.size() != gold.size()) {
    throw ParseError("prediction/gold line count mismatch: " +
                     std::to_string(predictions.size()) + " vs " +
                     std::to_string(gold.size()));
  }
  EvalReport report;
  for (int k : kPrecisionCutoffs) report.p_at[k] = 0.0;

  for (size_t q = 0; q < gold.size(); ++q) {
    const std::unordered_set<std::string> gold_set(gold[q].begin(),
                                                   gold[q].end());
    if (gold_set.empty()) {
      ++report.skipped_empty_gold;
      continue;
    }
    std::vector<std::string> preds = predictions[q];
    if (preds.size() > size_t(kRankCutoff)) preds.resize(kRankCutoff);

    report.mrr += reciprocal_rank(preds, gold_set);
    report.map += average_precision(preds, gold_set);
    for (int k : kPrecisionCutoffs) {
      report.p_at[k] += precision_at_k(preds, gold_set, k);
    }
    ++report.num_queries;
  }

  if (report.num_queries > 0) {
    const double n = report.num_queries;
    report.mrr /= n;
    report.map /= n;
    for (int k : kPrecisionCutoffs) report.p_at[k] /= n;
  }
  return report;
}

inline EvalReport evaluate(const std::string& prediction_path,
                           const std::string& gold_path) {
  std::vector<std::vector<std::string>> predictions;
  for (const auto& line : read_lines(prediction_path)) {
    std::vector<std::string> terms;
    for (const auto& field : split(line, '\t')) {
      const std::string term = to_lower(trim(field));
      if (!term.empty()) terms.push_back(term);
    }
    predictions.push_back(std::move(terms));
  }
  const GoldStandard gs = parse_gold(gold_path);
  return evaluate_lists(predictions, gs.gold);
}

// "MRR MAP P@1 P@3 P@5 P@15", x100 with two decimals, tab-separated.
inline std::string format_metrics_line(const EvalReport& report) {
  char buf[32];
  std::string out;
  auto append = [&](double value) {
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * value);
    if (!out.empty()) out += '\t';
    out += buf;
  };
  append(report.mrr);
  append(report.map);
  for (int k : kPrecisionCutoffs) append(report.p_at.at(k));
  return out;
}

}  // namespace hyperbox
