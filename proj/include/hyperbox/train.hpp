#pragma once

// Training: expand (query, gold) files into positive pairs, corrupt the
// hypernym slot with uniformly sampled negatives, optimize the negative
// sampling loss with Adam, and keep the parameters of the best validation
// epoch. Identical (config, data, seed) reproduces bit-identical parameters
// on the same platform; the pretrained embeddings are never modified.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hyperbox/adam.hpp"
#include "hyperbox/data_io.hpp"
#include "hyperbox/discovery.hpp"
#include "hyperbox/metrics.hpp"
#include "hyperbox/model.hpp"

namespace hyperbox {

struct TrainConfig {
  int dim_d = 300;
  double learning_rate = 0.001;
  int negatives_k = 100;
  double margin_gamma = 2.0;
  int epochs = 100;
  int batch_size = 128;
  std::uint64_t seed = 42;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const {
    if (dim_d <= 0) throw std::invalid_argument("dim_d must be positive");
    if (learning_rate <= 0) throw std::invalid_argument("learning_rate must be positive");
    if (negatives_k <= 0) throw std::invalid_argument("negatives_k must be positive");
    if (margin_gamma <= 0) throw std::invalid_argument("margin_gamma must be positive");
    if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    if (adam_beta1 <= 0 || adam_beta1 >= 1) throw std::invalid_argument("adam_beta1 must be in (0,1)");
    if (adam_beta2 <= 0 || adam_beta2 >= 1) throw std::invalid_argument("adam_beta2 must be in (0,1)");
    if (adam_epsilon <= 0) throw std::invalid_argument("adam_epsilon must be positive");
  }
};

struct TrainingPair {
  int hyponym;   // vocab id of the query term
  int hypernym;  // vocab id of the gold hypernym
};

// ---------------------------------------------------------------------------
// Gold expansion
// ---------------------------------------------------------------------------

struct ExpandedPairs {
  std::vector<TrainingPair> pairs;
  // Full resolved gold set per query id; negative sampling must exclude all
  // of a query's gold hypernyms, not just the pair's.
  std::unordered_map<int, std::unordered_set<int>> gold_by_query;
  int dropped_pairs = 0;      // hyponym or hypernym without an embedding
  int empty_gold_lines = 0;
};

// One pair per (query, gold hypernym) combination. Terms resolve through
// vocab/phrase_embedding; unresolvable pairs are dropped and counted.
inline ExpandedPairs expand_gold(const QuerySet& queries,
                                 const GoldStandard& gold, TermVocab& vocab,
                                 const EmbeddingTable& table,
                                 std::ostream* warn = nullptr) {
  if (queries.size() != gold.size()) {
    throw ParseError("query/gold files are misaligned: " +
                     std::to_string(queries.size()) + " queries vs " +
                     std::to_string(gold.size()) + " gold lines");
  }
  ExpandedPairs out;
  for (size_t line = 0; line < queries.size(); ++line) {
    const auto& query = queries.queries[line];
    const auto& hypernyms = gold.gold[line];
    if (hypernyms.empty()) {
      ++out.empty_gold_lines;
      if (warn) {
        *warn << "warning: line " << (line + 1) << ": query '" << query.term
              << "' has no gold hypernyms\n";
      }
      continue;
    }
    const int query_id = vocab.add(query.term, table);
    if (query_id < 0) {
      out.dropped_pairs += static_cast<int>(hypernyms.size());
      continue;
    }
    auto& gold_ids = out.gold_by_query[query_id];
    for (const auto& hypernym : hypernyms) {
      const int hyper_id = vocab.add(hypernym, table);
      if (hyper_id < 0) {
        ++out.dropped_pairs;
        continue;
      }
      out.pairs.push_back({query_id, hyper_id});
      gold_ids.insert(hyper_id);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Negative sampling
// ---------------------------------------------------------------------------

// k ids drawn uniformly with replacement from candidates minus the query's
// gold set. Only the hypernym slot is corrupted; the query term stays fixed.
inline std::vector<int> sample_negatives(
    int k, const std::vector<int>& candidates,
    const std::unordered_set<int>& gold_set, std::mt19937_64& rng) {
  if (candidates.empty()) {
    throw std::runtime_error("sample_negatives: empty candidate list");
  }
  if (candidates.size() <= gold_set.size()) {
    bool any_usable = false;
    for (int id : candidates) {
      if (!gold_set.count(id)) {
        any_usable = true;
        break;
      }
    }
    if (!any_usable) {
      throw std::runtime_error(
          "sample_negatives: every candidate is a gold hypernym of the query");
    }
  }
  std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
  std::vector<int> negatives;
  negatives.reserve(k);
  while (static_cast<int>(negatives.size()) < k) {
    const int id = candidates[pick(rng)];
    if (!gold_set.count(id)) negatives.push_back(id);
  }
  return negatives;
}

// ---------------------------------------------------------------------------
// Negative sampling loss
// ---------------------------------------------------------------------------

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log sigma(x) = -log(1 + e^-x), rewritten so neither branch overflows.
inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

// L = -log s(gamma - pos) - (1/k) sum_i log s(neg_i - gamma)
inline double nsa_loss(double pos_score, const std::vector<double>& neg_scores,
                       double gamma) {
  if (neg_scores.empty()) {
    throw std::invalid_argument("nsa_loss: need at least one negative score");
  }
  double loss = -log_sigmoid(gamma - pos_score);
  double neg_term = 0.0;
  for (double s : neg_scores) neg_term += log_sigmoid(s - gamma);
  loss -= neg_term / static_cast<double>(neg_scores.size());
  return loss;
}

// Loss of one positive pair with fixed negatives, accumulating
// weight * d(loss)/d(params) into grads. Loss derivatives w.r.t. scores:
//   d/d pos    = sigma(pos - gamma)
//   d/d neg_i  = -(1/k) sigma(gamma - neg_i)
inline double pair_loss_backward(const TermVocab& vocab,
                                 const TrainingPair& pair,
                                 const std::vector<int>& negative_ids,
                                 double gamma, const ModelParams& params,
                                 double weight, ModelGrads& grads) {
  const Vec& e_query = vocab.vectors[pair.hyponym];

  const double pos = score_pair(e_query, vocab.vectors[pair.hypernym], params);
  std::vector<double> negs(negative_ids.size());
  for (size_t i = 0; i < negative_ids.size(); ++i) {
    negs[i] = score_pair(e_query, vocab.vectors[negative_ids[i]], params);
  }
  const double loss = nsa_loss(pos, negs, gamma);

  score_pair_backward(e_query, vocab.vectors[pair.hypernym], params,
                      weight * sigmoid(pos - gamma), grads);
  const double k = static_cast<double>(negative_ids.size());
  for (size_t i = 0; i < negative_ids.size(); ++i) {
    score_pair_backward(e_query, vocab.vectors[negative_ids[i]], params,
                        -weight * sigmoid(gamma - negs[i]) / k, grads);
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationQuery {
  std::string term;
  std::optional<Vec> embedding;  // absent = OOV, scores 0
  std::unordered_set<std::string> gold;
};

inline std::vector<ValidationQuery> make_validation_set(
    const QuerySet& queries, const GoldStandard& gold,
    const EmbeddingTable& table) {
  if (queries.size() != gold.size()) {
    throw ParseError("validation query/gold files are misaligned: " +
                     std::to_string(queries.size()) + " queries vs " +
                     std::to_string(gold.size()) + " gold lines");
  }
  std::vector<ValidationQuery> out;
  out.reserve(queries.size());
  for (size_t i = 0; i < queries.size(); ++i) {
    ValidationQuery vq;
    vq.term = queries.queries[i].term;
    vq.embedding = phrase_embedding(vq.term, table);
    vq.gold.insert(gold.gold[i].begin(), gold.gold[i].end());
    out.push_back(std::move(vq));
  }
  return out;
}

// MRR of top-15 rankings over the candidate vocabulary. Empty-gold queries
// are skipped; OOV queries count as zero.
inline double validation_mrr(const ModelParams& params, const TermVocab& vocab,
                             const std::vector<int>& candidates,
                             const std::vector<ValidationQuery>& validation) {
  const ProjectedVocab projected = project_vocab(vocab, params);
  double sum = 0.0;
  int counted = 0;
  for (const auto& vq : validation) {
    if (vq.gold.empty()) continue;
    ++counted;
    if (!vq.embedding) continue;
    auto scored = score_candidates(*vq.embedding, vq.term, vocab, candidates,
                                   params, &projected);
    const RankedPrediction pred =
        top_k(vq.term, std::move(scored), kRankCutoff);
    std::vector<std::string> terms;
    terms.reserve(pred.ranked.size());
    for (const auto& st : pred.ranked) terms.push_back(st.term);
    sum += reciprocal_rank(terms, vq.gold);
  }
  return counted > 0 ? sum / counted : 0.0;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpochLog {
  int epoch;
  double mean_loss;
  double validation_mrr;
};

struct TrainResult {
  ModelParams params;       // best-validation epoch (final epoch if no validation)
  std::vector<EpochLog> log;
  int best_epoch = 0;       // 0 = initialization
  double best_mrr = 0.0;
};

// Projection entries uniform in +-sqrt(6/(d+m)), corners uniform in
// [-0.5, 0.5]. Draw order is fixed; init consumes the rng before training.
inline ModelParams init_params(int d, int m, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(d + m));
  std::uniform_real_distribution<double> phi_dist(-bound, bound);
  std::uniform_real_distribution<double> corner_dist(-0.5, 0.5);

  ModelParams params;
  params.phi_base = Mat(d, m);
  params.phi_bump = Mat(d, m);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < m; ++c) params.phi_base(r, c) = phi_dist(rng);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < m; ++c) params.phi_bump(r, c) = phi_dist(rng);

  auto draw_corner = [&](Vec& v) {
    v = Vec(d);
    for (int j = 0; j < d; ++j) v[j] = corner_dist(rng);
  };
  draw_corner(params.head_box.corner_p);
  draw_corner(params.head_box.corner_q);
  draw_corner(params.tail_box.corner_p);
  draw_corner(params.tail_box.corner_q);
  return params;
}

// Epoch loop: seeded shuffle, one Adam step per mini-batch on the mean pair
// loss, per-epoch validation MRR, best-epoch model selection. The log_stream
// (when given) receives one tab-separated line per epoch:
// epoch, mean train loss, validation MRR.
inline TrainResult train(const TrainConfig& cfg, const TermVocab& vocab,
                         const std::vector<TrainingPair>& pairs,
                         const std::unordered_map<int, std::unordered_set<int>>& gold_by_query,
                         const std::vector<int>& candidates,
                         const std::vector<ValidationQuery>& validation,
                         std::ostream* log_stream = nullptr,
                         std::ostream* progress = nullptr) {
  cfg.validate();
  if (pairs.empty()) {
    throw std::invalid_argument("train: no training pairs");
  }
  const int m = static_cast<int>(vocab.vectors.front().size());

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  result.params = init_params(cfg.dim_d, m, rng);

  const bool has_validation =
      std::any_of(validation.begin(), validation.end(),
                  [](const ValidationQuery& q) { return !q.gold.empty(); });
  ModelParams best = result.params;
  double best_mrr = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  ModelGrads grads = zeros_like(result.params);
  AdamState adam = make_adam_state(result.params);
  const AdamConfig adam_cfg{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                            cfg.adam_epsilon};

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;

    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t stop =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      const double batch_n = static_cast<double>(stop - start);
      const size_t batch_index = start / static_cast<size_t>(cfg.batch_size);

      set_zero(grads);
      double batch_loss = 0.0;
      for (size_t i = start; i < stop; ++i) {
        const TrainingPair& pair = pairs[order[i]];
        const auto negatives = sample_negatives(
            cfg.negatives_k, candidates, gold_by_query.at(pair.hyponym), rng);
        batch_loss +=
            pair_loss_backward(vocab, pair, negatives, cfg.margin_gamma,
                               result.params, 1.0 / batch_n, grads);
      }

      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) +
            ", batch " + std::to_string(batch_index));
      }
      if (const std::string block = first_non_finite_block(grads);
          !block.empty()) {
        throw std::runtime_error(
            "train: non-finite gradient in " + block + " at epoch " +
            std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      }
      adam_step(result.params, grads, adam, adam_cfg);
      loss_sum += batch_loss;
    }

    const double mean_loss = loss_sum / static_cast<double>(pairs.size());
    const double val_mrr =
        validation_mrr(result.params, vocab, candidates, validation);
    result.log.push_back({epoch, mean_loss, val_mrr});
    if (log_stream) {
      (*log_stream) << epoch << '\t' << mean_loss << '\t' << val_mrr << '\n';
    }
    if (progress) {
      (*progress) << "epoch " << epoch << "/" << cfg.epochs << "  loss "
                  << mean_loss << "  val_mrr " << val_mrr << '\n';
    }

    if (!has_validation || val_mrr > best_mrr) {
      best = result.params;
      best_mrr = val_mrr;
      best_epoch = epoch;
    }
  }

  result.params = std::move(best);
  result.best_epoch = best_epoch;
  result.best_mrr = has_validation && best_epoch > 0 ? best_mrr : 0.0;
  return result;
}

}  // namespace hyperbox
