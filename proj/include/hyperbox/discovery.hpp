#pragma once

// Candidate ranking: score every candidate hypernym against a query term and
// keep the top k (lowest score first). Model parameters are read-only here,
// so ranking many queries concurrently is safe.

#include <algorithm>
#include <ostream>
#include <string>
#include <vector>

#include "hyperbox/data_io.hpp"
#include "hyperbox/model.hpp"

namespace hyperbox {

struct ScoredTerm {
  std::string term;
  double score;
};

struct RankedPrediction {
  std::string query;
  std::vector<ScoredTerm> ranked;  // ascending score, ties by term
};

// Candidate base/bump points under a fixed model. Projecting the candidate
// vocabulary once turns per-pair scoring into O(d) instead of O(d*m), which
// is what makes full-vocabulary ranking affordable.
struct ProjectedVocab {
  std::vector<Vec> base;
  std::vector<Vec> bump;
};

inline ProjectedVocab project_vocab(const TermVocab& vocab,
                                    const ModelParams& params) {
  ProjectedVocab pv;
  pv.base.reserve(vocab.size());
  pv.bump.reserve(vocab.size());
  for (const Vec& e : vocab.vectors) {
    pv.base.push_back(project(params.phi_base, e));
    pv.bump.push_back(project(params.phi_bump, e));
  }
  return pv;
}

// Scores of score_pair(query, candidate) for every candidate, excluding the
// query term itself when it appears among the candidates.
inline std::vector<ScoredTerm> score_candidates(
    const Vec& query_embedding, const std::string& query_term,
    const TermVocab& vocab, const std::vector<int>& candidate_ids,
    const ModelParams& params, const ProjectedVocab* projected = nullptr) {
  const BoxGeometry head_geom = box_geometry(params.head_box);
  const BoxGeometry tail_geom = box_geometry(params.tail_box);
  const Vec query_base = project(params.phi_base, query_embedding);
  const Vec query_bump = project(params.phi_bump, query_embedding);

  std::vector<ScoredTerm> scored;
  scored.reserve(candidate_ids.size());
  for (int id : candidate_ids) {
    if (vocab.terms[id] == query_term) continue;
    Vec cand_base, cand_bump;
    if (projected) {
      cand_base = projected->base[id];
      cand_bump = projected->bump[id];
    } else {
      cand_base = project(params.phi_base, vocab.vectors[id]);
      cand_bump = project(params.phi_bump, vocab.vectors[id]);
    }
    const double score =
        box_distance(query_base + cand_bump, head_geom).norm() +
        box_distance(cand_base + query_bump, tail_geom).norm();
    scored.push_back({vocab.terms[id], score});
  }
  return scored;
}

// Ascending by score, ties broken by lexicographic term order, truncated to
// k entries.
inline RankedPrediction top_k(std::string query_term,
                              std::vector<ScoredTerm> scored, int k = 15) {
  auto better = [](const ScoredTerm& a, const ScoredTerm& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.term < b.term;
  };
  const size_t keep = std::min(scored.size(), size_t(std::max(k, 0)));
  std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                    better);
  scored.resize(keep);
  return RankedPrediction{std::move(query_term), std::move(scored)};
}

// SemEval submission format: one line per query in input order, hypernym
// terms tab-separated in rank order. Queries with no ranking produce an
// empty line so the file stays line-aligned with the query file.
inline void write_predictions(std::ostream& out,
                              const std::vector<RankedPrediction>& preds) {
  for (const auto& p : preds) {
    for (size_t i = 0; i < p.ranked.size(); ++i) {
      if (i > 0) out << '\t';
      out << p.ranked[i].term;
    }
    out << '\n';
  }
}

}  // namespace hyperbox
