// Acceptance suite: runs every release criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any criterion fails.
//
// Usage: acceptance <path-to-hyperbox-cli>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "hyperbox/data_io.hpp"
#include "hyperbox/discovery.hpp"
#include "hyperbox/metrics.hpp"
#include "hyperbox/model.hpp"
#include "hyperbox/train.hpp"
#include "test_support.hpp"

using namespace hyperbox;
namespace ts = testsupport;

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

int g_failures = 0;

void report(int id, const std::string& name, bool ok,
            const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ". " << name;
  if (!detail.empty()) std::cout << " — " << detail;
  std::cout << std::endl;
  if (!ok) ++g_failures;
}

void run(int id, const std::string& name,
         const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [ok, detail] = body();
    report(id, name, ok, detail);
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

int run_cli(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status < 0) return -1;
  return WEXITSTATUS(status);
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// Shared taxonomy fixture on disk for the CLI-level criteria.
struct CliFixture {
  ts::TempDir dir{"hyperbox-acceptance"};
  std::string embeddings, queries, gold, candidates;

  CliFixture() {
    const ts::Taxonomy tax = ts::make_taxonomy(2, 3);  // 13 nodes
    std::mt19937_64 rng(2024);
    std::vector<Vec> vectors;
    for (size_t i = 0; i < tax.names.size(); ++i) {
      vectors.push_back(ts::random_vec(6, rng));
    }
    embeddings = dir.file("embeddings.txt");
    queries = dir.file("queries.txt");
    gold = dir.file("gold.txt");
    candidates = dir.file("candidates.txt");
    ts::write_embedding_file(embeddings, tax.names, vectors);
    ts::write_term_list_file(candidates, tax.names);

    std::vector<std::string> query_terms;
    std::vector<std::vector<std::string>> gold_rows;
    for (size_t node = 0; node < tax.names.size(); ++node) {
      if (tax.ancestors[node].empty()) continue;
      query_terms.push_back(tax.names[node]);
      std::vector<std::string> row;
      for (int a : tax.ancestors[node]) row.push_back(tax.names[a]);
      gold_rows.push_back(row);
    }
    ts::write_query_file(queries, query_terms);
    ts::write_gold_file(gold, gold_rows);
  }
};

std::pair<bool, std::string> distance_continuity() {
  Stopwatch timer;
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> corner(-3.0, 3.0);
  const int dims = 4;
  double worst = 0.0;
  for (int box_i = 0; box_i < 1000; ++box_i) {
    Vec p(dims), q(dims);
    for (int j = 0; j < dims; ++j) {
      p[j] = corner(rng);
      q[j] = corner(rng);
    }
    const BoxGeometry g = box_geometry(BoxParams{p, q});
    for (int j = 0; j < dims; ++j) {
      for (const double x : {g.lower[j], g.upper[j]}) {
        const double a = std::abs(x - g.center[j]);
        const double inside = a / g.width[j];
        const double outside = a * g.width[j] - box_kappa(g.width[j]);
        worst = std::max(worst, std::abs(inside - outside));
      }
    }
  }
  const double elapsed = timer.seconds();
  const bool ok = worst < 1e-9 && elapsed < 1.0;
  return {ok, "max branch gap " + fmt(worst) + " over 1000 boxes, " +
                  fmt(elapsed) + " s (< 1 s)"};
}

std::pair<bool, std::string> gradient_correctness() {
  Stopwatch timer;
  const double tol = 1e-4;
  // exclusion window wider than the FD step so central differences never
  // straddle a branch boundary; every instance within 1e-6 of a kink is
  // excluded a fortiori
  const double kink_tol = 1e-4;

  std::mt19937_64 rng(2002);
  double worst_score = 0.0;
  int checked = 0;
  while (checked < 100) {
    const auto inst = ts::random_instance(3, 3, rng);
    if (ts::near_gradient_kink(inst.params, inst.e_i, inst.e_j, kink_tol)) {
      continue;
    }
    const ModelGrads analytic =
        score_gradient(inst.e_i, inst.e_j, inst.params);
    const ModelGrads numeric = ts::numeric_gradient(
        inst.params,
        [&](const ModelParams& p) { return score_pair(inst.e_i, inst.e_j, p); });
    worst_score =
        std::max(worst_score, ts::max_gradient_discrepancy(analytic, numeric));
    ++checked;
  }

  // full negative-sampling loss through score_pair: 2 pairs, k = 2
  std::vector<std::string> names = {"q1", "q2", "h1", "h2", "x1", "x2"};
  std::vector<Vec> vectors;
  for (size_t i = 0; i < names.size(); ++i) {
    vectors.push_back(ts::random_vec(3, rng));
  }
  const TermVocab vocab = ts::make_vocab(names, vectors);
  const std::vector<TrainingPair> pairs = {{0, 2}, {1, 3}};
  const std::vector<std::vector<int>> negatives = {{4, 5}, {5, 4}};
  const double gamma = 2.0;

  auto total_loss = [&](const ModelParams& p) {
    double sum = 0.0;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const Vec& eq = vocab.vectors[pairs[i].hyponym];
      const double pos = score_pair(eq, vocab.vectors[pairs[i].hypernym], p);
      std::vector<double> negs;
      for (int id : negatives[i]) {
        negs.push_back(score_pair(eq, vocab.vectors[id], p));
      }
      sum += nsa_loss(pos, negs, gamma);
    }
    return sum / static_cast<double>(pairs.size());
  };

  double worst_loss = 0.0;
  checked = 0;
  while (checked < 100) {
    const ModelParams params = ts::random_params(3, 3, rng);
    bool kinked = false;
    for (size_t i = 0; i < pairs.size() && !kinked; ++i) {
      const Vec& eq = vocab.vectors[pairs[i].hyponym];
      kinked = ts::near_gradient_kink(params, eq,
                                      vocab.vectors[pairs[i].hypernym], kink_tol);
      for (int id : negatives[i]) {
        kinked = kinked ||
                 ts::near_gradient_kink(params, eq, vocab.vectors[id], kink_tol);
      }
    }
    if (kinked) continue;

    ModelGrads analytic = zeros_like(params);
    for (size_t i = 0; i < pairs.size(); ++i) {
      pair_loss_backward(vocab, pairs[i], negatives[i], gamma, params,
                         1.0 / static_cast<double>(pairs.size()), analytic);
    }
    const ModelGrads numeric = ts::numeric_gradient(params, total_loss);
    worst_loss =
        std::max(worst_loss, ts::max_gradient_discrepancy(analytic, numeric));
    ++checked;
  }

  const double elapsed = timer.seconds();
  const bool ok = worst_score < tol && worst_loss < tol && elapsed < 5.0;
  return {ok, "max rel err: score " + fmt(worst_score) + ", loss " +
                  fmt(worst_loss) + " over 100+100 kink-free instances, " +
                  fmt(elapsed) + " s (< 5 s)"};
}

std::pair<bool, std::string> metric_oracle_equivalence() {
  // hand-computed fixtures first (AP compared with a rounding allowance:
  // (1 + 2/3)/2 and 5/6 differ by one ulp)
  if (reciprocal_rank({"x", "a"}, {"a"}) != 0.5) {
    return {false, "RR fixture (first hit at rank 2) broke"};
  }
  if (std::abs(average_precision({"a", "x", "b"}, {"a", "b"}) - 5.0 / 6.0) >
      1e-12) {
    return {false, "AP fixture (gold {a,b} vs [a,x,b]) broke"};
  }
  if (precision_at_k({"a", "x", "c", "y", "z"}, {"a", "b", "c"}, 5) != 0.4) {
    return {false, "P@5 fixture (2 hits in 5) broke"};
  }

  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<int> term(0, 11);
  std::uniform_int_distribution<int> gold_len(0, 6);
  std::uniform_int_distribution<int> pred_len(0, 20);

  std::vector<std::vector<std::string>> preds, gold;
  for (int q = 0; q < 50; ++q) {
    std::vector<std::string> g, p;
    for (int i = gold_len(rng); i > 0; --i) g.push_back("t" + std::to_string(term(rng)));
    for (int i = pred_len(rng); i > 0; --i) p.push_back("t" + std::to_string(term(rng)));
    gold.push_back(g);
    preds.push_back(p);
  }

  const EvalReport lib = evaluate_lists(preds, gold);
  const EvalReport oracle = ts::oracle_report(preds, gold);
  const bool ok = lib.mrr == oracle.mrr && lib.map == oracle.map &&
                  lib.p_at.at(1) == oracle.p_at.at(1) &&
                  lib.p_at.at(3) == oracle.p_at.at(3) &&
                  lib.p_at.at(5) == oracle.p_at.at(5) &&
                  lib.p_at.at(15) == oracle.p_at.at(15) &&
                  lib.num_queries == oracle.num_queries;
  return {ok, "50 random query sets match the brute-force scorer exactly "
              "(MRR " + fmt(lib.mrr) + ", MAP " + fmt(lib.map) + ")"};
}

std::pair<bool, std::string> synthetic_taxonomy_learning() {
  Stopwatch timer;
  const ts::Taxonomy tax = ts::make_taxonomy(3, 4);  // 85 nodes
  std::mt19937_64 rng(4004);
  std::vector<Vec> vectors;
  for (size_t i = 0; i < tax.names.size(); ++i) {
    vectors.push_back(ts::random_vec(20, rng));
  }
  const TermVocab vocab = ts::make_vocab(tax.names, vectors);

  std::vector<TrainingPair> pairs;
  std::unordered_map<int, std::unordered_set<int>> gold_by_query;
  for (const auto& [node, anc] : ts::taxonomy_positive_pairs(tax)) {
    pairs.push_back({node, anc});
    gold_by_query[node].insert(anc);
  }
  std::vector<int> candidates(tax.names.size());
  for (size_t i = 0; i < candidates.size(); ++i) candidates[i] = int(i);

  // training-set MRR: validate on the training queries themselves
  std::vector<ValidationQuery> validation;
  for (size_t node = 0; node < tax.names.size(); ++node) {
    if (tax.ancestors[node].empty()) continue;
    ValidationQuery vq;
    vq.term = tax.names[node];
    vq.embedding = vocab.vectors[node];
    for (int a : tax.ancestors[node]) vq.gold.insert(tax.names[a]);
    validation.push_back(std::move(vq));
  }

  TrainConfig cfg;
  cfg.dim_d = 16;
  cfg.learning_rate = 0.001;
  cfg.negatives_k = 20;
  cfg.margin_gamma = 2.0;
  cfg.epochs = 300;
  cfg.batch_size = 8;
  cfg.seed = 13;

  const TrainResult result = train(cfg, vocab, pairs, gold_by_query,
                                   candidates, validation);
  const double elapsed = timer.seconds();

  const double baseline = 1.0 / static_cast<double>(candidates.size() - 1);
  const bool ok = result.best_mrr >= 0.90 &&
                  result.best_mrr >= 10.0 * baseline && elapsed < 60.0;
  return {ok, "85-node tree: training MRR " + fmt(result.best_mrr) +
                  " at epoch " + std::to_string(result.best_epoch) +
                  " (>= 0.90 and >= 10x random " + fmt(baseline) + "), " +
                  fmt(elapsed) + " s (< 60 s)"};
}

std::pair<bool, std::string> antisymmetry_fit() {
  Stopwatch timer;
  std::mt19937_64 rng(5005);
  std::vector<Vec> vectors = {ts::random_vec(4, rng), ts::random_vec(4, rng)};
  const TermVocab vocab = ts::make_vocab({"a", "b"}, vectors);

  const std::vector<TrainingPair> pairs = {{0, 1}};
  std::unordered_map<int, std::unordered_set<int>> gold_by_query;
  gold_by_query[0] = {1};
  const std::vector<int> candidates = {0, 1};

  TrainConfig cfg;
  cfg.dim_d = 4;
  cfg.learning_rate = 0.05;
  cfg.negatives_k = 2;
  cfg.margin_gamma = 2.0;
  cfg.epochs = 120;
  cfg.batch_size = 8;
  cfg.seed = 13;

  const TrainResult result =
      train(cfg, vocab, pairs, gold_by_query, candidates, {});
  const double forward =
      score_pair(vocab.vectors[0], vocab.vectors[1], result.params);
  const double backward =
      score_pair(vocab.vectors[1], vocab.vectors[0], result.params);
  const double elapsed = timer.seconds();
  const bool ok = forward < backward && elapsed < 5.0;
  return {ok, "score(a,b) " + fmt(forward) + " < score(b,a) " + fmt(backward) +
                  ", " + fmt(elapsed) + " s (< 5 s)"};
}

std::pair<bool, std::string> cli_determinism(const std::string& cli,
                                             const CliFixture& fx) {
  const std::string train_flags =
      " train --embeddings " + fx.embeddings + " --queries " + fx.queries +
      " --gold " + fx.gold + " --candidates " + fx.candidates +
      " --valid-queries " + fx.queries + " --valid-gold " + fx.gold +
      " --dim 8 --negatives 5 --epochs 5 --batch-size 8 --lr 0.01 --seed 99";
  const std::string m1 = fx.dir.file("det1.bin");
  const std::string m2 = fx.dir.file("det2.bin");
  const std::string sink = " 2> " + fx.dir.file("stderr.txt");

  if (run_cli(cli + train_flags + " --out " + m1 + sink) != 0) {
    return {false, "first training run failed"};
  }
  if (run_cli(cli + train_flags + " --out " + m2 + sink) != 0) {
    return {false, "second training run failed"};
  }
  const std::string model_a = read_bytes(m1), model_b = read_bytes(m2);
  if (model_a.empty() || model_a != model_b) {
    return {false, "model files differ between identical runs"};
  }

  const std::string p1 = fx.dir.file("det1.pred");
  const std::string p2 = fx.dir.file("det2.pred");
  const std::string predict_flags = " predict --model " + m1 +
                                    " --embeddings " + fx.embeddings +
                                    " --queries " + fx.queries +
                                    " --candidates " + fx.candidates;
  if (run_cli(cli + predict_flags + " --out " + p1 + sink) != 0 ||
      run_cli(cli + predict_flags + " --out " + p2 + sink) != 0) {
    return {false, "prediction run failed"};
  }
  const std::string pred_a = read_bytes(p1), pred_b = read_bytes(p2);
  if (pred_a.empty() || pred_a != pred_b) {
    return {false, "prediction files differ between identical runs"};
  }
  return {true, "byte-identical model (" + std::to_string(model_a.size()) +
                    " B) and predictions across repeated seeded runs"};
}

std::pair<bool, std::string> format_fidelity(const std::string& cli,
                                             const CliFixture& fx) {
  // model round-trip, bit for bit
  std::mt19937_64 rng(6006);
  const ModelParams params = ts::random_params(6, 9, rng);
  ts::TempDir dir("hyperbox-format");
  save_model(params, dir.file("m.bin"));
  const ModelParams loaded = load_model(dir.file("m.bin"));
  auto bits_equal = [](const auto& a, const auto& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
  };
  if (!bits_equal(params.phi_base, loaded.phi_base) ||
      !bits_equal(params.phi_bump, loaded.phi_bump) ||
      !bits_equal(params.head_box.corner_p, loaded.head_box.corner_p) ||
      !bits_equal(params.head_box.corner_q, loaded.head_box.corner_q) ||
      !bits_equal(params.tail_box.corner_p, loaded.tail_box.corner_p) ||
      !bits_equal(params.tail_box.corner_q, loaded.tail_box.corner_q)) {
    return {false, "model round-trip is not bit-exact"};
  }

  // header and headerless embedding files parse identically
  ts::write_file(dir.file("h.txt"), "2 3\naa 1 2 3\nbb 4 5 6\n");
  ts::write_file(dir.file("nh.txt"), "aa 1 2 3\nbb 4 5 6\n");
  const EmbeddingTable with_header = parse_embeddings(dir.file("h.txt"));
  const EmbeddingTable headerless = parse_embeddings(dir.file("nh.txt"));
  if (with_header.dimension != 3 || headerless.dimension != 3 ||
      with_header.entries.size() != 2 || headerless.entries.size() != 2 ||
      *with_header.find("aa") != *headerless.find("aa")) {
    return {false, "embedding parser header/headerless mismatch"};
  }

  // prediction alignment with an OOV query in line 2
  const std::string sink = " 2> " + dir.file("stderr.txt");
  const std::string model_path = dir.file("align.bin");
  if (run_cli(cli + " train --embeddings " + fx.embeddings + " --queries " +
              fx.queries + " --gold " + fx.gold + " --candidates " +
              fx.candidates + " --valid-queries " + fx.queries +
              " --valid-gold " + fx.gold +
              " --dim 6 --negatives 3 --epochs 2 --batch-size 8 --seed 1"
              " --out " + model_path + sink) != 0) {
    return {false, "fixture training run failed"};
  }
  const std::string queries = dir.file("queries.txt");
  ts::write_file(queries,
                 "n1\tConcept\nunseen_term_without_embedding\tConcept\nn2\tConcept\n");
  const std::string out = dir.file("pred.txt");
  const int rc = run_cli(cli + " predict --model " + model_path +
                         " --embeddings " + fx.embeddings + " --queries " +
                         queries + " --candidates " + fx.candidates +
                         " --out " + out + sink);
  if (rc != 0) return {false, "predict run failed"};
  const auto lines = read_lines(out);
  if (lines.size() != 3) {
    return {false, "prediction file has " + std::to_string(lines.size()) +
                       " lines for 3 queries"};
  }
  if (lines[1] != "" || lines[0].empty() || lines[2].empty()) {
    return {false, "OOV query did not produce an empty aligned line"};
  }
  return {true, "model round-trip bit-exact; header variants agree; "
                "OOV line alignment preserved"};
}

std::pair<bool, std::string> pipeline_capability(const std::string& cli,
                                                 const CliFixture& fx) {
  const std::string model = fx.dir.file("pipe.bin");
  const std::string pred = fx.dir.file("pipe.pred");
  const std::string metrics = fx.dir.file("pipe.metrics");
  const std::string sink = " 2> " + fx.dir.file("stderr.txt");

  int rc = run_cli(cli + " train --embeddings " + fx.embeddings +
                   " --queries " + fx.queries + " --gold " + fx.gold +
                   " --candidates " + fx.candidates + " --valid-queries " +
                   fx.queries + " --valid-gold " + fx.gold +
                   " --dim 8 --negatives 5 --epochs 20 --batch-size 8"
                   " --lr 0.01 --seed 7 --out " + model + sink);
  if (rc != 0) return {false, "train exited with code " + std::to_string(rc)};

  rc = run_cli(cli + " predict --model " + model + " --embeddings " +
               fx.embeddings + " --queries " + fx.queries + " --candidates " +
               fx.candidates + " --out " + pred + sink);
  if (rc != 0) return {false, "predict exited with code " + std::to_string(rc)};

  rc = run_cli(cli + " evaluate --predictions " + pred + " --gold " + fx.gold +
               " > " + metrics + sink);
  if (rc != 0) return {false, "evaluate exited with code " + std::to_string(rc)};

  const auto lines = read_lines(metrics);
  if (lines.size() != 1) {
    return {false, "expected exactly one metrics line"};
  }
  const std::regex display(R"(^\d+\.\d{2}(\t\d+\.\d{2}){5}$)");
  if (!std::regex_match(lines[0], display)) {
    return {false, "metrics line not in x100 two-decimal format: " + lines[0]};
  }
  return {true, "train/predict/evaluate ran end to end; metrics line: " +
                    lines[0]};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-hyperbox-cli>\n";
    return 2;
  }
  const std::string cli = argv[1];
  CliFixture fixture;

  run(1, "distance continuity at box boundaries", distance_continuity);
  run(2, "analytic gradients match finite differences", gradient_correctness);
  run(3, "metrics match an independent brute-force scorer",
      metric_oracle_equivalence);
  run(4, "synthetic taxonomy learning reaches MRR >= 0.90",
      synthetic_taxonomy_learning);
  run(5, "trained model fits antisymmetric supervision", antisymmetry_fit);
  run(6, "seeded CLI runs are byte-identical",
      [&] { return cli_determinism(cli, fixture); });
  run(7, "file format fidelity",
      [&] { return format_fidelity(cli, fixture); });
  run(8, "end-to-end pipeline emits the display-format metrics line",
      [&] { return pipeline_capability(cli, fixture); });

  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all criteria passed" << std::endl;
  return 0;
}
