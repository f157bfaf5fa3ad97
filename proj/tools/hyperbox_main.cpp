// hyperbox: train box-embedding models for hypernym discovery, rank
// candidate hypernyms for query terms, and score prediction files.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hyperbox/data_io.hpp"
#include "hyperbox/discovery.hpp"
#include "hyperbox/metrics.hpp"
#include "hyperbox/model.hpp"
#include "hyperbox/train.hpp"

namespace {

struct TrainOptions {
  std::string embeddings, queries, gold, candidates;
  std::string valid_queries, valid_gold;
  std::string out, log;
  hyperbox::TrainConfig config;
};

struct PredictOptions {
  std::string model, embeddings, queries, candidates, out;
  int topk = 15;
};

struct EvaluateOptions {
  std::string predictions, gold;
};

int run_train(const TrainOptions& opt) {
  using namespace hyperbox;

  const EmbeddingTable table = parse_embeddings(opt.embeddings);
  std::cerr << "embeddings: " << table.entries.size() << " terms, dim "
            << table.dimension << "\n";

  const QuerySet queries = parse_queries(opt.queries);
  const GoldStandard gold = parse_gold(opt.gold);
  const auto candidate_terms = parse_term_list(opt.candidates);

  TermVocab vocab;
  std::vector<int> candidates;
  candidates.reserve(candidate_terms.size());
  for (const auto& term : candidate_terms) {
    const int id = vocab.add(term, table);
    if (id >= 0) candidates.push_back(id);
  }
  std::cerr << "candidates: " << candidates.size() << " kept, "
            << (candidate_terms.size() - candidates.size())
            << " dropped (no embedding)\n";
  if (candidates.empty()) {
    throw std::runtime_error("no candidate term has an embedding");
  }

  ExpandedPairs expanded = expand_gold(queries, gold, vocab, table, &std::cerr);
  std::cerr << "training pairs: " << expanded.pairs.size() << " kept, "
            << expanded.dropped_pairs << " dropped (no embedding), "
            << expanded.empty_gold_lines << " empty gold line(s)\n";

  const QuerySet vqueries = parse_queries(opt.valid_queries);
  const GoldStandard vgold = parse_gold(opt.valid_gold);
  const auto validation = make_validation_set(vqueries, vgold, table);
  std::cerr << "validation queries: " << validation.size() << "\n";

  const std::string log_path = opt.log.empty() ? opt.out + ".log" : opt.log;
  std::ofstream log_stream(log_path, std::ios::trunc);
  if (!log_stream) {
    throw std::runtime_error("cannot open training log for writing: " +
                             log_path);
  }

  const TrainResult result =
      train(opt.config, vocab, expanded.pairs, expanded.gold_by_query,
            candidates, validation, &log_stream, &std::cerr);
  std::cerr << "best epoch: " << result.best_epoch << " (validation MRR "
            << result.best_mrr << ")\n";

  // Write through a temp file so a failure leaves no partial model behind.
  const std::string tmp = opt.out + ".tmp";
  save_model(result.params, tmp);
  std::filesystem::rename(tmp, opt.out);
  std::cerr << "model written to " << opt.out << ", log to " << log_path
            << "\n";
  return 0;
}

int run_predict(const PredictOptions& opt) {
  using namespace hyperbox;

  const ModelParams params = load_model(opt.model);
  const EmbeddingTable table = parse_embeddings(opt.embeddings);
  if (params.dim_m() != table.dimension) {
    throw std::runtime_error(
        "model/embedding dimension mismatch: model expects m=" +
        std::to_string(params.dim_m()) + ", embeddings file has m=" +
        std::to_string(table.dimension));
  }

  TermVocab vocab;
  std::vector<int> candidates;
  const auto candidate_terms = parse_term_list(opt.candidates);
  for (const auto& term : candidate_terms) {
    const int id = vocab.add(term, table);
    if (id >= 0) candidates.push_back(id);
  }
  std::cerr << "candidates: " << candidates.size() << " kept, "
            << (candidate_terms.size() - candidates.size())
            << " dropped (no embedding)\n";
  if (candidates.empty()) {
    throw std::runtime_error("no candidate term has an embedding");
  }

  const QuerySet queries = parse_queries(opt.queries);
  const ProjectedVocab projected = project_vocab(vocab, params);

  std::vector<RankedPrediction> predictions;
  predictions.reserve(queries.size());
  int oov = 0;
  for (const auto& query : queries.queries) {
    const auto emb = phrase_embedding(query.term, table);
    if (!emb) {
      ++oov;
      predictions.push_back({query.term, {}});
      continue;
    }
    auto scored = score_candidates(*emb, query.term, vocab, candidates, params,
                                   &projected);
    predictions.push_back(top_k(query.term, std::move(scored), opt.topk));
  }

  std::ofstream out(opt.out, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open output file for writing: " + opt.out);
  }
  write_predictions(out, predictions);
  std::cerr << "queries: " << queries.size() << " total, " << oov
            << " without embedding (empty prediction line)\n";
  return 0;
}

int run_evaluate(const EvaluateOptions& opt) {
  using namespace hyperbox;
  const EvalReport report = evaluate(opt.predictions, opt.gold);
  std::cerr << "queries scored: " << report.num_queries << ", skipped (empty gold): "
            << report.skipped_empty_gold << "\n";
  std::cout << format_metrics_line(report) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HyperBox hypernym discovery"};
  app.require_subcommand(1);

  TrainOptions train_opt;
  PredictOptions predict_opt;
  EvaluateOptions eval_opt;

  CLI::App* train = app.add_subcommand(
      "train", "Train a model from (query, hypernym) pairs");
  train->add_option("--embeddings", train_opt.embeddings,
                    "Pretrained word embeddings (text format)")->required();
  train->add_option("--queries", train_opt.queries, "Training query file")
      ->required();
  train->add_option("--gold", train_opt.gold, "Training gold file")->required();
  train->add_option("--candidates", train_opt.candidates,
                    "Candidate hypernym vocabulary")->required();
  train->add_option("--valid-queries", train_opt.valid_queries,
                    "Validation query file")->required();
  train->add_option("--valid-gold", train_opt.valid_gold,
                    "Validation gold file")->required();
  train->add_option("--out", train_opt.out, "Output model file")->required();
  train->add_option("--log", train_opt.log,
                    "Training log file (default: <out>.log)");
  train->add_option("--dim", train_opt.config.dim_d, "Box space dimension d")
      ->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--lr", train_opt.config.learning_rate, "Learning rate")
      ->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--negatives", train_opt.config.negatives_k,
                    "Negative samples per positive pair")
      ->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--margin", train_opt.config.margin_gamma,
                    "Loss margin gamma")
      ->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--epochs", train_opt.config.epochs, "Training epochs")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  train->add_option("--batch-size", train_opt.config.batch_size,
                    "Mini-batch size")
      ->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--seed", train_opt.config.seed, "Random seed")
      ->capture_default_str();
  train->add_option("--adam-beta1", train_opt.config.adam_beta1, "Adam beta1")
      ->capture_default_str()->check(CLI::Range(1e-12, 1.0 - 1e-12));
  train->add_option("--adam-beta2", train_opt.config.adam_beta2, "Adam beta2")
      ->capture_default_str()->check(CLI::Range(1e-12, 1.0 - 1e-12));
  train->add_option("--adam-epsilon", train_opt.config.adam_epsilon,
                    "Adam epsilon")
      ->capture_default_str()->check(CLI::PositiveNumber);

  CLI::App* predict = app.add_subcommand(
      "predict", "Rank candidate hypernyms for each query term");
  predict->add_option("--model", predict_opt.model, "Trained model file")
      ->required();
  predict->add_option("--embeddings", predict_opt.embeddings,
                      "Pretrained word embeddings (text format)")->required();
  predict->add_option("--queries", predict_opt.queries, "Query file")
      ->required();
  predict->add_option("--candidates", predict_opt.candidates,
                      "Candidate hypernym vocabulary")->required();
  predict->add_option("--topk", predict_opt.topk,
                      "Hypernyms to keep per query")
      ->capture_default_str()->check(CLI::PositiveNumber);
  predict->add_option("--out", predict_opt.out, "Output prediction file")
      ->required();

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score a prediction file against a gold file");
  evaluate->add_option("--predictions", eval_opt.predictions,
                       "Prediction file")->required();
  evaluate->add_option("--gold", eval_opt.gold, "Gold file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) return run_train(train_opt);
    if (predict->parsed()) return run_predict(predict_opt);
    if (evaluate->parsed()) return run_evaluate(eval_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
