#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "actgraph/baselines.hpp"
#include "actgraph/corrupt.hpp"
#include "actgraph/error.hpp"
#include "actgraph/experiment.hpp"
#include "actgraph/graph.hpp"
#include "actgraph/inference.hpp"
#include "actgraph/metrics.hpp"
#include "actgraph/model.hpp"
#include "actgraph/ranker.hpp"
#include "actgraph/ranking.hpp"
#include "actgraph/tensor_io.hpp"
#include "actgraph/trainer.hpp"

namespace fs = std::filesystem;
using namespace actgraph;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct Common {
  std::uint64_t seed = 42;
  std::size_t threads = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Seed for stochastic stages")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads for per-case stages")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

Network load_network(const fs::path& path) {
  Model m = load_model(path);
  return Network(std::move(m.spec), m.weights);
}

std::vector<std::uint8_t> read_flags(const fs::path& path) {
  LabelFile lf = read_labels(path);
  if (!lf.flags) throw Error(Errc::kBadHeader, path.string() + " carries no fault flags");
  return std::move(*lf.flags);
}

std::size_t count(std::span<const std::uint8_t> flags) {
  return static_cast<std::size_t>(std::accumulate(flags.begin(), flags.end(), 0));
}

FeatureMatrix features_for(Method method, const Network& net, const Tensor& inputs, const FeatureOptions& opts,
                           std::size_t threads, InferenceResult* out = nullptr) {
  std::optional<CnfExtractor<double>> extractor;
  if (method == Method::kActGraph) extractor.emplace(net.spec(), net.weights(), opts);
  InferenceResult inf = run_inference(net, inputs, extractor ? &*extractor : nullptr, threads);
  FeatureMatrix f = method_features(method, inf);
  if (out) *out = std::move(inf);
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ActGraph test input prioritization", "actgraph"};
  app.require_subcommand(1);
  app.fallthrough(false);

  std::function<void()> run;

  // train-dnn
  Common train_common;
  fs::path spec_path, train_inputs, train_labels, model_out;
  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train-dnn", "Train a fixture network with SGD");
  train_cmd->add_option("--spec", spec_path, "Model spec JSON")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--inputs", train_inputs, "Training inputs (AGTD)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--labels", train_labels, "Training labels (AGLB)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", model_out, "Output model (AGMF)")->required();
  train_cmd->add_option("--epochs", train_opts.epochs)->capture_default_str();
  train_cmd->add_option("--learning-rate", train_opts.learning_rate)->capture_default_str();
  train_cmd->add_option("--batch-size", train_opts.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  add_common(train_cmd, train_common);
  train_cmd->callback([&] {
    run = [&] {
      const ModelSpec spec = spec_from_json(read_file(spec_path));
      const LabeledDataset data = read_dataset(train_inputs, train_labels);
      data.validate(spec.num_classes);
      train_opts.seed = derive_seed(train_common.seed, 1);
      const TrainResult result = train_sgd(spec, data, train_opts);
      save_model(spec, result.weights, model_out);
      const Network net(spec, result.weights);
      std::printf("loss,%.6f\naccuracy,%.6f\n", result.epoch_loss.back(), accuracy(net, data));
    };
  });

  // corrupt
  Common corrupt_common;
  fs::path corrupt_inputs, corrupt_labels, corrupt_out_inputs, corrupt_out_labels;
  std::vector<std::string> corrupt_ops;
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Apply seeded rotations, flips and translations");
  corrupt_cmd->add_option("--inputs", corrupt_inputs)->required()->check(CLI::ExistingFile);
  corrupt_cmd->add_option("--labels", corrupt_labels)->required()->check(CLI::ExistingFile);
  corrupt_cmd->add_option("--ops", corrupt_ops, "e.g. rotate:90,flip:h,translate:1,0")
      ->required()
      ->delimiter(';');
  corrupt_cmd->add_option("--out-inputs", corrupt_out_inputs)->required();
  corrupt_cmd->add_option("--out-labels", corrupt_out_labels)->required();
  add_common(corrupt_cmd, corrupt_common);
  corrupt_cmd->callback([&] {
    run = [&] {
      const auto ops = parse_corruption_list(corrupt_ops);
      const LabeledDataset data = read_dataset(corrupt_inputs, corrupt_labels);
      write_dataset(corrupt(data, ops, corrupt_common.seed), corrupt_out_inputs, corrupt_out_labels);
    };
  });

  // faults
  Common faults_common;
  fs::path faults_model, faults_inputs, faults_labels, faults_out;
  auto* faults_cmd = app.add_subcommand("faults", "Label each case as fault-revealing or not");
  faults_cmd->add_option("--model", faults_model)->required()->check(CLI::ExistingFile);
  faults_cmd->add_option("--inputs", faults_inputs)->required()->check(CLI::ExistingFile);
  faults_cmd->add_option("--labels", faults_labels)->required()->check(CLI::ExistingFile);
  faults_cmd->add_option("--out", faults_out, "Labels with fault flags (AGLB)")->required();
  add_common(faults_cmd, faults_common);
  faults_cmd->callback([&] {
    run = [&] {
      const Network net = load_network(faults_model);
      const LabeledDataset data = read_dataset(faults_inputs, faults_labels);
      data.validate(net.spec().num_classes);
      auto flags = label_faults(net, data, faults_common.threads);
      std::printf("cases,%zu\nfaults,%zu\n", flags.size(), count(flags));
      write_labels(LabelFile{data.labels, std::move(flags)}, faults_out);
    };
  });

  // score
  Common score_common;
  std::string score_method;
  fs::path score_model, score_inputs, score_train_inputs, score_train_labels, score_out;
  auto* score_cmd = app.add_subcommand("score", "Score cases with an unsupervised baseline");
  score_cmd->add_option("--method", score_method)->required()->check(CLI::IsMember({"gini", "mcp", "dsa"}));
  score_cmd->add_option("--model", score_model)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--inputs", score_inputs)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--train-inputs", score_train_inputs, "Training inputs (dsa)")->check(CLI::ExistingFile);
  score_cmd->add_option("--train-labels", score_train_labels, "Training labels (dsa)")->check(CLI::ExistingFile);
  score_cmd->add_option("--out", score_out, "scores.csv")->required();
  add_common(score_cmd, score_common);
  score_cmd->callback([&] {
    if (score_method == "dsa" && (score_train_inputs.empty() || score_train_labels.empty())) {
      throw CLI::ValidationError("--method dsa requires --train-inputs and --train-labels");
    }
    run = [&] {
      const Network net = load_network(score_model);
      const Tensor inputs = read_tensor(score_inputs);
      const InferenceResult inf = run_inference(net, inputs, nullptr, score_common.threads);
      const Method method = parse_method(score_method);
      if (method == Method::kMcp) {
        const RankedList r = mcp_prioritize(inf.probs);
        write_scores_csv(score_out, r.scores, r.order);
        return;
      }
      Eigen::VectorXd scores;
      if (method == Method::kGini) {
        scores = deepgini_scores(inf.probs);
      } else {
        const LabeledDataset train = read_dataset(score_train_inputs, score_train_labels);
        const InferenceResult train_inf = run_inference(net, train.inputs, nullptr, score_common.threads);
        const EmbeddingStore store(train_inf.last_hidden, train.labels);
        scores = dsa_scores(inf.last_hidden, inf.predicted, store);
      }
      const RankedList r = prioritize(as_span(scores));
      write_scores_csv(score_out, r.scores, r.order);
    };
  });

  // features
  Common feat_common;
  std::string feat_method = "actgraph";
  FeatureOptions feat_opts;
  fs::path feat_model, feat_inputs, feat_out;
  auto* feat_cmd = app.add_subcommand("features", "Write per-case ranking features");
  feat_cmd->add_option("--method", feat_method)->check(CLI::IsMember({"actgraph", "act"}))->capture_default_str();
  feat_cmd->add_option("--model", feat_model)->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--inputs", feat_inputs)->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--k", feat_opts.k, "Trailing trainable layers in the graph")->capture_default_str();
  feat_cmd->add_option("--out", feat_out, "features.csv")->required();
  add_common(feat_cmd, feat_common);
  feat_cmd->callback([&] {
    run = [&] {
      const Network net = load_network(feat_model);
      write_features_csv(feat_out, features_for(parse_method(feat_method), net, read_tensor(feat_inputs), feat_opts,
                                                feat_common.threads));
    };
  });

  // fit-ranker
  Common fit_common;
  std::string fit_method = "actgraph";
  FeatureOptions fit_opts;
  BoosterParams fit_params;
  std::size_t fit_balance = 200;
  fs::path fit_model, fit_inputs, fit_labels, fit_out;
  auto* fit_cmd = app.add_subcommand("fit-ranker", "Fit the boosted-tree ranker on validation cases");
  fit_cmd->add_option("--method", fit_method)->check(CLI::IsMember({"actgraph", "act"}))->capture_default_str();
  fit_cmd->add_option("--model", fit_model)->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--inputs", fit_inputs)->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--labels", fit_labels)->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--k", fit_opts.k)->capture_default_str();
  fit_cmd->add_option("--balance", fit_balance, "Cases per class after resampling")->capture_default_str();
  fit_cmd->add_option("--rounds", fit_params.num_rounds)->capture_default_str();
  fit_cmd->add_option("--max-depth", fit_params.max_depth)->capture_default_str();
  fit_cmd->add_option("--learning-rate", fit_params.learning_rate)->capture_default_str();
  fit_cmd->add_option("--colsample", fit_params.colsample_bytree)->capture_default_str();
  fit_cmd->add_option("--out", fit_out, "Ranker JSON")->required();
  add_common(fit_cmd, fit_common);
  fit_cmd->callback([&] {
    run = [&] {
      const Network net = load_network(fit_model);
      const LabeledDataset data = read_dataset(fit_inputs, fit_labels);
      data.validate(net.spec().num_classes);
      InferenceResult inf;
      const FeatureMatrix f =
          features_for(parse_method(fit_method), net, data.inputs, fit_opts, fit_common.threads, &inf);
      const auto flags = label_faults(inf.predicted, data.labels);
      const RankTrainSet train = balance_trainset(f, flags, fit_balance, derive_seed(fit_common.seed, 5));
      fit_params.seed = derive_seed(fit_common.seed, 6);
      const Booster booster = Booster::fit(train, fit_params);
      booster.save(fit_out);
      std::printf("cases,%zu\nfaults,%zu\nfeatures,%zu\ntrain_loss,%.6f\n", flags.size(), count(flags),
                  booster.num_features(), booster.training_loss().back());
    };
  });

  // rank
  Common rank_common;
  std::string rank_method = "actgraph";
  FeatureOptions rank_opts;
  fs::path rank_scores, rank_model, rank_ranker, rank_inputs, rank_out;
  auto* rank_cmd = app.add_subcommand("rank", "Order cases by ranker output or an existing scores.csv");
  rank_cmd->add_option("--scores", rank_scores, "Existing scores.csv to reorder")->check(CLI::ExistingFile);
  rank_cmd->add_option("--method", rank_method)->check(CLI::IsMember({"actgraph", "act"}))->capture_default_str();
  rank_cmd->add_option("--model", rank_model)->check(CLI::ExistingFile);
  rank_cmd->add_option("--ranker", rank_ranker)->check(CLI::ExistingFile);
  rank_cmd->add_option("--inputs", rank_inputs)->check(CLI::ExistingFile);
  rank_cmd->add_option("--k", rank_opts.k)->capture_default_str();
  rank_cmd->add_option("--out", rank_out, "scores.csv in priority order")->required();
  add_common(rank_cmd, rank_common);
  rank_cmd->callback([&] {
    const bool from_scores = !rank_scores.empty();
    const bool from_ranker = !rank_model.empty() && !rank_ranker.empty() && !rank_inputs.empty();
    const bool any_ranker = !rank_model.empty() || !rank_ranker.empty() || !rank_inputs.empty();
    if (from_scores == from_ranker || (from_scores && any_ranker)) {
      throw CLI::ValidationError("give either --scores or all of --model, --ranker and --inputs");
    }
    run = [&, from_scores] {
      std::vector<double> scores;
      if (from_scores) {
        scores = read_scores_csv(rank_scores);
      } else {
        const Network net = load_network(rank_model);
        const Booster booster = Booster::load(rank_ranker);
        const FeatureMatrix f =
            features_for(parse_method(rank_method), net, read_tensor(rank_inputs), rank_opts, rank_common.threads);
        const Eigen::VectorXd s = booster.score(f);
        scores.assign(s.data(), s.data() + s.size());
      }
      const RankedList r = prioritize(scores);
      write_scores_csv(rank_out, r.scores, r.order);
    };
  });

  // evaluate
  Common eval_common;
  std::string eval_cutoffs = "100,500,1000,all";
  std::size_t eval_shuffles = 0;
  fs::path eval_scores, eval_flags;
  auto* eval_cmd = app.add_subcommand("evaluate", "RAUC of a ranking against fault flags");
  eval_cmd->add_option("--scores", eval_scores, "scores.csv")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--flags", eval_flags, "AGLB with fault flags")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--cutoffs", eval_cutoffs)->capture_default_str();
  eval_cmd->add_option("--random-shuffles", eval_shuffles, "Also report the mean RAUC of random orderings");
  add_common(eval_cmd, eval_common);
  eval_cmd->callback([&] {
    std::vector<Cutoff> cutoffs;
    try {
      cutoffs = Cutoff::parse_list(eval_cutoffs);
    } catch (const Error& e) {
      throw CLI::ValidationError("--cutoffs", e.message());
    }
    run = [&, cutoffs] {
      const RankedList r = prioritize(read_scores_csv(eval_scores));
      const auto flags = read_flags(eval_flags);
      if (flags.size() != r.order.size()) {
        throw Error(Errc::kCountMismatch, "scores and flags cover different case counts");
      }
      for (const Cutoff& c : cutoffs) std::printf("rauc_%s,%.6f\n", c.label().c_str(), rauc(r.order, flags, c));
      if (eval_shuffles > 0) {
        for (const Cutoff& c : cutoffs) {
          std::printf("random_rauc_%s,%.6f\n", c.label().c_str(),
                      random_rauc_mean(flags, c, eval_shuffles, eval_common.seed));
        }
      }
    };
  });

  // export-graph
  Common graph_common;
  FeatureOptions graph_opts;
  double graph_threshold = 0.4;
  std::size_t graph_index = 0;
  fs::path graph_model, graph_inputs, graph_dot, graph_csv;
  auto* graph_cmd = app.add_subcommand("export-graph", "Export one case's activation graph");
  graph_cmd->add_option("--model", graph_model)->required()->check(CLI::ExistingFile);
  graph_cmd->add_option("--inputs", graph_inputs)->required()->check(CLI::ExistingFile);
  graph_cmd->add_option("--index", graph_index, "Case row in --inputs")->capture_default_str();
  graph_cmd->add_option("--k", graph_opts.k)->capture_default_str();
  graph_cmd->add_option("--threshold", graph_threshold, "Minimum edge weight")->capture_default_str();
  graph_cmd->add_option("--dot", graph_dot, "Graphviz output");
  graph_cmd->add_option("--csv", graph_csv, "Edge list output");
  add_common(graph_cmd, graph_common);
  graph_cmd->callback([&] {
    run = [&] {
      const Network net = load_network(graph_model);
      const Tensor inputs = read_tensor(graph_inputs);
      if (graph_index >= inputs.rows()) {
        throw Error(Errc::kInvalidArgument, "--index " + std::to_string(graph_index) + " is out of range");
      }
      const CnfExtractor<double> extractor(net.spec(), net.weights(), graph_opts);
      const auto row = inputs.row(graph_index);
      const GraphExport g = export_graph(extractor.graph(net.forward(row).capture), graph_threshold);
      if (!graph_dot.empty()) write_file(graph_dot, g.dot);
      if (!graph_csv.empty()) write_file(graph_csv, g.csv);
      if (graph_dot.empty() && graph_csv.empty()) std::cout << g.dot;
      std::fprintf(stderr, "edges,%zu\n", g.edge_count);
    };
  });

  // distances
  Common dist_common;
  std::string dist_method = "actgraph";
  FeatureOptions dist_opts;
  fs::path dist_model, dist_inputs, dist_types, dist_out;
  auto* dist_cmd = app.add_subcommand("distances", "Mean feature distance within and between case types");
  dist_cmd->add_option("--method", dist_method)->check(CLI::IsMember({"actgraph", "act"}))->capture_default_str();
  dist_cmd->add_option("--model", dist_model)->required()->check(CLI::ExistingFile);
  dist_cmd->add_option("--inputs", dist_inputs)->required()->check(CLI::ExistingFile);
  dist_cmd->add_option("--types", dist_types, "AGLB whose labels are type ids")->required()->check(CLI::ExistingFile);
  dist_cmd->add_option("--k", dist_opts.k)->capture_default_str();
  dist_cmd->add_option("--out", dist_out, "CSV output");
  add_common(dist_cmd, dist_common);
  dist_cmd->callback([&] {
    run = [&] {
      const Network net = load_network(dist_model);
      const FeatureMatrix f =
          features_for(parse_method(dist_method), net, read_tensor(dist_inputs), dist_opts, dist_common.threads);
      const std::string csv = distance_report(f, read_labels(dist_types).labels).to_csv();
      if (dist_out.empty()) {
        std::cout << csv;
      } else {
        write_file(dist_out, csv);
      }
    };
  });

  // pipeline
  Common pipe_common;
  fs::path pipe_config, pipe_out;
  std::string pipe_method;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run a full experiment from a config file");
  pipe_cmd->add_option("--config", pipe_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  pipe_cmd->add_option("--out", pipe_out, "Report directory")->required();
  auto* pipe_method_opt =
      pipe_cmd->add_option("--method", pipe_method)->check(CLI::IsMember({"actgraph", "act", "gini", "mcp", "dsa"}));
  auto* pipe_seed_opt = pipe_cmd->add_option("--seed", pipe_common.seed, "Overrides the config seed");
  auto* pipe_threads_opt =
      pipe_cmd->add_option("--threads", pipe_common.threads, "Overrides the config thread count")
          ->check(CLI::PositiveNumber);
  pipe_cmd->callback([&] {
    run = [&] {
      ExperimentConfig cfg = ExperimentConfig::load(pipe_config);
      if (pipe_seed_opt->count() > 0) cfg.seed = pipe_common.seed;
      if (pipe_threads_opt->count() > 0) cfg.threads = pipe_common.threads;
      if (pipe_method_opt->count() > 0) cfg.method = parse_method(pipe_method);
      const ExperimentReport report = run_experiment(cfg);
      write_report(report, pipe_out);
      std::printf("test_cases,%zu\ntest_faults,%zu\n", report.test_cases, report.test_faults);
      for (const auto& [c, v] : report.rauc) std::printf("rauc_%s,%.6f\n", c.label().c_str(), v);
    };
  });

  if (argc <= 1) {
    std::cerr << app.help();
    return kUsageError;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsageError;
  }

  try {
    run();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
