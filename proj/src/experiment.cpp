#include "actgraph/experiment.hpp"

#include <chrono>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "actgraph/baselines.hpp"
#include "actgraph/corrupt.hpp"
#include "actgraph/error.hpp"
#include "actgraph/random.hpp"
#include "actgraph/tensor_io.hpp"

namespace actgraph {
namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

enum SeedStream : std::uint64_t {
  kDnnStream = 1,
  kValidationCorruptionStream,
  kTestCorruptionStream,
  kTestSamplingStream,
  kBalanceStream,
  kRankerStream,
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

DatasetPaths dataset_from_json(const Json& j, const fs::path& base) {
  return {resolve(base, j.at("inputs").get<std::string>()), resolve(base, j.at("labels").get<std::string>())};
}

Json dataset_to_json(const DatasetPaths& d) { return Json{{"inputs", d.inputs.string()}, {"labels", d.labels.string()}}; }

Json params_to_json(const BoosterParams& p) {
  return Json{{"learning_rate", p.learning_rate}, {"colsample_bytree", p.colsample_bytree},
              {"max_depth", p.max_depth},         {"num_rounds", p.num_rounds},
              {"lambda", p.lambda},               {"gamma", p.gamma},
              {"min_child_weight", p.min_child_weight}};
}

// Runs one pipeline stage: timing, forward-pass accounting and error tagging.
class StageRunner {
 public:
  StageRunner(ExperimentReport& report, const Network* const& net) : report_(report), net_(net) {}

  template <typename Fn>
  decltype(auto) operator()(const std::string& name, Fn&& fn) {
    const std::size_t calls_before = net_ ? net_->forward_calls() : 0;
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
      const auto end = std::chrono::steady_clock::now();
      const std::size_t calls_after = net_ ? net_->forward_calls() : 0;
      report_.stages.push_back(
          {name, std::chrono::duration<double, std::milli>(end - start).count(), calls_after - calls_before});
    };
    try {
      if constexpr (std::is_void_v<std::invoke_result_t<Fn>>) {
        fn();
        finish();
      } else {
        decltype(auto) result = fn();
        finish();
        return result;
      }
    } catch (const Error& e) {
      throw Error(e.code(), "stage " + name + ": " + e.message());
    }
  }

 private:
  ExperimentReport& report_;
  const Network* const& net_;
};

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  return idx;
}

// `count` indices drawn from a seeded permutation of [0, n), cycling when
// more are requested than exist.
std::vector<std::size_t> sample_cycling(std::size_t n, std::size_t count, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::kInvalidArgument, "cannot sample from an empty dataset");
  const auto perm = permutation(n, seed);
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = perm[i % n];
  return out;
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  LabeledDataset out{concat_rows(a.inputs, b.inputs), a.labels, std::nullopt};
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 rng(seed ^ (stream * 0xD1B54A32D192ED03ULL));
  return rng.next();
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text, const fs::path& base) {
  ExperimentConfig cfg;
  try {
    const Json j = Json::parse(text);
    if (j.contains("model")) cfg.model = resolve(base, j.at("model").get<std::string>());
    if (j.contains("train_dnn")) {
      const Json& t = j.at("train_dnn");
      DnnTrainingConfig dnn;
      dnn.spec = resolve(base, t.at("spec").get<std::string>());
      dnn.options.epochs = t.value("epochs", dnn.options.epochs);
      dnn.options.learning_rate = t.value("learning_rate", dnn.options.learning_rate);
      dnn.options.batch_size = t.value("batch_size", dnn.options.batch_size);
      cfg.train_dnn = dnn;
    }
    if (j.contains("train")) cfg.train = dataset_from_json(j.at("train"), base);
    cfg.validation = dataset_from_json(j.at("validation"), base);
    cfg.test = dataset_from_json(j.at("test"), base);
    cfg.method = parse_method(j.value("method", std::string("actgraph")));
    cfg.features.k = j.value("k", cfg.features.k);
    cfg.features.cnf_layers = j.value("cnf_layers", cfg.features.cnf_layers);
    if (j.contains("ranker")) {
      const Json& r = j.at("ranker");
      cfg.ranker.learning_rate = r.value("learning_rate", cfg.ranker.learning_rate);
      cfg.ranker.colsample_bytree = r.value("colsample_bytree", cfg.ranker.colsample_bytree);
      cfg.ranker.max_depth = r.value("max_depth", cfg.ranker.max_depth);
      cfg.ranker.num_rounds = r.value("num_rounds", cfg.ranker.num_rounds);
      cfg.ranker.lambda = r.value("lambda", cfg.ranker.lambda);
      cfg.ranker.gamma = r.value("gamma", cfg.ranker.gamma);
      cfg.ranker.min_child_weight = r.value("min_child_weight", cfg.ranker.min_child_weight);
    }
    cfg.balance_per_class = j.value("balance_per_class", cfg.balance_per_class);
    if (j.contains("corruption")) {
      const Json& c = j.at("corruption");
      CorruptionConfig cc;
      cc.ops = c.at("ops").get<std::vector<std::string>>();
      cc.test_clean = c.value("test_clean", cc.test_clean);
      cc.test_corrupted = c.value("test_corrupted", cc.test_corrupted);
      if (c.contains("validation_corrupted")) cc.validation_corrupted = c.at("validation_corrupted").get<std::size_t>();
      parse_corruption_list(cc.ops);
      cfg.corruption = cc;
    }
    if (j.contains("cutoffs")) {
      cfg.cutoffs.clear();
      for (const auto& c : j.at("cutoffs")) {
        cfg.cutoffs.push_back(c.is_string() ? Cutoff::parse(c.get<std::string>()) : Cutoff::parse(std::to_string(c.get<std::size_t>())));
      }
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const Json::exception& e) {
    throw Error(Errc::kBadHeader, std::string("invalid experiment config: ") + e.what());
  }
  if (!cfg.model && !cfg.train_dnn) throw Error(Errc::kInvalidArgument, "config needs \"model\" or \"train_dnn\"");
  if (cfg.train_dnn && !cfg.train) throw Error(Errc::kInvalidArgument, "\"train_dnn\" needs a \"train\" dataset");
  if (cfg.method == Method::kDsa && !cfg.train) throw Error(Errc::kInvalidArgument, "dsa needs a \"train\" dataset");
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  return from_json(read_file(path), path.parent_path());
}

std::string ExperimentConfig::to_json() const {
  Json j;
  if (model) j["model"] = model->string();
  if (train_dnn) {
    j["train_dnn"] = Json{{"spec", train_dnn->spec.string()},
                          {"epochs", train_dnn->options.epochs},
                          {"learning_rate", train_dnn->options.learning_rate},
                          {"batch_size", train_dnn->options.batch_size}};
  }
  if (train) j["train"] = dataset_to_json(*train);
  j["validation"] = dataset_to_json(validation);
  j["test"] = dataset_to_json(test);
  j["method"] = std::string(to_string(method));
  j["k"] = features.k;
  j["cnf_layers"] = features.cnf_layers;
  j["ranker"] = params_to_json(ranker);
  j["balance_per_class"] = balance_per_class;
  if (corruption) {
    j["corruption"] = Json{{"ops", corruption->ops},
                           {"test_clean", corruption->test_clean},
                           {"test_corrupted", corruption->test_corrupted}};
    if (corruption->validation_corrupted) j["corruption"]["validation_corrupted"] = *corruption->validation_corrupted;
  }
  Json cut = Json::array();
  for (const auto& c : cutoffs) cut.push_back(c.label());
  j["cutoffs"] = cut;
  j["seed"] = seed;
  j["threads"] = threads;
  return j.dump();
}

const StageRecord* ExperimentReport::stage(std::string_view name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

double ExperimentReport::rauc_at(Cutoff cutoff) const {
  for (const auto& [c, v] : rauc) {
    if (c == cutoff) return v;
  }
  throw Error(Errc::kInvalidArgument, "no RAUC recorded for cutoff " + cutoff.label());
}

std::string ExperimentReport::to_json(bool include_timings) const {
  Json j;
  j["method"] = std::string(to_string(method));
  j["seed"] = seed;
  Json r = Json::object();
  for (const auto& [c, v] : rauc) r[c.label()] = v;
  j["rauc"] = r;
  j["counts"] = Json{{"validation_cases", validation_cases},
                     {"validation_faults", validation_faults},
                     {"test_cases", test_cases},
                     {"test_faults", test_faults}};
  Json stage_list = Json::array();
  Json timings = Json::object();
  for (const auto& s : stages) {
    stage_list.push_back(Json{{"name", s.name}, {"forward_calls", s.forward_calls}});
    timings[s.name] = s.millis;
  }
  j["stages"] = stage_list;
  if (include_timings) j["timings_ms"] = timings;
  j["config"] = Json::parse(config_json.empty() ? "{}" : config_json);
  return j.dump(2) + "\n";
}

std::string ExperimentReport::rauc_csv() const {
  std::ostringstream out;
  out << "cutoff,rauc\n";
  for (const auto& [c, v] : rauc) out << c.label() << ',' << format_number(v) << '\n';
  return out.str();
}

std::string ExperimentReport::ranking_csv() const {
  std::ostringstream out;
  out << "rank,index,score,flag\n";
  for (std::size_t pos = 0; pos < ranking.order.size(); ++pos) {
    const std::size_t i = ranking.order[pos];
    out << pos << ',' << i << ',' << format_number(ranking.scores[i]) << ',' << static_cast<int>(ranking.flags[i]) << '\n';
  }
  return out.str();
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.method = cfg.method;
  report.seed = cfg.seed;
  report.config_json = cfg.to_json();

  std::optional<Network> net;
  const Network* net_ptr = nullptr;
  StageRunner stage(report, net_ptr);

  std::optional<LabeledDataset> train;
  stage("load_model", [&] {
    if (cfg.train) train = read_dataset(cfg.train->inputs, cfg.train->labels);
    if (cfg.model) {
      Model m = load_model(*cfg.model);
      net.emplace(std::move(m.spec), m.weights);
    } else {
      const ModelSpec spec = spec_from_json(read_file(cfg.train_dnn->spec));
      TrainOptions options = cfg.train_dnn->options;
      options.seed = derive_seed(cfg.seed, kDnnStream);
      const TrainResult trained = train_sgd(spec, *train, options);
      net.emplace(spec, trained.weights);
    }
  });
  net_ptr = &*net;
  const std::size_t num_classes = net->spec().num_classes;

  LabeledDataset validation;
  LabeledDataset test;
  stage("prepare_data", [&] {
    validation = read_dataset(cfg.validation.inputs, cfg.validation.labels);
    test = read_dataset(cfg.test.inputs, cfg.test.labels);
    validation.validate(num_classes);
    test.validate(num_classes);
    if (!cfg.corruption) return;
    const auto ops = parse_corruption_list(cfg.corruption->ops);

    const std::size_t val_corrupted = cfg.corruption->validation_corrupted.value_or(validation.size());
    if (val_corrupted > 0) {
      const auto src = sample_cycling(validation.size(), val_corrupted,
                                      derive_seed(cfg.seed, kValidationCorruptionStream));
      validation = concat(validation, corrupt(validation.select(src), ops, derive_seed(cfg.seed, kValidationCorruptionStream) + 1));
    }

    const auto clean_perm = permutation(test.size(), derive_seed(cfg.seed, kTestSamplingStream));
    const std::size_t n_clean = std::min(cfg.corruption->test_clean, test.size());
    std::vector<std::size_t> clean(clean_perm.begin(), clean_perm.begin() + static_cast<std::ptrdiff_t>(n_clean));
    std::sort(clean.begin(), clean.end());
    LabeledDataset assembled = test.select(clean);
    if (cfg.corruption->test_corrupted > 0) {
      const auto src = sample_cycling(test.size(), cfg.corruption->test_corrupted,
                                      derive_seed(cfg.seed, kTestCorruptionStream));
      assembled = concat(assembled, corrupt(test.select(src), ops, derive_seed(cfg.seed, kTestCorruptionStream) + 1));
    }
    // Interleave clean and corrupted cases so index-order tie breaking
    // carries no information about corruption.
    test = assembled.select(permutation(assembled.size(), derive_seed(cfg.seed, kTestSamplingStream) + 1));
  });

  std::optional<CnfExtractor<double>> extractor;
  if (cfg.method == Method::kActGraph) {
    stage("skeleton", [&] { extractor.emplace(net->spec(), net->weights(), cfg.features); });
  }
  const CnfExtractor<double>* extractor_ptr = extractor ? &*extractor : nullptr;

  std::optional<EmbeddingStore> store;
  if (cfg.method == Method::kDsa) {
    stage("train_embeddings", [&] {
      const InferenceResult inf = run_inference(*net, train->inputs, nullptr, cfg.threads);
      store.emplace(inf.last_hidden, train->labels);
    });
  }

  std::optional<Booster> booster;
  if (is_supervised(cfg.method)) {
    FeatureMatrix val_features;
    std::vector<std::uint8_t> val_flags;
    stage("validation_features", [&] {
      const InferenceResult inf = run_inference(*net, validation.inputs, extractor_ptr, cfg.threads);
      val_flags = label_faults(inf.predicted, validation.labels);
      val_features = method_features(cfg.method, inf);
    });
    report.validation_cases = validation.size();
    report.validation_faults = static_cast<std::size_t>(std::accumulate(val_flags.begin(), val_flags.end(), 0));
    RankTrainSet trainset;
    stage("balance", [&] {
      trainset = balance_trainset(val_features, val_flags, cfg.balance_per_class, derive_seed(cfg.seed, kBalanceStream));
    });
    stage("ranker_fit", [&] {
      BoosterParams params = cfg.ranker;
      params.seed = derive_seed(cfg.seed, kRankerStream);
      booster = Booster::fit(trainset, params);
    });
  }

  InferenceResult test_inf;
  std::vector<std::uint8_t> test_flags;
  stage("test_features", [&] {
    test_inf = run_inference(*net, test.inputs, extractor_ptr, cfg.threads);
    test_flags = label_faults(test_inf.predicted, test.labels);
  });
  report.test_cases = test.size();
  report.test_faults = static_cast<std::size_t>(std::accumulate(test_flags.begin(), test_flags.end(), 0));

  stage("scoring", [&] {
    switch (cfg.method) {
      case Method::kActGraph:
      case Method::kAct: {
        const Eigen::VectorXd s = booster->score(method_features(cfg.method, test_inf));
        report.ranking = prioritize(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
        break;
      }
      case Method::kGini: {
        const Eigen::VectorXd s = deepgini_scores(test_inf.probs);
        report.ranking = prioritize(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
        break;
      }
      case Method::kMcp:
        report.ranking = mcp_prioritize(test_inf.probs);
        break;
      case Method::kDsa: {
        const Eigen::VectorXd s = dsa_scores(test_inf.last_hidden, test_inf.predicted, *store);
        report.ranking = prioritize(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
        break;
      }
    }
    report.ranking.flags = test_flags;
  });

  stage("rauc", [&] {
    for (const Cutoff& c : cfg.cutoffs) report.rauc.emplace_back(c, rauc(report.ranking.order, test_flags, c));
  });
  return report;
}

void write_report(const ExperimentReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "report.json", report.to_json());
  write_file(dir / "rauc.csv", report.rauc_csv());
  write_file(dir / "ranking.csv", report.ranking_csv());
  write_scores_csv(dir / "scores.csv", report.ranking.scores);
}

}  // namespace actgraph
