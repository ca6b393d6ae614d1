// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "actgraph/baselines.hpp"
#include "actgraph/experiment.hpp"
#include "actgraph/graph.hpp"
#include "actgraph/inference.hpp"
#include "actgraph/metrics.hpp"
#include "actgraph/ranker.hpp"
#include "actgraph/tensor_io.hpp"
#include "actgraph/trainer.hpp"
#include "graph_oracle.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace actgraph;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buffer[512];

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  std::snprintf(buffer, sizeof buffer, f, args...);
  return buffer;
}

struct DenseFixture {
  ModelSpec spec;
  LayerWeights weights;
  Tensor x;
};

DenseFixture random_dense(SplitMix64& rng, std::size_t trainable, double lo, double hi) {
  std::vector<std::size_t> widths;
  for (std::size_t l = 0; l <= trainable; ++l) widths.push_back(2 + rng.index(7));
  DenseFixture f;
  f.spec = testing::dense_spec(widths);
  f.weights = testing::random_weights(f.spec, rng, lo, hi);
  f.x = testing::random_input(f.spec.input_shape, rng);
  return f;
}

// 1
Outcome closed_form_equivalence() {
  const auto start = Clock::now();
  SplitMix64 rng(1001);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const DenseFixture f = random_dense(rng, 3 + rng.index(2), -1.0, 1.0);
    const std::size_t k = f.weights.size();
    const Network net(f.spec, f.weights);
    const auto g = CnfExtractor<double>(f.spec, f.weights, {k, 2}).graph(net.forward(f.x.data()).capture);
    const oracle::Graph og = oracle::dense_graph(f.weights, {f.x.data().begin(), f.x.data().end()}, k);
    for (std::size_t l = 0; l < k; ++l) {
      for (std::size_t i = 0; i < og.cnf[l].size(); ++i) {
        worst = std::max(worst, std::abs(g.cnf[l](static_cast<Eigen::Index>(i)) - og.cnf[l][i]));
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-9 && secs < 5.0, fmt("max |cnf - oracle| = %.3g over 100 networks (<= 1e-9), %.3f s (< 5 s)",
                                           worst, secs)};
}

// 2
Outcome k_sufficiency() {
  SplitMix64 rng(2002);
  int zero_at_k2 = 0;
  for (int n = 0; n < 100; ++n) {
    const DenseFixture f = random_dense(rng, 2 + rng.index(3), -1.0, 1.0);
    const Network net(f.spec, f.weights);
    const auto g = CnfExtractor<double>(f.spec, f.weights, {2, 1}).graph(net.forward(f.x.data()).capture);
    if (g.cnf.back().isZero(0)) ++zero_at_k2;
  }
  int nonzero_at_k3 = 0;
  for (int n = 0; n < 100; ++n) {
    const DenseFixture f = random_dense(rng, 3, 0.05, 1.0);
    ActivationCapture cap;
    for (std::size_t t = 0; t < f.weights.size(); ++t) {
      ActivationMap m(1, static_cast<Eigen::Index>(f.weights[t].bias.size()));
      for (Eigen::Index i = 0; i < m.size(); ++i) m(0, i) = rng.uniform(0.05, 1.0);
      cap.layers.push_back(m);
    }
    const auto g = CnfExtractor<double>(f.spec, f.weights, {3, 1}).graph(cap);
    if (!g.cnf.back().isZero(0)) ++nonzero_at_k3;
  }
  return {zero_at_k2 == 100 && nonzero_at_k3 == 100,
          fmt("K=2 last-layer cnf all-zero on %d/100; K=3 positive fixtures nonzero on %d/100", zero_at_k2,
              nonzero_at_k3)};
}

// 3
double prefix_sum_rauc(const std::vector<int>& ranked) {
  std::vector<int> ideal = ranked;
  std::sort(ideal.rbegin(), ideal.rend());
  double a = 0, b = 0;
  int ca = 0, cb = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    a += ca += ranked[k];
    b += cb += ideal[k];
  }
  return a / b;
}

Outcome rauc_oracle() {
  const std::vector<std::size_t> id4{0, 1, 2, 3};
  const double ideal = rauc(id4, std::vector<std::uint8_t>{1, 1, 0, 0});
  const double six = rauc(id4, std::vector<std::uint8_t>{1, 0, 1, 0});
  const double worst = rauc(id4, std::vector<std::uint8_t>{0, 0, 1, 1});

  std::vector<std::uint8_t> flags(100, 0);
  for (std::size_t i = 0; i < 20; ++i) flags[i * 5] = 1;
  std::mt19937_64 gen(99);
  std::vector<int> ranked(flags.begin(), flags.end());
  double total = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    std::shuffle(ranked.begin(), ranked.end(), gen);
    total += prefix_sum_rauc(ranked);
  }
  const double brute = total / trials;
  const double mean = random_rauc_mean(flags, Cutoff::all(), 1000, 42);
  const bool pass = ideal == 1.0 && std::abs(six - 6.0 / 7.0) <= 1e-12 && std::abs(worst - 3.0 / 7.0) <= 1e-12 &&
                    std::abs(mean - brute) <= 0.03;
  return {pass, fmt("ideal %.17g, [1,0,1,0] %.12f, worst %.12f, random mean %.4f vs brute force %.4f (+-0.03)", ideal,
                    six, worst, mean, brute)};
}

// 4
Outcome deepgini_exactness() {
  FeatureMatrix p = FeatureMatrix::Zero(3, 10);
  p(0, 4) = 1.0;
  p.row(1).setConstant(0.1);
  p(2, 0) = 0.5;
  p(2, 1) = 0.5;
  const Eigen::VectorXd g = deepgini_scores(p);
  const bool pass = std::abs(g(0)) <= 1e-12 && std::abs(g(1) - 0.9) <= 1e-12 && std::abs(g(2) - 0.5) <= 1e-12;
  return {pass, fmt("one-hot %.3g, uniform-10 %.15f, [0.5,0.5] %.15f", g(0), g(1), g(2))};
}

// 5
Outcome gbdt_soundness() {
  bool monotone = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SplitMix64 rng(seed);
    RankTrainSet s{FeatureMatrix(300, 8), {}};
    for (Eigen::Index i = 0; i < 300; ++i) {
      double z = 0;
      for (Eigen::Index j = 0; j < 8; ++j) z += (s.features(i, j) = rng.uniform(-1, 1)) * (j % 3 == 0 ? 1 : -0.5);
      s.labels.push_back(z + rng.uniform(-0.5, 0.5) > 0);
    }
    const std::vector<double> loss = Booster::fit(s).training_loss();
    for (std::size_t r = 1; r < loss.size(); ++r) monotone = monotone && loss[r] <= loss[r - 1];
  }

  SplitMix64 rng(7);
  RankTrainSet line{FeatureMatrix(200, 1), {}};
  for (Eigen::Index i = 0; i < 200; ++i) {
    line.features(i, 0) = rng.uniform(-1, 1);
    line.labels.push_back(line.features(i, 0) > 0);
  }
  BoosterParams p;
  p.num_rounds = 10;
  p.colsample_bytree = 1.0;
  const Eigen::VectorXd s = Booster::fit(line, p).score(line.features);
  const double auc = roc_auc(std::span<const double>(s.data(), 200), line.labels);

  BoosterParams heavy;
  heavy.lambda = 1e9;
  double max_leaf = 0;
  const Booster damped = Booster::fit(line, heavy);
  for (const auto& t : damped.trees()) {
    for (const auto& n : t.nodes) {
      if (n.feature < 0) max_leaf = std::max(max_leaf, std::abs(n.value));
    }
  }
  return {monotone && auc == 1.0 && max_leaf < 1e-6,
          fmt("loss non-increasing on 5 fixtures: %s; 1-D AUC after 10 rounds %.6f; max |leaf| at lambda=1e9 %.3g",
              monotone ? "yes" : "no", auc, max_leaf)};
}

// 6
Outcome end_to_end_efficacy() {
  ExperimentConfig cfg = ExperimentConfig::load(testing::fixture("pipeline_digits.json"));
  double gap_sum = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    const ExperimentReport r = run_experiment(cfg);
    const double actgraph = r.rauc_at(Cutoff::all());
    const double random = random_rauc_mean(r.ranking.flags, Cutoff::all(), 1000, seed);
    gap_sum += actgraph - random;
    per_seed += fmt(" %.3f/%.3f", actgraph, random);
  }
  const double gap = gap_sum / 5;
  return {gap >= 0.15, fmt("mean RAUC-ALL minus random mean = %.4f (>= 0.15); per seed actgraph/random:", gap) +
                           per_seed};
}

// 7
Outcome runtime_budget() {
  const ModelSpec spec = spec_from_json(read_file(testing::fixture("mlp_digits.json")));
  const LabeledDataset train = read_dataset(testing::fixture("digits/train.agtd"), testing::fixture("digits/train.aglb"));
  const LabeledDataset val = read_dataset(testing::fixture("digits/val.agtd"), testing::fixture("digits/val.aglb"));
  const LabeledDataset test = read_dataset(testing::fixture("digits/test.agtd"), testing::fixture("digits/test.aglb"));
  TrainOptions opts;
  opts.epochs = 50;
  const Network net(spec, train_sgd(spec, train, opts).weights);
  const CnfExtractor<double> extractor(spec, net.weights());
  const InferenceResult vinf = run_inference(net, val.inputs, &extractor);
  const Booster ranker =
      Booster::fit(balance_trainset(vinf.graph, label_faults(vinf.predicted, val.labels), 200, 5));

  auto cases = [&](std::size_t n) {
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i % test.size();
    return test.inputs.select_rows(rows);
  };
  const Tensor five = cases(5000);
  const Tensor ten = cases(10000);
  auto prioritize_all = [&](const Tensor& inputs) {
    const auto start = Clock::now();
    const InferenceResult inf = run_inference(net, inputs, &extractor, 1);
    const Eigen::VectorXd s = ranker.score(inf.graph);
    const RankedList r = prioritize(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
    if (r.order.size() != inputs.rows()) std::abort();
    return seconds_since(start);
  };
  auto median_of = [&](const Tensor& inputs) {
    std::vector<double> t;
    for (int rep = 0; rep < 5; ++rep) t.push_back(prioritize_all(inputs));
    std::sort(t.begin(), t.end());
    return t[2];
  };
  const double t5 = median_of(five);
  const double t10 = median_of(ten);
  const double ratio = t10 / t5;
  return {t10 <= 60.0 && ratio >= 1.4 && ratio <= 2.6,
          fmt("10000 cases in %.3f s (<= 60 s); 5000 in %.3f s; ratio %.3f (in [1.4, 2.6])", t10, t5, ratio)};
}

// 8
int shell(const std::string& cmd) { return std::system(cmd.c_str()); }

std::string strip_timings(const std::string& report) {
  auto j = nlohmann::json::parse(report);
  j.erase("timings_ms");
  return j.dump();
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "actgraph_acceptance_determinism";
  fs::remove_all(root);
  const std::string cli = ACTGRAPH_CLI;
  const auto fx = [](const std::string& name) { return testing::fixture(name).string(); };
  std::vector<std::string> failures;
  std::size_t compared = 0;
  std::vector<std::vector<std::string>> artifacts(2);
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / std::to_string(run);
    fs::create_directories(dir);
    const auto p = [&](const std::string& name) { return (dir / name).string(); };
    const std::string test_in = " --inputs " + fx("digits/test.agtd");
    const std::string model = " --model " + p("m.agmf");
    const std::vector<std::pair<std::string, std::string>> steps{
        {"train-dnn", "train-dnn --spec " + fx("mlp_digits.json") + " --inputs " + fx("digits/train.agtd") +
                          " --labels " + fx("digits/train.aglb") + " --epochs 50 --out " + p("m.agmf")},
        {"corrupt", "corrupt --inputs " + fx("digits/test.agtd") + " --labels " + fx("digits/test.aglb") +
                        " --ops 'rotate:90;flip:h;translate:2,0' --out-inputs " + p("c.agtd") + " --out-labels " +
                        p("c.aglb")},
        {"faults", "faults" + model + test_in + " --labels " + fx("digits/test.aglb") + " --out " + p("flags.aglb")},
        {"score-gini", "score --method gini" + model + test_in + " --out " + p("gini.csv")},
        {"score-mcp", "score --method mcp" + model + test_in + " --out " + p("mcp.csv")},
        {"score-dsa", "score --method dsa" + model + test_in + " --train-inputs " + fx("digits/train.agtd") +
                          " --train-labels " + fx("digits/train.aglb") + " --out " + p("dsa.csv")},
        {"features", "features" + model + test_in + " --out " + p("features.csv")},
        {"fit-ranker", "fit-ranker --method actgraph" + model + " --inputs " + fx("digits/val.agtd") + " --labels " +
                           fx("digits/val.aglb") + " --out " + p("ranker.json")},
        {"rank", "rank --method actgraph" + model + " --ranker " + p("ranker.json") + test_in + " --out " +
                     p("ranked.csv")},
        {"evaluate", "evaluate --scores " + p("ranked.csv") + " --flags " + p("flags.aglb") +
                         " --random-shuffles 1000"},
        {"export-graph", "export-graph" + model + test_in + " --index 5 --dot " + p("g.dot") + " --csv " + p("g.csv")},
        {"distances", "distances" + model + test_in + " --types " + fx("digits/test.aglb") + " --out " +
                          p("dist.csv")},
        {"pipeline", "pipeline --config " + fx("pipeline_digits.json") + " --out " + p("pipeline")},
    };
    for (const auto& [name, args] : steps) {
      const std::string out = p(name + ".stdout");
      if (shell(cli + " " + args + " >" + out + " 2>" + p(name + ".stderr")) != 0) failures.push_back(name + " failed");
    }
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const std::string rel = fs::relative(entry.path(), dir).string();
      std::string bytes = read_file(entry.path());
      if (rel == "pipeline/report.json") bytes = strip_timings(bytes);
      artifacts[static_cast<std::size_t>(run)].push_back(rel + "\n" + bytes);
    }
    std::sort(artifacts[static_cast<std::size_t>(run)].begin(), artifacts[static_cast<std::size_t>(run)].end());
  }
  if (artifacts[0].size() != artifacts[1].size()) failures.push_back("artifact sets differ");
  for (std::size_t i = 0; i < std::min(artifacts[0].size(), artifacts[1].size()); ++i) {
    ++compared;
    if (artifacts[0][i] != artifacts[1][i]) failures.push_back(artifacts[0][i].substr(0, artifacts[0][i].find('\n')));
  }
  fs::remove_all(root);
  std::string detail = fmt("%zu artifacts across 13 workflows compared byte for byte", compared);
  for (const auto& f : failures) detail += "; differs: " + f;
  return {failures.empty() && compared > 0, detail};
}

// 9
Outcome gradient_check() {
  ModelSpec spec;
  spec.input_shape = {1};
  spec.layers = {DenseSpec{1, 2}, SoftmaxSpec{}};
  spec.num_classes = 2;
  Network net(spec, {{Tensor({1, 2}, {0.7f, -0.4f}), Tensor({2}, {0.0f, 0.0f})}});
  const std::vector<float> x{1.3f};
  double worst = 0;
  for (std::uint32_t label : {0u, 1u}) {
    Gradients g = net.zero_gradients();
    net.loss_and_gradients(x, label, &g);
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
      const double p = net.parameter(i), h = 1e-6;
      net.set_parameter(i, p + h);
      const double up = net.loss_and_gradients(x, label, nullptr);
      net.set_parameter(i, p - h);
      const double down = net.loss_and_gradients(x, label, nullptr);
      net.set_parameter(i, p);
      const double numeric = (up - down) / (2 * h);
      const double analytic = net.gradient_entry(g, i);
      worst = std::max(worst, std::abs(analytic - numeric) / std::max(std::abs(analytic), std::abs(numeric)));
    }
  }
  return {worst <= 1e-4 && net.parameter_count() == 4,
          fmt("max relative error %.3g over %zu parameters (2 weights, 2 biases) x 2 labels (<= 1e-4)", worst,
              net.parameter_count())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 closed-form cnf equivalence", closed_form_equivalence},
      {"AC2 K-sufficiency", k_sufficiency},
      {"AC3 RAUC oracle", rauc_oracle},
      {"AC4 DeepGini exactness", deepgini_exactness},
      {"AC5 GBDT soundness", gbdt_soundness},
      {"AC6 end-to-end efficacy", end_to_end_efficacy},
      {"AC7 runtime budget", runtime_budget},
      {"AC8 CLI determinism", cli_determinism},
      {"AC9 gradient check", gradient_check},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
