#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "actgraph/error.hpp"
#include "actgraph/graph.hpp"
#include "actgraph/tensor_io.hpp"
#include "graph_oracle.hpp"
#include "test_support.hpp"

namespace actgraph {
namespace {

using testing::fixture;

ActivationMap row(std::initializer_list<double> values) {
  ActivationMap m(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) m(0, i++) = v;
  return m;
}

/// Trainable sizes [2, 2, 2, 2]; the last three layers reproduce the chain
/// example when given W01 = I and W12 = [[1, 1], [0, 0]].
struct Chain {
  ModelSpec spec = testing::dense_spec({2, 2, 2, 2, 2});
  LayerWeights weights{{Tensor({2, 2}, {0.5f, 0.2f, -0.3f, 0.8f}), Tensor({2}, {0, 0})},
                       {Tensor({2, 2}, {0.3f, -0.2f, 0.1f, 0.4f}), Tensor({2}, {0, 0})},
                       {Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2}, {0, 0})},
                       {Tensor({2, 2}, {1, 1, 0, 0}), Tensor({2}, {0, 0})}};
  ActivationCapture capture{{row({0.7, 0.1}), row({0, 1}), row({1, 0}), row({0, 1})}};
};

TEST(Skeleton, DenseBlockNormalisation) {
  const Matrix<double> w = average_kernel(Tensor({2, 2}, {2, 0, 0, 2}), 2);
  EXPECT_EQ(w, (Matrix<double>(2, 2) << 2, 0, 0, 2).finished());
  EXPECT_EQ(min_max_normalized(w), Matrix<double>::Identity(2, 2));
  const Matrix<double> constant = average_kernel(Tensor({2, 2}, {3, 3, 3, 3}), 2);
  EXPECT_TRUE(min_max_normalized(constant).isZero(0));
}

TEST(Skeleton, ConvKernelAveragesSpatialSlice) {
  // [kh, kw, in, out] = [2, 2, 1, 1], all ones
  const Matrix<double> w = average_kernel(Tensor({2, 2, 1, 1}, {1, 1, 1, 1}), 1);
  ASSERT_EQ(w.size(), 1);
  EXPECT_DOUBLE_EQ(w(0, 0), 1.0);
  // two input filters; filter 1 carries 2s, filter 0 carries 4s
  const Matrix<double> w2 = average_kernel(Tensor({2, 1, 2, 1}, {4, 2, 4, 2}), 2);
  EXPECT_DOUBLE_EQ(w2(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(w2(1, 0), 2.0);
}

TEST(Skeleton, ConvToDenseAveragesFlattenedPositions) {
  // 2x1 map with 2 filters flattened HWC: rows are (p0,f0) (p0,f1) (p1,f0) (p1,f1)
  const Matrix<double> w = average_kernel(Tensor({4, 1}, {1, 10, 3, 20}), 2);
  EXPECT_DOUBLE_EQ(w(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(w(1, 0), 15.0);
  EXPECT_THROW(average_kernel(Tensor({3, 1}, {1, 2, 3}), 2), Error);
}

TEST(Skeleton, RejectsBadK) {
  const Chain c;
  EXPECT_THROW(build_skeleton(c.spec, c.weights, 1), Error);
  EXPECT_THROW(build_skeleton(c.spec, c.weights, 5), Error);
  EXPECT_EQ(build_skeleton(c.spec, c.weights, 4).layer_sizes.size(), 4u);
}

TEST(Trace, SpatialMeanThenMinMax) {
  ActivationMap map(4, 1);
  map << 1, 2, 3, 4;  // 2x2 map of one filter, flattened
  ActivationCapture single{{map, row({0.5, 0.5})}};
  ActivationMap pair(4, 2);
  pair << 1, 0, 2, 0, 3, 0, 4, 8;
  EXPECT_DOUBLE_EQ(pair.colwise().mean()(0), 2.5);
  const auto t = trace_activations<double>(ActivationCapture{{pair, row({2, 4, 6})}}, 2);
  EXPECT_DOUBLE_EQ(t.phi[0](0), 1.0);  // 2.5 vs 2.0
  EXPECT_DOUBLE_EQ(t.phi[0](1), 0.0);
  EXPECT_EQ(t.phi[1], (Vector<double>(3) << 0, 0.5, 1).finished());
  const auto flat = trace_activations<double>(ActivationCapture{{row({5, 5})}}, 1);
  EXPECT_TRUE(flat.phi[0].isZero(0));
  EXPECT_THROW(trace_activations<double>(single, 3), Error);
}

TEST(Graph, AdjacencyAndNodeFeatureArithmetic) {
  GraphSkeleton<double> sk{{3, 1}, {(Matrix<double>(3, 1) << 0.2, 0.4, 0.6).finished()}};
  ActivationTrace<double> tr{{Vector<double>::Zero(3), (Vector<double>(1) << 0.5).finished()}};
  const auto g = build_graph(sk, tr);
  EXPECT_NEAR(g.adjacency[0](0, 0), 0.1, 1e-15);
  EXPECT_NEAR(g.adjacency[0](2, 0), 0.3, 1e-15);
  EXPECT_NEAR(g.nf[1](0), 0.6, 1e-15);

  GraphSkeleton<double> one{{1, 1}, {(Matrix<double>(1, 1) << 0.3).finished()}};
  ActivationTrace<double> half{{Vector<double>::Zero(1), (Vector<double>(1) << 0.5).finished()}};
  EXPECT_DOUBLE_EQ(build_graph(one, half).adjacency[0](0, 0), 0.15);
}

TEST(Graph, ThreeLayerChain) {
  const Chain c;
  const CnfExtractor<double> ex(c.spec, c.weights, {3, 2});
  const auto g = ex.graph(c.capture);
  EXPECT_EQ(g.nf[1], (Vector<double>(2) << 1, 0).finished());
  EXPECT_EQ(g.nf[2], (Vector<double>(2) << 0, 1).finished());
  EXPECT_EQ(g.cnf[1], (Vector<double>(2) << 0, 0).finished());
  EXPECT_EQ(g.cnf[2], (Vector<double>(2) << 0, 1).finished());
  EXPECT_EQ(ex(c.capture), (Vector<double>(4) << 0, 0, 0, 1).finished());
  EXPECT_EQ(extract_features(c.spec, c.weights, c.capture, 3), (Vector<double>(4) << 0, 0, 0, 1).finished());

  // same matrices through the loop oracle
  std::vector<oracle::Mat> kernels;
  for (const auto& p : c.weights) kernels.push_back(oracle::kernel_matrix(p.kernel));
  const auto og = oracle::graph(kernels, {{0.7, 0.1}, {0, 1}, {1, 0}, {0, 1}}, 3);
  EXPECT_EQ(oracle::features(og), (oracle::Vec{0, 0, 0, 1}));
}

TEST(Graph, MismatchedTraceIsRejected) {
  GraphSkeleton<double> sk{{2, 2}, {Matrix<double>::Ones(2, 2)}};
  ActivationTrace<double> tr{{Vector<double>::Zero(2), Vector<double>::Zero(3)}};
  EXPECT_THROW(build_graph(sk, tr), Error);
  ActivationTrace<double> shallow{{Vector<double>::Zero(2)}};
  EXPECT_THROW(build_graph(sk, shallow), Error);
}

ModelSpec lenet5() {
  ModelSpec spec;
  spec.input_shape = {32, 32, 1};
  spec.layers = {Conv2DSpec{1, 6, 5, 5}, ReLUSpec{},         MaxPoolSpec{}, Conv2DSpec{6, 16, 5, 5}, ReLUSpec{},
                 MaxPoolSpec{},          FlattenSpec{},      DenseSpec{400, 120}, ReLUSpec{}, DenseSpec{120, 84},
                 ReLUSpec{},             DenseSpec{84, 10}, SoftmaxSpec{}};
  spec.num_classes = 10;
  return spec;
}

TEST(Features, LenetShapedToyHas94Dimensions) {
  const ModelSpec spec = lenet5();
  SplitMix64 rng(4);
  const LayerWeights w = testing::random_weights(spec, rng, -0.2, 0.2);
  const CnfExtractor<double> ex(spec, w);
  EXPECT_EQ(ex.dimension(), 94u);
  EXPECT_EQ(ex.skeleton().layer_sizes, (std::vector<std::size_t>{16, 120, 84, 10}));
  const Network net(spec, w);
  const auto f = ex(net.forward(testing::random_input(spec.input_shape, rng).data()).capture);
  EXPECT_EQ(f.size(), 94);
  EXPECT_TRUE(f.allFinite());
}

TEST(Features, ZeroWeightNetworkGivesZeroFeatures) {
  const ModelSpec spec = testing::dense_spec({3, 4, 4, 4, 3});
  LayerWeights w;
  for (std::size_t t : trainable_layers(spec)) {
    const Shape ks = kernel_shape(spec.layers[t]);
    w.push_back({Tensor::zeros(ks), Tensor::zeros({ks.back()})});
  }
  SplitMix64 rng(2);
  const Network net(spec, w);
  const auto f = extract_features(spec, w, net.forward(testing::random_input({3}, rng).data()).capture);
  EXPECT_TRUE(f.isZero(0));
}

TEST(Features, ConvFixtureMatchesOracle) {
  const Model m = load_model(fixture("conv_small.agmf"));
  const Tensor inputs = read_tensor(fixture("conv_inputs.agtd"));
  std::ifstream in(fixture("conv_expected.json"));
  const auto expected = nlohmann::json::parse(in);
  const Network net(m.spec, m.weights);
  const CnfExtractor<double> ex(m.spec, m.weights, {expected["k"].get<std::size_t>(), 2});
  const double threshold = expected["threshold"].get<double>();
  for (std::size_t c = 0; c < inputs.rows(); ++c) {
    const auto& e = expected["cases"][c];
    const ActivationCapture cap = net.forward(inputs.row(c)).capture;
    const auto g = ex.graph(cap);
    for (std::size_t l = 0; l < g.layer_sizes.size(); ++l) {
      for (std::size_t i = 0; i < g.layer_sizes[l]; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        EXPECT_NEAR(trace_activations<double>(cap, 4).phi[l](ii), e["phi"][l][i].get<double>(), 1e-9);
        EXPECT_NEAR(g.nf[l](ii), e["nf"][l][i].get<double>(), 1e-9);
        EXPECT_NEAR(g.cnf[l](ii), e["cnf"][l][i].get<double>(), 1e-9);
      }
    }
    const auto f = ex(cap);
    ASSERT_EQ(static_cast<std::size_t>(f.size()), e["features"].size());
    for (std::size_t i = 0; i < e["features"].size(); ++i) {
      EXPECT_NEAR(f(static_cast<Eigen::Index>(i)), e["features"][i].get<double>(), 1e-9);
    }
    EXPECT_EQ(export_graph(g, threshold).edge_count, e["edges_at_threshold"].get<std::size_t>()) << "case " << c;
  }
}

TEST(Export, ThresholdBounds) {
  const Model m = load_model(fixture("conv_small.agmf"));
  const Tensor inputs = read_tensor(fixture("conv_inputs.agtd"));
  const Network net(m.spec, m.weights);
  const CnfExtractor<double> ex(m.spec, m.weights);
  const auto g = ex.graph(net.forward(inputs.row(0)).capture);
  std::size_t nonzero = 0;
  for (const auto& a : g.adjacency) nonzero += static_cast<std::size_t>((a.array() > 0).count());
  EXPECT_EQ(export_graph(g, 1.1).edge_count, 0u);
  EXPECT_EQ(export_graph(g, 0.0).edge_count, nonzero);
  const GraphExport e = export_graph(g, 0.4);
  EXPECT_EQ(static_cast<std::size_t>(std::count(e.csv.begin(), e.csv.end(), '\n')), e.edge_count + 1);
  EXPECT_EQ(e.csv.rfind("source_layer,source,target_layer,target,weight\n", 0), 0u);
  EXPECT_NE(e.dot.find("digraph"), std::string::npos);
}

struct RandomDense {
  ModelSpec spec;
  LayerWeights weights;
  Tensor x;
};

RandomDense random_dense(SplitMix64& rng, std::size_t layers, double lo, double hi) {
  std::vector<std::size_t> widths{2 + rng.index(7)};
  for (std::size_t l = 0; l < layers; ++l) widths.push_back(2 + rng.index(7));
  RandomDense r;
  r.spec = testing::dense_spec(widths);
  r.weights = testing::random_weights(r.spec, rng, lo, hi);
  r.x = testing::random_input(r.spec.input_shape, rng);
  return r;
}

oracle::Vec as_vec(std::span<const float> x) { return {x.begin(), x.end()}; }

TEST(Properties, ClosedFormEquivalence) {
  SplitMix64 rng(101);
  for (int n = 0; n < 100; ++n) {
    const RandomDense r = random_dense(rng, 3 + rng.index(2), -1.0, 1.0);
    const std::size_t k = trainable_layers(r.spec).size();
    const Network net(r.spec, r.weights);
    const CnfExtractor<double> ex(r.spec, r.weights, {k, 2});
    const auto g = ex.graph(net.forward(r.x.data()).capture);
    const oracle::Graph og = oracle::dense_graph(r.weights, as_vec(r.x.data()), k);
    for (std::size_t l = 0; l < k; ++l) {
      for (std::size_t i = 0; i < og.cnf[l].size(); ++i) {
        EXPECT_NEAR(g.cnf[l](static_cast<Eigen::Index>(i)), og.cnf[l][i], 1e-9);
        EXPECT_NEAR(g.nf[l](static_cast<Eigen::Index>(i)), og.nf[l][i], 1e-9);
      }
    }
  }
}

TEST(Properties, KSufficiency) {
  SplitMix64 rng(202);
  for (int n = 0; n < 100; ++n) {
    const RandomDense r = random_dense(rng, 3, -1.0, 1.0);
    const Network net(r.spec, r.weights);
    const ActivationCapture cap = net.forward(r.x.data()).capture;
    const auto g = CnfExtractor<double>(r.spec, r.weights, {2, 1}).graph(cap);
    EXPECT_TRUE(g.cnf.back().isZero(0));
  }
}

TEST(Properties, RangesHold) {
  SplitMix64 rng(303);
  for (int n = 0; n < 50; ++n) {
    const RandomDense r = random_dense(rng, 3, -1.0, 1.0);
    const Network net(r.spec, r.weights);
    const CnfExtractor<double> ex(r.spec, r.weights, {3, 2});
    const ActivationCapture cap = net.forward(r.x.data()).capture;
    const auto tr = trace_activations<double>(cap, 3);
    const auto g = ex.graph(cap);
    for (const auto& p : tr.phi) EXPECT_TRUE((p.array() >= 0).all() && (p.array() <= 1).all());
    for (const auto& w : ex.skeleton().weight_blocks) EXPECT_TRUE((w.array() >= 0).all() && (w.array() <= 1).all());
    for (std::size_t l = 0; l < g.adjacency.size(); ++l) {
      const auto& a = g.adjacency[l];
      EXPECT_TRUE((a.array() >= 0).all() && (a.array() <= 1).all());
      EXPECT_TRUE((g.nf[l + 1].array() >= 0).all());
      EXPECT_TRUE((g.nf[l + 1].array() <= static_cast<double>(a.rows())).all());
    }
  }
}

TEST(Properties, ScaleInvariance) {
  SplitMix64 rng(404);
  for (int n = 0; n < 20; ++n) {
    ActivationMap map(3, 5);
    for (Eigen::Index i = 0; i < map.size(); ++i) map.data()[i] = rng.uniform(0, 4);
    const double c = rng.uniform(0.01, 100.0);
    const auto a = trace_activations<double>(ActivationCapture{{map}}, 1);
    const auto b = trace_activations<double>(ActivationCapture{{ActivationMap(map * c)}}, 1);
    EXPECT_LE((a.phi[0] - b.phi[0]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Properties, PurityAndFloatInstantiation) {
  SplitMix64 rng(505);
  const RandomDense r = random_dense(rng, 4, -1.0, 1.0);
  const Network net(r.spec, r.weights);
  const ActivationCapture cap = net.forward(r.x.data()).capture;
  const auto a = extract_features(r.spec, r.weights, cap);
  const auto b = extract_features(r.spec, r.weights, cap);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())), 0);
  const auto f = extract_features<float>(r.spec, r.weights, cap);
  EXPECT_LE((a - f.cast<double>()).cwiseAbs().maxCoeff(), 1e-4);
}

}  // namespace
}  // namespace actgraph
