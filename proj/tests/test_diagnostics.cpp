#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "gda/diagnostics.hpp"
#include "gda/sbm.hpp"
#include "gda/trainer.hpp"

using namespace gda;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

Mat<double> random_mat(std::size_t rows, std::size_t cols, std::mt19937& rng,
                       double scale = 1.0) {
  Mat<double> m(rows, cols);
  std::normal_distribution<double> dist(0.0, scale);
  for (auto& v : m.v) v = dist(rng);
  return m;
}

Csr path_csr(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return build_csr(n, edges);
}

// Independent AUC: all-pairs comparison with half credit for ties.
double auc_oracle(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0;
  for (double p : pos)
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

// Spectral norm of W via power iteration on W^T W.
double spectral_norm_oracle(const Mat<double>& w) {
  std::vector<double> v(w.cols, 1.0);
  for (int it = 0; it < 500; ++it) {
    std::vector<double> wu(w.rows, 0.0), next(w.cols, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i)
      for (std::size_t j = 0; j < w.cols; ++j) wu[i] += w(i, j) * v[j];
    for (std::size_t i = 0; i < w.rows; ++i)
      for (std::size_t j = 0; j < w.cols; ++j) next[j] += w(i, j) * wu[i];
    double norm = 0;
    for (double e : next) norm += e * e;
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < w.cols; ++j) v[j] = next[j] / norm;
  }
  std::vector<double> wu(w.rows, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i)
    for (std::size_t j = 0; j < w.cols; ++j) wu[i] += w(i, j) * v[j];
  double num = 0;
  for (double e : wu) num += e * e;
  return std::sqrt(num);
}

HeadFn linear_softmax(const Mat<double>& w) {
  return [w](const std::vector<double>& x) {
    std::vector<double> z(w.cols, 0.0);
    for (std::size_t c = 0; c < w.cols; ++c)
      for (std::size_t j = 0; j < w.rows; ++j) z[c] += x[j] * w(j, c);
    const double mx = *std::max_element(z.begin(), z.end());
    double denom = 0;
    for (double& v : z) {
      v = std::exp(v - mx);
      denom += v;
    }
    for (double& v : z) v /= denom;
    return z;
  };
}

double vec_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("rank_auc anchors and oracle agreement") {
  SECTION("perfect separation") {
    REQUIRE(rank_auc({0.9, 0.8, 0.7}, {0.3, 0.2}) == 1.0);
    REQUIRE(rank_auc({0.1}, {0.5, 0.6}) == 0.0);
  }

  SECTION("all scores equal") {
    REQUIRE(rank_auc({0.5, 0.5}, {0.5, 0.5, 0.5}) == 0.5);
  }

  SECTION("random scores with ties match the all-pairs oracle") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<double> pos(8), neg(11);
      // quantized draws force plenty of ties
      for (auto& v : pos) v = uniform_below(rng, 5) / 4.0;
      for (auto& v : neg) v = uniform_below(rng, 5) / 4.0;
      REQUIRE(rank_auc(pos, neg) == Approx(auc_oracle(pos, neg)).epsilon(1e-12));
    }
  }

  SECTION("invariance under strictly monotone transforms") {
    std::mt19937 rng(5);
    std::vector<double> pos(7), neg(9);
    for (auto& v : pos) v = uniform01(rng);
    for (auto& v : neg) v = uniform01(rng);
    const double base = rank_auc(pos, neg);
    auto squash = [](std::vector<double> v) {
      for (auto& e : v) e = 1.0 / (1.0 + std::exp(-3.0 * e + 1.0));
      return v;
    };
    REQUIRE(rank_auc(squash(pos), squash(neg)) == base);
  }
}

TEST_CASE("edge_auc separates a perfect scorer and collapses on a constant one") {
  Graph g;
  g.num_nodes = 4;
  g.adj = build_csr(4, {{0, 1}, {2, 3}});
  g.features = Mat<double>(4, 1);
  g.features.v = {1.0, 1.0, -1.0, -1.0};
  g.num_classes = 2;
  g.labels = {0, 0, 1, 1};

  ModelSpec spec;
  spec.in_dim = 1;
  spec.hidden_dim = 1;
  spec.num_layers = 1;
  spec.num_classes = 2;
  spec.classifier_hidden = 2;
  spec.link_hidden = 2;
  std::mt19937 rng(1);
  ModelBundle<double> bundle(spec, rng);
  bundle.sage.layers[0].w_self.value() = {1.0};
  bundle.sage.layers[0].w_neigh.value() = {0.0};
  bundle.sage.layers[0].b.value() = {0.0};
  bundle.link_mlp.l1.w.value() = {10.0, -10.0};
  bundle.link_mlp.l1.b.value() = {0.0, 0.0};
  bundle.link_mlp.l2.w.value() = {10.0, -10.0};
  bundle.link_mlp.l2.b.value() = {0.0};

  const EdgeSet negs{{{0, 2}, {1, 3}}};
  REQUIRE(edge_auc(bundle, g, negs) == 1.0);

  bundle.link_mlp.l2.w.value() = {0.0, 0.0};  // constant score 0.5 everywhere
  REQUIRE(edge_auc(bundle, g, negs) == 0.5);
}

TEST_CASE("xi1_estimate statistics") {
  SECTION("hand distances") {
    Mat<double> emb(2, 2);
    emb(0, 0) = 0.0;
    emb(0, 1) = 0.0;
    emb(1, 0) = 3.0;
    emb(1, 1) = 4.0;
    const std::vector<std::pair<int, int>> edges{{0, 1}};
    REQUIRE(xi1_estimate(emb, edges, Xi1Stat::max) == 5.0);
    REQUIRE(xi1_estimate(emb, edges, Xi1Stat::mean) == 5.0);
  }

  SECTION("identical embeddings give zero") {
    Mat<double> emb(4, 3, 0.7);
    const std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 3}};
    for (auto stat : {Xi1Stat::max, Xi1Stat::mean})
      REQUIRE(xi1_estimate(emb, edges, stat) == 0.0);
  }

  SECTION("max matches a loop oracle and dominates the mean") {
    std::mt19937 rng(7);
    const Mat<double> emb = random_mat(12, 4, rng);
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < 12; ++u)
      for (int v = u + 1; v < 12; ++v)
        if (uniform01(rng) < 0.3) edges.emplace_back(u, v);
    double mx = 0, mean = 0;
    for (const auto& [u, v] : edges) {
      double acc = 0;
      for (int j = 0; j < 4; ++j) acc += (emb(u, j) - emb(v, j)) * (emb(u, j) - emb(v, j));
      mx = std::max(mx, std::sqrt(acc));
      mean += std::sqrt(acc);
    }
    mean /= static_cast<double>(edges.size());
    REQUIRE(xi1_estimate(emb, edges, Xi1Stat::max) == Approx(mx).epsilon(1e-14));
    REQUIRE(xi1_estimate(emb, edges, Xi1Stat::mean) == Approx(mean).epsilon(1e-12));
    REQUIRE(xi1_estimate(emb, edges, Xi1Stat::max) >=
            xi1_estimate(emb, edges, Xi1Stat::mean));
    REQUIRE(xi1_estimate(emb, edges, Xi1Stat::quantile, 1.0) ==
            xi1_estimate(emb, edges, Xi1Stat::max));
  }

  SECTION("empty edge list and quantile bounds") {
    Mat<double> emb(3, 2);
    REQUIRE(xi1_estimate(emb, {}, Xi1Stat::max) == 0.0);
    const std::vector<std::pair<int, int>> edges{{0, 1}};
    REQUIRE_THROWS_AS(xi1_estimate(emb, edges, Xi1Stat::quantile, 0.0), std::invalid_argument);
  }
}

TEST_CASE("empirical_lipschitz estimates") {
  std::mt19937 rng(11);

  SECTION("identity head gives exactly one") {
    const Mat<double> emb = random_mat(6, 3, rng);
    const auto identity = [](const std::vector<double>& x) { return x; };
    const auto est = empirical_lipschitz(identity, emb, {{0, 1}, {2, 3}, {4, 5}});
    REQUIRE_FALSE(est.degenerate);
    REQUIRE(est.value == 1.0);
  }

  SECTION("linear head is bounded by the spectral norm") {
    const Mat<double> w = random_mat(4, 3, rng);
    const auto linear = [&w](const std::vector<double>& x) {
      std::vector<double> z(w.cols, 0.0);
      for (std::size_t c = 0; c < w.cols; ++c)
        for (std::size_t j = 0; j < w.rows; ++j) z[c] += x[j] * w(j, c);
      return z;
    };
    const Mat<double> emb = random_mat(20, 4, rng);
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < 20; ++u)
      for (int v = u + 1; v < 20; ++v)
        if (uniform01(rng) < 0.25) edges.emplace_back(u, v);
    const auto est = empirical_lipschitz(linear, emb, edges);
    REQUIRE_FALSE(est.degenerate);
    REQUIRE(est.value > 0.0);
    REQUIRE(est.value <= spectral_norm_oracle(w) * (1.0 + 1e-12));
  }

  SECTION("identical endpoints everywhere flag degeneracy") {
    Mat<double> emb(4, 2, 1.5);  // every row equal
    const auto identity = [](const std::vector<double>& x) { return x; };
    const auto est = empirical_lipschitz(identity, emb, {{0, 1}, {2, 3}});
    REQUIRE(est.degenerate);
    REQUIRE(est.value == 0.0);
  }
}

TEST_CASE("bound report with shared heads is identically zero on the left") {
  std::mt19937 rng(13);
  const Mat<double> emb = random_mat(15, 3, rng);
  const Mat<double> w = random_mat(3, 4, rng);
  const HeadFn g = linear_softmax(w);
  const Csr adj = path_csr(15);
  const BoundReport report = bound_report_from_embeddings(g, g, emb, adj, 0.1);

  REQUIRE(report.components.size() == 1);
  REQUIRE(report.components[0].anchor_disagreement == 0.0);
  REQUIRE(report.components[0].lhs_estimate == 0.0);
  REQUIRE(report.disagreement_rate == 0.0);
  REQUIRE(report.telescope_checked == 15);
  REQUIRE(report.telescope_violations == 0);
}

TEST_CASE("bound report matches a spreadsheet computation on a 10-node path") {
  std::mt19937 rng(17);
  const Mat<double> emb = random_mat(10, 3, rng);
  const Mat<double> w1 = random_mat(3, 3, rng, 0.8);
  const Mat<double> w2 = random_mat(3, 3, rng, 0.8);
  const HeadFn g1 = linear_softmax(w1);
  const HeadFn g2 = linear_softmax(w2);
  const Csr adj = path_csr(10);
  const double xi2 = 0.07;
  const BoundReport report = bound_report_from_embeddings(g1, g2, emb, adj, xi2);

  // everything below recomputed from scratch
  std::vector<double> d(10);
  std::vector<int> a1(10), a2(10);
  for (int u = 0; u < 10; ++u) {
    const auto o1 = g1(emb.row_copy(u));
    const auto o2 = g2(emb.row_copy(u));
    d[u] = vec_l2(o1, o2);
    a1[u] = static_cast<int>(std::max_element(o1.begin(), o1.end()) - o1.begin());
    a2[u] = static_cast<int>(std::max_element(o2.begin(), o2.end()) - o2.begin());
  }
  const int anchor =
      static_cast<int>(std::min_element(d.begin(), d.end()) - d.begin());
  double xi1 = 0, l1 = 0, l2 = 0, k_avg = 0;
  for (int u = 0; u + 1 < 10; ++u) {
    const double dx = vec_l2(emb.row_copy(u), emb.row_copy(u + 1));
    xi1 = std::max(xi1, dx);
    l1 = std::max(l1, vec_l2(g1(emb.row_copy(u)), g1(emb.row_copy(u + 1))) / dx);
    l2 = std::max(l2, vec_l2(g2(emb.row_copy(u)), g2(emb.row_copy(u + 1))) / dx);
  }
  int disagrees = 0;
  for (int u = 0; u < 10; ++u) {
    k_avg += std::abs(u - anchor);  // hop distance on a path
    if (a1[u] != a2[u]) ++disagrees;
  }
  k_avg /= 10.0;
  const double rhs = (d[anchor] + k_avg * (l1 + l2) * xi1) / xi2;

  REQUIRE(report.components.size() == 1);
  const ComponentBound& cb = report.components[0];
  REQUIRE(cb.size == 10);
  REQUIRE(cb.anchor == anchor);
  REQUIRE(cb.anchor_disagreement == Approx(d[anchor]).epsilon(1e-12));
  REQUIRE(cb.k_avg == Approx(k_avg).epsilon(1e-12));
  REQUIRE(cb.lhs_estimate == Approx(disagrees / 10.0).epsilon(1e-12));
  REQUIRE(report.xi1 == Approx(xi1).epsilon(1e-12));
  REQUIRE(report.l1 == Approx(l1).epsilon(1e-12));
  REQUIRE(report.l2 == Approx(l2).epsilon(1e-12));
  REQUIRE(cb.rhs_estimate == Approx(rhs).epsilon(1e-12));
  REQUIRE(report.rhs_estimate == Approx(rhs).epsilon(1e-12));

  // per-node telescoped inequality, recomputed
  for (int u = 0; u < 10; ++u)
    REQUIRE(d[u] <= d[anchor] + std::abs(u - anchor) * (l1 + l2) * xi1 + 1e-12);
  REQUIRE(report.telescope_violations == 0);
  REQUIRE(report.telescope_checked == 10);
  REQUIRE(report.telescope_max_slack <= 0.0);
}

TEST_CASE("bound report splits components and validates input") {
  std::mt19937 rng(19);
  const Mat<double> emb = random_mat(7, 2, rng);
  const HeadFn g1 = linear_softmax(random_mat(2, 3, rng));
  const HeadFn g2 = linear_softmax(random_mat(2, 3, rng));
  // two triangles and an isolated node
  const Csr adj = build_csr(7, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  const BoundReport report = bound_report_from_embeddings(g1, g2, emb, adj, 0.1);
  REQUIRE(report.components.size() == 3);
  int total = 0;
  for (const auto& cb : report.components) {
    total += cb.size;
    REQUIRE(cb.lhs_estimate >= 0.0);
    REQUIRE(cb.lhs_estimate <= 1.0);
  }
  REQUIRE(total == 7);
  REQUIRE(report.disagreement_rate >= 0.0);
  REQUIRE(report.disagreement_rate <= 1.0);

  REQUIRE_THROWS_AS(bound_report_from_embeddings(g1, g2, emb, adj, 0.0), std::invalid_argument);
  const Mat<double> short_emb = random_mat(5, 2, rng);
  REQUIRE_THROWS_AS(bound_report_from_embeddings(g1, g2, short_emb, adj, 0.1),
                    std::invalid_argument);
}

TEST_CASE("fitted bound heads run end to end on a trained bundle") {
  const auto [source, target] = generate_threeclass_shift(0.3, {20, 20, 20}, 0.12, 0.12, 23);
  TrainConfig cfg;
  cfg.model.in_dim = source.feature_dim();
  cfg.model.hidden_dim = 12;
  cfg.model.num_layers = 2;
  cfg.model.num_classes = 3;
  cfg.model.classifier_hidden = 12;
  cfg.model.link_hidden = 6;
  cfg.epochs = 10;
  cfg.seed = 4;
  const auto [bundle, history] = train<float>(source, target, cfg);

  HeadFitConfig head_cfg;
  head_cfg.epochs = 40;
  const auto [g1, g2] = fit_bound_heads(bundle, source, target, head_cfg);
  const BoundReport report = bound_report(bundle, g1, g2, target, 0.05);
  REQUIRE(report.telescope_checked == target.num_nodes);
  REQUIRE(report.telescope_violations == 0);
  REQUIRE(std::isfinite(report.rhs_estimate));
  REQUIRE(report.disagreement_rate >= 0.0);
  REQUIRE(report.disagreement_rate <= 1.0);
  int total = 0;
  for (const auto& cb : report.components) total += cb.size;
  REQUIRE(total == target.num_nodes);

  Graph unlabeled = target;
  unlabeled.labels.clear();
  REQUIRE_THROWS_WITH(fit_bound_heads(bundle, source, unlabeled, head_cfg),
                      ContainsSubstring("target labels required"));
}

TEST_CASE("proxy_a_distance behaviour") {
  std::mt19937 rng(29);

  SECTION("identical distributions sit near zero") {
    double mean = 0;
    for (std::uint32_t seed = 0; seed < 10; ++seed) {
      const Mat<double> a = random_mat(300, 6, rng);
      const Mat<double> b = random_mat(300, 6, rng);
      const double v = proxy_a_distance(a, b, seed);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 2.0);
      REQUIRE(v < 0.45);
      mean += v;
    }
    REQUIRE(mean / 10.0 < 0.2);
  }

  SECTION("well separated clouds saturate at two") {
    Mat<double> a = random_mat(100, 4, rng);
    Mat<double> b = random_mat(100, 4, rng);
    for (auto& v : a.v) v -= 10.0;
    for (auto& v : b.v) v += 10.0;
    REQUIRE(proxy_a_distance(a, b, 1) == 2.0);
  }

  SECTION("argument order does not matter beyond sampling noise") {
    Mat<double> a = random_mat(200, 5, rng);
    Mat<double> b = random_mat(200, 5, rng, 1.6);
    const double ab = proxy_a_distance(a, b, 7);
    const double ba = proxy_a_distance(b, a, 7);
    REQUIRE(std::abs(ab - ba) < 0.3);
  }

  SECTION("input validation") {
    const Mat<double> a = random_mat(10, 3, rng);
    const Mat<double> wrong_dim = random_mat(10, 4, rng);
    REQUIRE_THROWS_AS(proxy_a_distance(a, wrong_dim), std::invalid_argument);
    const Mat<double> tiny = random_mat(1, 3, rng);
    REQUIRE_THROWS_AS(proxy_a_distance(a, tiny), std::invalid_argument);
  }
}

TEST_CASE("pca_2d projections") {
  std::mt19937 rng(31);

  SECTION("one dimensional data projects to its centered values") {
    Mat<double> x(5, 1);
    x.v = {1.0, 2.0, 3.0, 4.0, 10.0};
    const Pca2 pca = pca_2d(x);
    const double mean = 4.0;
    for (int i = 0; i < 5; ++i) {
      REQUIRE(pca.projected(i, 0) == Approx(x.v[i] - mean).epsilon(1e-12));
      REQUIRE(pca.projected(i, 1) == 0.0);
    }
  }

  SECTION("components are orthonormal") {
    const Mat<double> x = random_mat(40, 6, rng);
    const Pca2 pca = pca_2d(x);
    double g00 = 0, g01 = 0, g11 = 0;
    for (std::size_t j = 0; j < 6; ++j) {
      g00 += pca.components(j, 0) * pca.components(j, 0);
      g01 += pca.components(j, 0) * pca.components(j, 1);
      g11 += pca.components(j, 1) * pca.components(j, 1);
    }
    REQUIRE(g00 == Approx(1.0).margin(1e-10));
    REQUIRE(g11 == Approx(1.0).margin(1e-10));
    REQUIRE(g01 == Approx(0.0).margin(1e-10));
  }

  SECTION("first component captures the dominant direction") {
    Mat<double> x(200, 3);
    std::normal_distribution<double> big(0.0, 5.0), small(0.0, 0.1);
    for (std::size_t i = 0; i < 200; ++i) {
      const double t = big(rng);
      x(i, 0) = t + small(rng);
      x(i, 1) = t + small(rng);  // dominant direction (1,1,0)/sqrt(2)
      x(i, 2) = small(rng);
    }
    const Pca2 pca = pca_2d(x);
    const double along = std::abs(pca.components(0, 0) + pca.components(1, 0)) / std::sqrt(2.0);
    REQUIRE(along > 0.999);
    double var1 = 0, var2 = 0;
    for (std::size_t i = 0; i < 200; ++i) {
      var1 += pca.projected(i, 0) * pca.projected(i, 0);
      var2 += pca.projected(i, 1) * pca.projected(i, 1);
    }
    REQUIRE(var1 >= var2);
  }

  SECTION("constant data falls back to an orthonormal canonical basis") {
    Mat<double> x(8, 3, 2.5);
    const Pca2 pca = pca_2d(x);
    double g00 = 0, g01 = 0, g11 = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      g00 += pca.components(j, 0) * pca.components(j, 0);
      g01 += pca.components(j, 0) * pca.components(j, 1);
      g11 += pca.components(j, 1) * pca.components(j, 1);
    }
    REQUIRE(g00 == Approx(1.0).margin(1e-10));
    REQUIRE(g11 == Approx(1.0).margin(1e-10));
    REQUIRE(g01 == Approx(0.0).margin(1e-10));
    for (double v : pca.projected.v) REQUIRE(v == Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("export_embeddings writes the documented CSV") {
  const auto [source, target] = generate_threeclass_shift(0.5, {6, 6, 6}, 0.2, 0.2, 37);
  std::mt19937 rng(2);
  ModelSpec spec;
  spec.in_dim = source.feature_dim();
  spec.hidden_dim = 5;
  spec.num_layers = 1;
  spec.num_classes = 3;
  spec.classifier_hidden = 4;
  spec.link_hidden = 4;
  ModelBundle<double> bundle(spec, rng);

  const std::string path = "/tmp/gda_diag_embeddings_test.csv";
  const EmbeddingDump dump = export_embeddings(bundle, target, path);
  REQUIRE(dump.embeddings.rows == static_cast<std::size_t>(target.num_nodes));
  REQUIRE(dump.projected.rows == static_cast<std::size_t>(target.num_nodes));

  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  REQUIRE(line == "node,label,pc1,pc2,e0,e1,e2,e3,e4");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  REQUIRE(rows == target.num_nodes);
}

TEST_CASE("target_accuracy shares the evaluation semantics") {
  const auto [source, target] = generate_threeclass_shift(0.4, {10, 10, 10}, 0.15, 0.15, 41);
  std::mt19937 rng(6);
  ModelSpec spec;
  spec.in_dim = source.feature_dim();
  spec.hidden_dim = 8;
  spec.num_layers = 1;
  spec.num_classes = 3;
  spec.classifier_hidden = 8;
  spec.link_hidden = 4;
  ModelBundle<double> bundle(spec, rng);

  const std::vector<int> preds = predict_labels(bundle, target);
  for (int exclude : {-1, 0}) {
    std::size_t correct = 0, counted = 0;
    for (int i = 0; i < target.num_nodes; ++i) {
      if (target.labels[i] == exclude) continue;
      ++counted;
      if (preds[i] == target.labels[i]) ++correct;
    }
    REQUIRE(target_accuracy(bundle, target, exclude) ==
            Approx(static_cast<double>(correct) / counted).epsilon(1e-14));
  }

  Graph all_zero = target;
  std::fill(all_zero.labels.begin(), all_zero.labels.end(), 0);
  REQUIRE_THROWS_WITH(target_accuracy(bundle, all_zero, 0),
                      ContainsSubstring("empty evaluation set"));
}
