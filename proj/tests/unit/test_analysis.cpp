#include "doctest.h"

#include <set>
#include <sstream>

#include "oracles.hpp"
#include "pcov/analysis.hpp"
#include "pcov/dataset.hpp"
#include "pcov/error.hpp"

using namespace pcov;

namespace {

IndexVector two_class_labels(Eigen::Index n) {
  IndexVector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = static_cast<int>(i % 3 == 0);
  return y;
}

std::set<std::pair<Eigen::Index, Eigen::Index>> pair_set(const std::vector<BoundaryPair>& pairs) {
  std::set<std::pair<Eigen::Index, Eigen::Index>> s;
  for (const auto& p : pairs) s.insert({p.index_a, p.index_b});
  return s;
}

}  // namespace

TEST_CASE("boundary pairs match the brute-force oracle") {
  Rng rng(61);
  const Matrix t = oracle::random_matrix(rng, 40, 3);
  const IndexVector y = two_class_labels(40);
  for (int d : {1, 2, 3}) {
    const auto got = boundary_pairs(t, y, 1, 0, d, 12);
    const auto ref = oracle::brute_force_pairs(t, y, 1, 0, d);
    REQUIRE(got.size() == 12);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].index_a == ref[i].a);
      CHECK(got[i].index_b == ref[i].b);
      CHECK(got[i].distance == doctest::Approx(ref[i].distance).epsilon(1e-14));
      CHECK(got[i].class_a == 1);
      CHECK(got[i].class_b == 0);
    }
  }
  CHECK(boundary_pairs(t, y, 1, 0, 2, 0).empty());
  CHECK(boundary_pairs(t, y, 1, 0, 2, 100000).size() == 14 * 26);
}

TEST_CASE("unique boundary pairs use every sample at most once") {
  Rng rng(62);
  const Matrix t = oracle::random_matrix(rng, 30, 2);
  const IndexVector y = two_class_labels(30);
  const auto pairs = boundary_pairs(t, y, 1, 0, 2, 8, true);
  CHECK(pairs.size() == 8);
  std::set<Eigen::Index> seen;
  for (const auto& p : pairs) {
    CHECK(seen.insert(p.index_a).second);
    CHECK(seen.insert(p.index_b).second);
  }
  // The greedy pick starts from the global nearest pair.
  CHECK(pairs.front().distance == oracle::brute_force_pairs(t, y, 1, 0, 2).front().distance);
  // Only 10 samples of class 1 exist.
  CHECK(boundary_pairs(t, y, 1, 0, 2, 50, true).size() == 10);
}

TEST_CASE("boundary pairs are invariant under rotations of the first d dimensions") {
  Rng rng(63);
  const Matrix t = oracle::random_matrix(rng, 50, 4);
  const IndexVector y = two_class_labels(50);
  const int d = 3;
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::HouseholderQR<Matrix> qr(oracle::random_matrix(rng, d, d));
    const Matrix q = qr.householderQ();
    Matrix rotated = t;
    rotated.leftCols(d) = t.leftCols(d) * q;
    rotated.col(3) = oracle::random_matrix(rng, 50, 1);  // outside the first d: ignored
    CHECK(pair_set(boundary_pairs(t, y, 1, 0, d, 10)) == pair_set(boundary_pairs(rotated, y, 1, 0, d, 10)));
  }
}

TEST_CASE("boundary pairs reject bad arguments") {
  Rng rng(64);
  const Matrix t = oracle::random_matrix(rng, 10, 2);
  const IndexVector y = two_class_labels(10);
  CHECK_THROWS_AS(boundary_pairs(t, y, 1, 1, 2, 3), InputError);
  CHECK_THROWS_AS(boundary_pairs(t, y, 1, 5, 2, 3), InputError);
  CHECK_THROWS_AS(boundary_pairs(t, y, 1, 0, 3, 3), InputError);
  CHECK_THROWS_AS(boundary_pairs(t, y, 1, 0, 0, 3), InputError);
  CHECK_THROWS_AS(boundary_pairs(t, y, 1, 0, 2, -1), InputError);
}

TEST_CASE("confusion matrix counts") {
  IndexVector truth(8), pred(8);
  truth << 0, 0, 1, 1, 1, 2, 2, 2;
  pred << 0, 1, 1, 1, 0, 2, 2, 1;
  const ConfusionMatrix c = confusion_matrix(truth, pred, 3);
  CHECK(c.total() == 8);
  CHECK(c.correct() == 5);
  CHECK(c.counts(1, 0) == 1);
  CHECK(c.counts(2, 1) == 1);
  CHECK(c.accuracy() == doctest::Approx(5.0 / 8).epsilon(1e-12));
  CHECK(c.counts.rowwise().sum()(1) == 3);
  CHECK_THROWS_AS(c.true_positives(), InputError);

  IndexVector bt(6), bp(6);
  bt << 1, 1, 1, 0, 0, 0;
  bp << 1, 1, 0, 1, 0, 0;
  const ConfusionMatrix b = confusion_matrix(bt, bp, 2);
  CHECK(b.true_positives() == 2);
  CHECK(b.false_negatives() == 1);
  CHECK(b.false_positives() == 1);
  CHECK(b.true_negatives() == 2);
}

TEST_CASE("latent feature correlations") {
  Rng rng(65);
  const Eigen::Index n = 2000;
  Matrix t = oracle::random_matrix(rng, n, 2);
  Matrix x(n, 3);
  x.col(0) = t.col(0);
  x.col(1) = oracle::random_matrix(rng, n, 1);
  x.col(2).setConstant(4.0);
  const CorrelationTable c = latent_feature_correlations(x, t, 2, {"self", "noise", "flat"});
  CHECK(c.abs_r(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.abs_r(1, 0) < 0.1);
  CHECK(c.abs_r(1, 1) < 0.1);
  CHECK(c.undefined(2, 0));
  CHECK(c.undefined(2, 1));
  CHECK(c.abs_r(2, 0) == 0.0);
  const auto order = c.order_by(0);
  CHECK(order.front() == 0);
  CHECK(order.back() == 2);
  CHECK(latent_feature_correlations(x, t, 1).feature_names[1] == "x2");
  CHECK_THROWS_AS(latent_feature_correlations(x, t, 3), InputError);
}

TEST_CASE("decision grid layout") {
  const GridBounds b{-1.0, 1.0, 0.0, 4.0};
  const LabelRaster r = decision_grid(
      [](const Matrix& t) {
        IndexVector y(t.rows());
        for (Eigen::Index i = 0; i < t.rows(); ++i) y(i) = t(i, 1) > 2.0 ? 1 : 0;
        return y;
      },
      b, 5, 9);
  CHECK(r.x_at(0) == -1.0);
  CHECK(r.x_at(4) == 1.0);
  CHECK(r.y_at(0) == 0.0);
  CHECK(r.y_at(8) == 4.0);
  CHECK(r.at(0, 0) == 0);
  CHECK(r.at(8, 0) == 1);
  CHECK(r.nearest(0.0, 3.9) == 1);
  CHECK(r.nearest(-50.0, -50.0) == 0);
  CHECK(r.n_distinct() == 2);

  std::ostringstream pgm;
  write_pgm(r, pgm);
  CHECK(pgm.str().rfind("P5\n5 9\n", 0) == 0);
}

TEST_CASE("constant prediction gives a uniform raster") {
  const LabelRaster r = decision_grid([](const Matrix& t) { return IndexVector::Constant(t.rows(), 2); }, GridBounds{}, 20, 20);
  CHECK(r.n_distinct() == 1);
  CHECK(r.at(13, 7) == 2);
}

TEST_CASE("binary linear model splits the raster along one straight line") {
  Rng rng(66);
  const Matrix x = oracle::random_matrix(rng, 60, 3);
  std::vector<int> yv(60);
  for (int i = 0; i < 60; ++i) yv[static_cast<std::size_t>(i)] = x(i, 0) - x(i, 2) > 0.2;
  const PcovModel m = fit_pcovc(x, LabelData::single(yv), {}, {});
  const GridBounds b = embedding_bounds(m.training_latent);
  const int res = 120;
  const LabelRaster r = decision_grid(m, b, res, res);
  CHECK(r.n_distinct() == 2);
  // Score of each lattice node against the model's line; mismatches may only
  // sit within one cell diagonal of it.
  const Vector w = m.ptz.col(0);
  const double c0 = m.target_offset(0);
  const double cell = std::hypot((b.x_max - b.x_min) / (res - 1), (b.y_max - b.y_min) / (res - 1));
  int far_mismatch = 0;
  for (int row = 0; row < res; ++row) {
    for (int col = 0; col < res; ++col) {
      const double s = w(0) * r.x_at(col) + w(1) * r.y_at(row) + c0;
      const int expect = s > 0 ? 1 : 0;
      if (r.at(row, col) != expect && std::abs(s) / w.norm() > cell) ++far_mismatch;
    }
  }
  CHECK(far_mismatch == 0);
}

TEST_CASE("iris decision map agrees with latent predictions") {
  const Dataset iris = load_iris();
  const PcovModel m = fit_pcovc(iris.features, iris.labels, {}, {});
  const LabelRaster r = decision_grid(m, embedding_bounds(m.training_latent));
  const IndexVector pred = predict_from_latent(m, m.training_latent).column(0);
  int agree = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    agree += r.nearest(m.training_latent(i, 0), m.training_latent(i, 1)) == pred(i);
  }
  CHECK(agree >= 0.98 * 150);
}

TEST_CASE("decision grid needs a two-dimensional latent") {
  const Dataset iris = load_iris();
  PcovConfig cfg;
  cfg.n_components = 3;
  const PcovModel m = fit_pcovc(iris.features, iris.labels, cfg, {});
  CHECK_THROWS_AS(decision_grid(m, GridBounds{}), InputError);
}

TEST_CASE("alpha sweep is reproducible and reports every alpha") {
  const Dataset iris = load_iris();
  const Split s = stratified_split(iris.labels, 0.3, 4);
  const auto run = [&] {
    return alpha_sweep(select_rows(iris.features, s.train), iris.labels.rows(s.train),
                       select_rows(iris.features, s.test), iris.labels.rows(s.test),
                       {0.0, 0.5, 1.0}, PcovSpec{});
  };
  const AlphaSweepReport a = run();
  const AlphaSweepReport b = run();
  REQUIRE(a.entries.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.entries[i].alpha == a.alphas[i]);
    CHECK(a.entries[i].accuracy == b.entries[i].accuracy);
    CHECK(a.entries[i].test_embedding == b.entries[i].test_embedding);
    CHECK(a.entries[i].confusion[0].total() == 45);
    CHECK(a.entries[i].confusion[0].accuracy() == a.entries[i].accuracy);
  }
  double best = -1.0;
  for (const auto& e : a.entries) best = std::max(best, e.accuracy);
  double best_alpha = -1.0;
  for (const auto& e : a.entries) {
    if (e.accuracy == best) best_alpha = e.alpha;
  }
  CHECK(a.best_alpha == best_alpha);
  CHECK(a.baseline_accuracy > 0.9);
}

TEST_CASE("alpha sweep with a kernel") {
  const Table moons = make_moons({120, 0.05}, 2);
  const Dataset ds = dataset_from_table(moons, {"label"});
  const Split s = stratified_split(ds.labels, 0.25, 2);
  PcovSpec spec;
  KernelSpec k;
  k.family = KernelFamily::Rbf;
  k.gamma = 2.0;
  spec.kernel = k;
  const AlphaSweepReport r = alpha_sweep(select_rows(ds.features, s.train), ds.labels.rows(s.train),
                                         select_rows(ds.features, s.test), ds.labels.rows(s.test), {0.1, 1.0}, spec);
  CHECK(r.entries[0].accuracy >= r.entries[1].accuracy);
}

TEST_CASE("constructed nearest pair ranks first") {
  Matrix t(6, 1);
  t << -1.0, -1.1, 0.0, 1.0, 1.1, 0.0;
  IndexVector y(6);
  y << 0, 0, 0, 1, 1, 1;
  const auto pairs = boundary_pairs(t, y, 1, 0, 1, 1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].index_a == 5);
  CHECK(pairs[0].index_b == 2);
  CHECK(pairs[0].distance == 0.0);

  Rng rng(67);
  const Matrix cloud = oracle::random_matrix(rng, 60, 10);
  const IndexVector labels = two_class_labels(60);
  const auto got = boundary_pairs(cloud, labels, 0, 1, 8, 8);
  const auto ref = oracle::brute_force_pairs(cloud, labels, 0, 1, 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(got[i].index_a == ref[i].a);
    CHECK(got[i].index_b == ref[i].b);
  }
}

TEST_CASE("sweep limits on synthetic data") {
  Rng rng(68);
  const Matrix x = oracle::random_matrix(rng, 200, 5);
  std::vector<int> yv(200);
  for (int i = 0; i < 200; ++i) yv[static_cast<std::size_t>(i)] = rng.uniform() < 0.7 ? 0 : 1;
  const LabelData y = LabelData::single(yv);
  const Split s = stratified_split(y, 0.5, 1);
  const LabelData yte = y.rows(s.test);
  const AlphaSweepReport pca = alpha_sweep(select_rows(x, s.train), y.rows(s.train), select_rows(x, s.test),
                                           yte, {1.0}, PcovSpec{});
  const double majority = static_cast<double>((yte.column(0).array() == 0).count()) / yte.n_samples();
  CHECK(std::abs(pca.entries[0].accuracy - majority) < 0.05);

  const Dataset blobs = dataset_from_table(make_blobs({120, 3, 2, 0.3, 10.0}, 2), {"label"});
  const Split b = stratified_split(blobs.labels, 0.25, 2);
  const AlphaSweepReport sep =
      alpha_sweep(select_rows(blobs.features, b.train), blobs.labels.rows(b.train),
                  select_rows(blobs.features, b.test), blobs.labels.rows(b.test), {0.0, 0.25, 0.5, 0.75}, PcovSpec{});
  for (const auto& e : sep.entries) CHECK(e.accuracy == 1.0);
}
