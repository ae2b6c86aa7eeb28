#include "doctest.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "pcov/dataset.hpp"
#include "pcov/error.hpp"

using namespace pcov;

namespace {

Table parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in, "test.csv");
}

std::string message_of(const std::string& text) {
  try {
    parse(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("doubles round trip through text bit for bit") {
  const double values[] = {0.1, -0.0, 0.0, 1e-300, 5e-324, 3.141592653589793, -2.5e17,
                           std::numeric_limits<double>::max(), 1.0 / 3.0};
  for (double v : values) {
    const auto back = parse_double(format_double(v));
    REQUIRE(back.has_value());
    CHECK(std::memcmp(&v, &*back, sizeof v) == 0);
  }
  CHECK(format_double(-0.0) == "-0");
  CHECK(format_double(2.0) == "2");
  CHECK_FALSE(parse_double("1.5x").has_value());
  CHECK_FALSE(parse_double("").has_value());
  CHECK(*parse_double("+4") == 4.0);
}

TEST_CASE("csv write then parse reproduces the table") {
  Rng rng(71);
  Table t;
  t.columns = {"a", "b b", "label"};
  t.comments = {"generated for a test"};
  t.values = oracle::random_matrix(rng, 6, 3) * 1e3;
  t.values.col(2) << 0, 1, 0, 1, 2, 2;
  std::ostringstream out;
  write_csv(out, t);
  const Table back = parse(out.str());
  CHECK(back.columns == t.columns);
  CHECK(back.comments == t.comments);
  CHECK(back.values == t.values);
  std::ostringstream again;
  write_csv(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("csv parsing accepts quotes, spaces and a BOM") {
  const Table t = parse("\xEF\xBB\xBF# note\n\"x,1\", y ,label\n 1.5 ,\"2\",0\n\n3,4,1\n");
  CHECK(t.columns == std::vector<std::string>{"x,1", "y", "label"});
  CHECK(t.values.rows() == 2);
  CHECK(t.values(0, 0) == 1.5);
  CHECK(t.values(1, 1) == 4.0);
  CHECK(t.column_index("y") == 1);
  CHECK_THROWS_AS(t.column_index("z"), InputError);
}

TEST_CASE("csv parsing rejects malformed input") {
  CHECK(message_of("").find("no header row") != std::string::npos);
  CHECK(message_of("a,b\n").find("no data rows") != std::string::npos);
  CHECK(message_of("a,a\n1,2\n").find("duplicate column") != std::string::npos);
  CHECK(message_of("a,,b\n1,2,3\n").find("empty column name") != std::string::npos);
  CHECK(message_of("a,b\n1,2,3\n").find("test.csv:2") != std::string::npos);
  CHECK(message_of("a,b\n1,oops\n").find("'b'") != std::string::npos);
  CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), InputError);
}

TEST_CASE("dataset assembly from a table") {
  const Table t = parse("f1,f2,label,other\n1,2,0,5\n3,4,1,6\n5,6,2,7\n");
  const Dataset all = dataset_from_table(t, {"label"});
  CHECK(all.feature_names == std::vector<std::string>{"f1", "f2", "other"});
  CHECK(all.labels.classes_per_label[0] == 3);
  const Dataset some = dataset_from_table(t, {"label"}, {"f2"});
  CHECK(some.features.cols() == 1);
  CHECK(some.features(2, 0) == 6.0);
  CHECK_THROWS_AS(dataset_from_table(t, {"label"}, {"label"}), InputError);
  const Table bad = parse("f,label\n1,0.5\n2,1\n");
  CHECK_THROWS_AS(dataset_from_table(bad, {"label"}), InputError);
  const Table neg = parse("f,label\n1,-1\n2,1\n");
  CHECK_THROWS_AS(dataset_from_table(neg, {"label"}), InputError);
}

TEST_CASE("builtin iris") {
  const Dataset iris = load_iris();
  CHECK(iris.features.rows() == 150);
  CHECK(iris.features.cols() == 4);
  CHECK(iris.label_names == std::vector<std::string>{"species"});
  CHECK(iris.features(0, 0) == 5.1);
  CHECK(iris.features(149, 3) == 1.8);
  for (int c = 0; c < 3; ++c) CHECK((iris.labels.column(0).array() == c).count() == 50);
}

TEST_CASE("stratified split keeps class proportions") {
  const Dataset iris = load_iris();
  const Split s = stratified_split(iris.labels, 0.2, 9);
  CHECK(s.test.size() == 30);
  CHECK(s.train.size() == 120);
  CHECK(std::is_sorted(s.test.begin(), s.test.end()));
  for (int c = 0; c < 3; ++c) {
    int n = 0;
    for (auto i : s.test) n += iris.labels.labels(i, 0) == c;
    CHECK(n == 10);
  }
  std::vector<Eigen::Index> all(s.train);
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  for (Eigen::Index i = 0; i < 150; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
  CHECK(stratified_split(iris.labels, 0.2, 9).test == s.test);
  CHECK(stratified_split(iris.labels, 0.2, 10).test != s.test);
  CHECK_THROWS_AS(stratified_split(iris.labels, 1.0, 0), InputError);
}

TEST_CASE("random and explicit splits") {
  const Split r = random_split(10, 0.3, 1);
  CHECK(r.test.size() == 3);
  const Split e = explicit_split(5, {4, 1});
  CHECK(e.test == std::vector<Eigen::Index>{1, 4});
  CHECK(e.train == std::vector<Eigen::Index>{0, 2, 3});
  CHECK_THROWS_AS(explicit_split(5, {1, 1}), InputError);
  CHECK_THROWS_AS(explicit_split(5, {5}), InputError);
  CHECK_THROWS_AS(explicit_split(2, {0, 1}), InputError);
}

TEST_CASE("blobs generator") {
  BlobsParams p;
  p.n_samples = 90;
  p.n_features = 3;
  const Table a = make_blobs(p, 5);
  CHECK(a.values.rows() == 90);
  CHECK(a.columns == std::vector<std::string>{"x1", "x2", "x3", "label"});
  for (int c = 0; c < 3; ++c) CHECK((a.values.col(3).array() == c).count() == 30);
  CHECK(make_blobs(p, 5).values == a.values);
  CHECK(make_blobs(p, 6).values != a.values);
  CHECK_FALSE(a.comments.empty());
}

TEST_CASE("noise-free moons are not linearly separable") {
  const Dataset ds = dataset_from_table(make_moons({200, 0.0}, 1), {"label"});
  CHECK(ds.features.rows() == 200);
  CHECK(oracle::best_linear_accuracy_2d(ds.features, ds.labels.column(0)) < 0.95);
  // Both arcs have unit radius around their own centers.
  for (Eigen::Index i = 0; i < 200; ++i) {
    const bool inner = ds.labels.labels(i, 0) == 1;
    const double cx = inner ? 1.0 : 0.0;
    const double cy = inner ? 0.5 : 0.0;
    CHECK(std::hypot(ds.features(i, 0) - cx, ds.features(i, 1) - cy) == doctest::Approx(1.0));
  }
}

TEST_CASE("imbalanced cliff has the requested positive count") {
  ImbalancedCliffParams p;
  p.n_samples = 1000;
  p.positive_rate = 0.07;
  const Table t = make_imbalanced_cliff(p, 3);
  const long positives = (t.values.col(t.values.cols() - 1).array() == 1).count();
  CHECK(std::abs(positives - 70) <= 1);
  CHECK(t.values.cols() == 3 * 4 + 1 + 4 + 1);
}

TEST_CASE("awkward column names survive a round trip") {
  Table t;
  t.columns = {"a,b", "say \"hi\"", "#tag", " pad"};
  t.values = Matrix::Ones(1, 4);
  std::ostringstream out;
  write_csv(out, t);
  CHECK(parse(out.str()).columns == t.columns);
  CHECK(message_of("\"open,b\n1,2\n").find("unterminated") != std::string::npos);
}

TEST_CASE("generator contracts") {
  const Table b = make_blobs({150, 3, 2, 1.0, 10.0}, 7);
  CHECK(b.values.rows() == 150);
  for (int c = 0; c < 3; ++c) CHECK((b.values.col(2).array() == c).count() == 50);
  ImbalancedCliffParams p;
  p.n_samples = 2001;
  const Table t = make_imbalanced_cliff(p, 1);
  const long positives = (t.values.col(t.values.cols() - 1).array() == 1).count();
  CHECK(std::abs(positives - 0.05 * 2001) <= 1.0);
}
