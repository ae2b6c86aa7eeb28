#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "pcov/dataset.hpp"

namespace fs = std::filesystem;
using namespace pcov;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

long count(const std::string& s, const std::string& needle) {
  long n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("cli fit writes its outputs and reruns are byte identical") {
  TempDir dir("pcov_cli_fit");
  const std::vector<std::string> base = {"--quiet", "--seed", "2", "fit", "--iris", "--alpha", "0.4"};
  auto a = base;
  a.insert(a.begin(), {"--out-dir", dir / "a"});
  auto b = base;
  b.insert(b.begin(), {"--out-dir", dir / "b"});
  REQUIRE(run(a).code == 0);
  REQUIRE(run(b).code == 0);
  for (const char* f : {"model.json", "embedding.csv", "metrics.json"}) {
    CHECK(fs::exists(dir.path / "a" / f));
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
  }
  const auto metrics = nlohmann::json::parse(slurp(dir.path / "a" / "metrics.json"));
  CHECK(metrics["test_accuracy"].get<double>() > 0.8);
  const Table emb = read_csv(dir.path / "a" / "embedding.csv");
  CHECK(emb.values.rows() == 150);
  CHECK(emb.columns.back() == "t2");
}

TEST_CASE("cli transform reproduces the fitted embedding") {
  TempDir dir("pcov_cli_transform");
  write_csv(dir.path / "iris.csv", iris_table());
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "fit", "--data", dir / "iris.csv", "--label", "species",
               "--kernel", "rbf", "--gamma", "0.3"}).code == 0);
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "transform", "--model", dir / "model.json", "--data",
               dir / "iris.csv"}).code == 0);
  const Table emb = read_csv(dir.path / "embedding.csv");
  const Table tr = read_csv(dir.path / "transform.csv");
  CHECK((emb.values.rightCols(2) - tr.values.rightCols(2)).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "predict", "--model", dir / "model.json", "--iris"}).code == 0);
  CHECK(read_csv(dir.path / "predictions.csv").values.rows() == 150);
}

TEST_CASE("cli exit codes and error documents") {
  TempDir dir("pcov_cli_errors");
  {
    std::ofstream(dir.path / "empty.csv") << "a,b,label\n";
  }
  const Run empty = run({"--out-dir", dir / "", "fit", "--data", dir / "empty.csv"});
  CHECK(empty.code == 2);
  const auto doc = nlohmann::json::parse(empty.err);
  CHECK(doc["error"]["message"].get<std::string>().find("no data rows") != std::string::npos);
  CHECK(doc["error"]["code"].get<int>() == 2);

  CHECK(run({"--out-dir", dir / "", "fit", "--iris", "--alpha", "2"}).code == 2);
  CHECK(run({"fit", "--iris", "--bogus"}).code == 2);
  CHECK(run({"transform", "--model", dir / "missing.json", "--iris"}).code == 2);
  CHECK(run({"--out-dir", "/proc/pcov-no-such-dir", "fit", "--iris"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli pairs with zero count writes only the header") {
  TempDir dir("pcov_cli_pairs");
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "fit", "--iris"}).code == 0);
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "pairs", "--embedding", dir / "embedding.csv", "-m", "0"}).code == 0);
  const std::string empty = slurp(dir.path / "pairs.csv");
  CHECK(empty.substr(empty.find('\n') + 1) == "rank,id_a,id_b,class_a,class_b,distance\n");
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "pairs", "--embedding", dir / "embedding.csv", "-m", "5",
               "--unique", "--split", "test"}).code == 0);
  const std::string pairs = slurp(dir.path / "pairs.csv");
  CHECK(count(pairs, "\n") == 7);  // comment, header, five pairs
}

TEST_CASE("cli sweep reports every alpha") {
  TempDir dir("pcov_cli_sweep");
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "sweep", "--iris", "--alphas", "0,0.25,0.5,0.75,1",
               "--resolution", "40"}).code == 0);
  const auto j = nlohmann::json::parse(slurp(dir.path / "sweep.json"));
  REQUIRE(j["entries"].size() == 5);
  for (const auto& e : j["entries"]) {
    long total = 0;
    for (const auto& row : e["confusion"][0]["counts"]) {
      for (const auto& v : row) total += v.get<long>();
    }
    CHECK(total == 30);
  }
  int svgs = 0;
  for (const auto& e : fs::directory_iterator(dir.path)) svgs += e.path().extension() == ".svg";
  CHECK(svgs == 5);
}

TEST_CASE("cli plot and correlate") {
  TempDir dir("pcov_cli_plot");
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "fit", "--iris"}).code == 0);
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "plot", "--embedding", dir / "embedding.csv", "--model",
               dir / "model.json", "--resolution", "60"}).code == 0);
  const std::string svg = slurp(dir.path / "plot.svg");
  CHECK(count(svg, "<circle") == 150);
  CHECK(svg.find("data-regions=\"3\"") != std::string::npos);
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "correlate", "--model", dir / "model.json", "--iris"}).code == 0);
  const Table c = read_csv(dir.path / "correlations.csv");
  CHECK(c.values.rows() == 4);
  CHECK((c.values.middleCols(1, 2).array() <= 1.0 + 1e-12).all());
  CHECK(c.values(0, 0) == 2.0);  // petal length leads t1
}

TEST_CASE("cli generate and a manifest-driven fit") {
  TempDir dir("pcov_cli_generate");
  REQUIRE(run({"--quiet", "--seed", "4", "--out-dir", dir / "", "generate", "moons", "--n", "80"}).code == 0);
  CHECK(read_csv(dir.path / "moons.csv").values.rows() == 80);
  {
    std::ofstream(dir.path / "manifest.json")
        << R"({"source": "moons.csv", "labels": ["label"], "split": {"test_fraction": 0.25, "seed": 1}})";
  }
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "fit", "--manifest", dir / "manifest.json", "--kernel", "rbf",
               "--gamma", "2", "--alpha", "0.1"}).code == 0);
  const Table emb = read_csv(dir.path / "embedding.csv");
  CHECK((emb.values.col(emb.column_index("split")).array() == 1).count() == 20);
}

TEST_CASE("cli reads options from a json config") {
  TempDir dir("pcov_cli_config");
  {
    std::ofstream(dir.path / "cfg.json") << R"({"seed": 3, "quiet": true, "fit": {"alpha": 0.9, "components": 3}})";
  }
  REQUIRE(run({"--config", dir / "cfg.json", "--out-dir", dir / "", "fit", "--iris"}).code == 0);
  const Table emb = read_csv(dir.path / "embedding.csv");
  CHECK(emb.columns.back() == "t3");
}

TEST_CASE("cli fit from the bundled iris manifest") {
  TempDir dir("pcov_cli_manifest");
  REQUIRE(run({"--quiet", "--out-dir", dir / "", "fit", "--manifest", PCOV_DATA_DIR "/iris_manifest.json"}).code == 0);
  const Table emb = read_csv(dir.path / "embedding.csv");
  CHECK(emb.values.rows() == 150);
  CHECK(emb.columns[emb.columns.size() - 2] == "t1");
  CHECK(emb.columns.back() == "t2");
  const auto metrics = nlohmann::json::parse(slurp(dir.path / "metrics.json"));
  CHECK(metrics["test_accuracy"].get<double>() >= 0.90);
}
