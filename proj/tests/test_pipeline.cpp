#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "epicast/errors.hpp"
#include "epicast/pipeline.hpp"
#include "epicast/series.hpp"
#include "epicast/synthetic.hpp"

using namespace epicast;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::path("test_pipeline_tmp_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

// Small but complete config: 14 regions keep the net and GA fast while still
// leaving k_max=6 < N-1.
std::string small_config_json(const TempDir& dir, std::uint64_t seed) {
  std::ostringstream ss;
  ss << R"({
  "seed": )" << seed << R"(,
  "paths": {
    "cases_csv": ")" << dir.file("cases.csv") << R"(",
    "static_csv": ")" << dir.file("static_vars.csv") << R"(",
    "out_dir": ")" << dir.file("out") << R"("
  },
  "net": {"filters": 8, "dilations": [1, 2], "decoder_dims": [8, 6], "epochs": 2, "batch_size": 16},
  "ga": {"population": 12, "generations": 5},
  "ae": {"hidden": [10, 4]},
  "k_range": [3, 6],
  "backtest": {"models": ["seasonal_naive", "ar_ols"], "largest_regions": ["R01", "R02"]},
  "synth": {"n_regions": 14, "days": 60}
})";
  return ss.str();
}

}  // namespace

TEST_CASE("synthetic data is seeded, integral, and group-structured") {
  synth::SynthParams params;
  params.n_regions = 10;
  params.days = 90;
  params.seed = 5;
  const auto a = synth::generate(params);
  const auto b = synth::generate(params);
  CHECK(a.panel.counts == b.panel.counts);
  CHECK(a.static_vars.data == b.static_vars.data);
  CHECK(a.panel.regions.front() == "R01");
  CHECK(a.panel.regions.back() == "R10");
  for (const auto& row : a.panel.counts)
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v == std::floor(v));
    }
  CHECK(a.group == std::vector<int>{0, 1, 2, 3, 4, 0, 1, 2, 3, 4});

  params.seed = 6;
  const auto c = synth::generate(params);
  CHECK(a.panel.counts != c.panel.counts);
}

TEST_CASE("synthetic weekly profile shows up in the Friday/Sunday ratio") {
  synth::SynthParams params;
  params.n_regions = 33;
  params.days = 180;
  params.seed = 11;
  const auto data = synth::generate(params);

  const double planted = synth::weekly_profile()[4] / synth::weekly_profile()[6];
  double ratio_sum = 0.0;
  std::size_t ratio_count = 0;
  for (std::size_t r = 0; r < data.panel.regions.size(); ++r) {
    for (std::size_t t = 0; t + 2 < data.panel.days; ++t) {
      if (data.panel.date_at(t).weekday_mon0() != 4) continue;  // Friday
      const double fri = data.panel.counts[r][t];
      const double sun = data.panel.counts[r][t + 2];
      if (fri < 20.0 || sun < 20.0) continue;  // skip the noisy tails
      ratio_sum += fri / sun;
      ++ratio_count;
    }
  }
  REQUIRE(ratio_count > 200);
  const double mean_ratio = ratio_sum / static_cast<double>(ratio_count);
  CHECK(mean_ratio > 0.7 * planted);
  CHECK(mean_ratio < 1.4 * planted);
}

TEST_CASE("synthetic CSV round-trips through load_cases") {
  TempDir dir;
  synth::SynthParams params;
  params.n_regions = 6;
  params.days = 40;
  params.seed = 3;
  const auto data = synth::generate(params);
  synth::write_cases_csv(data.panel, dir.file("cases.csv"));
  const auto loaded = series::load_cases(dir.file("cases.csv"));
  CHECK(loaded.regions == data.panel.regions);
  CHECK(loaded.days == data.panel.days);
  CHECK(loaded.counts == data.panel.counts);
}

TEST_CASE("config loading rejects unknown and malformed fields by name") {
  TempDir dir;
  write_file(dir.file("no_seed.json"), R"({"paths": {}})");
  CHECK_THROWS_WITH_AS(pipeline::load_config(dir.file("no_seed.json")),
                       doctest::Contains("seed"), ValidationError);

  write_file(dir.file("typo.json"), R"({"seed": 1, "nett": {}})");
  CHECK_THROWS_WITH_AS(pipeline::load_config(dir.file("typo.json")),
                       doctest::Contains("nett"), ValidationError);

  write_file(dir.file("badtype.json"), R"({"seed": 1, "net": {"epochs": "four"}})");
  CHECK_THROWS_WITH_AS(pipeline::load_config(dir.file("badtype.json")),
                       doctest::Contains("net.epochs"), ValidationError);

  write_file(dir.file("badreduce.json"),
             R"({"seed": 1, "reductions": ["none", "umap"]})");
  CHECK_THROWS_WITH_AS(pipeline::load_config(dir.file("badreduce.json")),
                       doctest::Contains("umap"), ValidationError);

  write_file(dir.file("badjson.json"), "{");
  CHECK_THROWS_AS(pipeline::load_config(dir.file("badjson.json")), ValidationError);
}

TEST_CASE("full pipeline emits every artifact and is byte-identical per seed") {
  TempDir dir;
  write_file(dir.file("config.json"), small_config_json(dir, 42));
  const auto config = pipeline::load_config(dir.file("config.json"));

  pipeline::run("synth", config);
  pipeline::run("pipeline", config);

  const std::vector<std::string> artifacts{
      "forecasts.csv",    "embeddings_none.csv", "embeddings_pca.csv",
      "embeddings_ga.csv", "embeddings_ae_stacked.csv", "embeddings_ae_tied.csv",
      "embed_meta.json",  "clusters.csv",        "silhouette_grid.csv",
      "embeddings.csv",   "report.json",         "manifest.json"};
  std::map<std::string, std::string> first_run;
  for (const auto& name : artifacts) {
    const std::string path = dir.file("out/" + name);
    REQUIRE_MESSAGE(fs::exists(path), path);
    first_run[name] = slurp(path);
  }

  // rerun from scratch in a different directory with the same seed
  TempDir dir2;
  write_file(dir2.file("config.json"), small_config_json(dir2, 42));
  const auto config2 = pipeline::load_config(dir2.file("config.json"));
  pipeline::run("synth", config2);
  pipeline::run("pipeline", config2);
  for (const auto& name : artifacts) {
    if (name == "manifest.json") continue;  // embeds the path-bearing config hash
    CHECK_MESSAGE(slurp(dir2.file("out/" + name)) == first_run[name], name);
  }

  // a different seed must actually change the forecasts
  TempDir dir3;
  write_file(dir3.file("config.json"), small_config_json(dir3, 43));
  const auto config3 = pipeline::load_config(dir3.file("config.json"));
  pipeline::run("synth", config3);
  pipeline::run("forecast", config3);
  CHECK(slurp(dir3.file("out/forecasts.csv")) != first_run["forecasts.csv"]);
}

TEST_CASE("cluster stage without embed artifacts names the missing file") {
  TempDir dir;
  write_file(dir.file("config.json"), small_config_json(dir, 7));
  const auto config = pipeline::load_config(dir.file("config.json"));
  pipeline::run("synth", config);
  pipeline::run("forecast", config);
  CHECK_THROWS_WITH_AS(pipeline::run("cluster", config),
                       doctest::Contains("embeddings_none.csv"), ValidationError);
}

TEST_CASE("embed stage without forecasts names the missing file") {
  TempDir dir;
  write_file(dir.file("config.json"), small_config_json(dir, 7));
  const auto config = pipeline::load_config(dir.file("config.json"));
  pipeline::run("synth", config);
  CHECK_THROWS_AS(pipeline::run("embed", config), ValidationError);
}

TEST_CASE("evaluate emits the backtest artifacts") {
  TempDir dir;
  write_file(dir.file("config.json"), small_config_json(dir, 9));
  const auto config = pipeline::load_config(dir.file("config.json"));
  pipeline::run("synth", config);
  pipeline::run("evaluate", config);
  const std::string report = slurp(dir.file("out/evaluation.json"));
  CHECK(report.find("seasonal_naive") != std::string::npos);
  CHECK(report.find("ar_ols") != std::string::npos);
  CHECK(report.find("model_average_largest_regions") != std::string::npos);
  const std::string cells = slurp(dir.file("out/smape_cells.csv"));
  // 2 models x 14 regions x 7 days + header
  std::size_t lines = 0;
  for (char c : cells)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + 2 * 14 * 7);
}

TEST_CASE("stage artifacts stay consistent across a resumed run") {
  TempDir dir;
  write_file(dir.file("config.json"), small_config_json(dir, 21));
  const auto config = pipeline::load_config(dir.file("config.json"));
  pipeline::run("synth", config);
  pipeline::run("pipeline", config);
  const std::string clusters_once = slurp(dir.file("out/clusters.csv"));
  // rerunning only the cluster stage from the on-disk embeddings changes nothing
  pipeline::run("cluster", config);
  CHECK(slurp(dir.file("out/clusters.csv")) == clusters_once);

  const std::string report = slurp(dir.file("out/report.json"));
  CHECK(report.find("\"selection\"") != std::string::npos);
  CHECK(report.find(pipeline::config_hash(config)) != std::string::npos);

  // the grid has one row per (reduction, method) pair plus a header
  const std::string grid = slurp(dir.file("out/silhouette_grid.csv"));
  std::size_t lines = 0;
  for (char c : grid)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + 5 * 2);
}
