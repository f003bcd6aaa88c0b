#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "roofseg/io.hpp"
#include "support/synthetic.hpp"

// End-to-end checks of the command-line contract. The binary path arrives in
// the ROOFSEG_CLI environment variable (set by ctest).

using namespace roofseg;
namespace fs = std::filesystem;
namespace ts = roofseg::testsupport;

namespace {

std::string cli() {
  const char* path = std::getenv("ROOFSEG_CLI");
  REQUIRE_MESSAGE(path != nullptr, "ROOFSEG_CLI must point at the roofseg binary");
  return path;
}

int run(const std::string& args) {
  const std::string command = cli() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("roofseg_cli_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& name) const { return (path / name).string(); }
};

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

ts::RoofSample write_roof(const TempDir& dir, const std::string& name, std::uint64_t seed) {
  ts::RoofOptions opt;
  opt.n_points = 1200;
  opt.sigma = 0.01;
  opt.seed = seed;
  ts::RoofSample roof = ts::make_gable(opt);
  save_xyz(roof.cloud, dir.path / name, &roof.gt);
  return roof;
}

}  // namespace

TEST_CASE("features subcommand") {
  TempDir dir;
  const ts::RoofSample roof = ts::make_gable({400, 0.0, 0.0, 5});
  save_xyz(roof.cloud, dir.path / "roof.xyz");

  SUBCASE("writes one row per point") {
    CHECK(run("features " + dir.str("roof.xyz") + " " + dir.str("features.txt")) == 0);
    CHECK(line_count(dir.path / "features.txt") == roof.cloud.size());
  }

  SUBCASE("missing input fails without writing") {
    CHECK(run("features " + dir.str("absent.xyz") + " " + dir.str("out.txt")) != 0);
    CHECK_FALSE(fs::exists(dir.path / "out.txt"));
  }

  SUBCASE("k below 3 is rejected and names the field") {
    const std::string command = cli() + " features " + dir.str("roof.xyz") + " " +
                                dir.str("out.txt") + " --set features_k=2 2>" +
                                dir.str("err.txt") + " >/dev/null";
    CHECK(std::system(command.c_str()) != 0);
    std::ifstream err(dir.path / "err.txt");
    std::string text((std::istreambuf_iterator<char>(err)), std::istreambuf_iterator<char>());
    CHECK(text.find("features_k") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "out.txt"));
  }
}

TEST_CASE("superpoints subcommand") {
  TempDir dir;
  const ts::RoofSample roof = write_roof(dir, "roof.xyz", 7);

  SUBCASE("partition file is a full cover") {
    CHECK(run("superpoints " + dir.str("roof.xyz") + " " + dir.str("sp.txt") +
              " --label-column") == 0);
    std::ifstream in(dir.path / "sp.txt");
    std::set<int> groups;
    int gid = 0;
    std::size_t rows = 0;
    while (in >> gid) {
      CHECK(gid >= 0);
      groups.insert(gid);
      ++rows;
    }
    CHECK(rows == roof.cloud.size());
    CHECK(groups.size() > 4);
  }

  SUBCASE("quality report with ground truth") {
    CHECK(run("superpoints " + dir.str("roof.xyz") + " " + dir.str("sp.txt") +
              " --label-column --quality " + dir.str("quality.json")) == 0);
    std::ifstream in(dir.path / "quality.json");
    REQUIRE(in.good());
    nlohmann::json j;
    in >> j;
    CHECK(j["fine"].contains("boundary_purity"));
    CHECK(j["fine"].contains("size_cv"));
    CHECK(j["coarse"].contains("size_cv"));
    CHECK(j["fine"]["boundary_purity"].get<double>() > 0.9);
  }

  SUBCASE("n_target of 1 is rejected") {
    CHECK(run("superpoints " + dir.str("roof.xyz") + " " + dir.str("sp.txt") +
              " --label-column --set n_target=1") != 0);
    CHECK_FALSE(fs::exists(dir.path / "sp.txt"));
  }
}

TEST_CASE("segment subcommand") {
  TempDir dir;
  const ts::RoofSample roof = ts::make_gable({1500, 0.01, 0.0, 11});
  save_xyz(roof.cloud, dir.path / "roof.xyz");

  SUBCASE("produces a labeling with two instances") {
    CHECK(run("segment " + dir.str("roof.xyz") + " " + dir.str("final.txt")) == 0);
    const InstanceLabeling out =
        load_labeling(dir.path / "final.txt", static_cast<std::ptrdiff_t>(roof.cloud.size()));
    std::set<int> ids;
    for (int l : out.labels) {
      if (l != kNoise) ids.insert(l);
    }
    CHECK(ids.size() == 2);
  }

  SUBCASE("trace flag writes the three stage labelings") {
    CHECK(run("segment " + dir.str("roof.xyz") + " " + dir.str("final.txt") + " --trace " +
              dir.str("stage")) == 0);
    CHECK(fs::exists(dir.path / "stage.raw.txt"));
    CHECK(fs::exists(dir.path / "stage.completed.txt"));
    CHECK(fs::exists(dir.path / "stage.refined.txt"));
    CHECK(line_count(dir.path / "stage.refined.txt") == roof.cloud.size());
  }

  SUBCASE("external labels of the wrong length fail") {
    save_labeling(InstanceLabeling(std::vector<int>(10, 0)), dir.path / "short.txt");
    CHECK(run("segment " + dir.str("roof.xyz") + " " + dir.str("final.txt") + " --labels " +
              dir.str("short.txt")) != 0);
    CHECK_FALSE(fs::exists(dir.path / "final.txt"));
  }

  SUBCASE("score sidecar carries fused = 1 per instance") {
    CHECK(run("segment " + dir.str("roof.xyz") + " " + dir.str("final.txt") +
              " --emit-scores " + dir.str("scores.txt")) == 0);
    std::ifstream in(dir.path / "scores.txt");
    int id;
    double s, ms;
    std::size_t rows = 0;
    while (in >> id >> s >> ms) {
      CHECK(s == 1.0);
      CHECK(ms == 1.0);
      ++rows;
    }
    CHECK(rows == 2);
  }
}

TEST_CASE("eval subcommand") {
  TempDir dir;
  fs::create_directories(dir.path / "gt");
  fs::create_directories(dir.path / "pred");
  const ts::RoofSample a = ts::make_gable({600, 0.0, 0.0, 3});
  const ts::RoofSample b = ts::make_pyramid({700, 0.0, 0.0, 4});
  save_labeling(a.gt, dir.path / "gt" / "a.txt");
  save_labeling(b.gt, dir.path / "gt" / "b.txt");
  save_labeling(a.gt, dir.path / "pred" / "a.txt");
  save_labeling(b.gt, dir.path / "pred" / "b.txt");

  SUBCASE("pred dir equal to gt dir scores 1.0 everywhere") {
    CHECK(run("eval " + dir.str("gt") + " " + dir.str("pred") + " " + dir.str("report.json")) ==
          0);
    std::ifstream in(dir.path / "report.json");
    nlohmann::json j;
    in >> j;
    CHECK(j["aggregate"]["cov"].get<double>() == 1.0);
    CHECK(j["aggregate"]["wcov"].get<double>() == 1.0);
    CHECK(j["aggregate"]["f1"].get<double>() == 1.0);
    CHECK(j["aggregate"]["accuracy"].get<double>() == 1.0);
    CHECK(j["samples"].size() == 2);
    CHECK(j["missing"].empty());

    // aggregate equals the mean of the per-sample values
    double mean_cov = 0.0;
    for (const auto& s : j["samples"]) mean_cov += s["cov"].get<double>() / 2.0;
    CHECK(std::abs(j["aggregate"]["cov"].get<double>() - mean_cov) < 1e-12);
  }

  SUBCASE("missing samples are reported and fail without --allow-missing") {
    fs::remove(dir.path / "pred" / "b.txt");
    CHECK(run("eval " + dir.str("gt") + " " + dir.str("pred") + " " + dir.str("report.json")) !=
          0);
    std::ifstream in(dir.path / "report.json");  // report still written
    nlohmann::json j;
    in >> j;
    REQUIRE(j["missing"].size() == 1);
    CHECK(j["missing"][0].get<std::string>() == "b");
    CHECK(j["samples"].size() == 1);

    CHECK(run("eval " + dir.str("gt") + " " + dir.str("pred") + " " + dir.str("report.json") +
              " --allow-missing") == 0);
  }
}

TEST_CASE("degrade subcommand") {
  TempDir dir;
  fs::create_directories(dir.path / "in");
  const ts::RoofSample roof = ts::make_gable({800, 0.0, 0.0, 13});
  save_xyz(roof.cloud, dir.path / "in" / "roof.xyz", &roof.gt);

  SUBCASE("downsample batch writes the manifest and halved samples") {
    CHECK(run("degrade " + dir.str("in") + " " + dir.str("out") + " downsample") == 0);
    CHECK(fs::exists(dir.path / "out" / "roof.xyz"));
    CHECK(line_count(dir.path / "out" / "roof.xyz") == 400);

    std::ifstream in(dir.path / "out" / "manifest.json");
    nlohmann::json j;
    in >> j;
    CHECK(j["operator"] == "downsample");
    CHECK(j["params"]["keep_fraction"].get<double>() == 0.5);
    CHECK(j["samples"].size() == 1);
  }

  SUBCASE("unknown operator is rejected") {
    CHECK(run("degrade " + dir.str("in") + " " + dir.str("out") + " melt") != 0);
  }

  SUBCASE("corrupt_boundaries preserves coordinates") {
    CHECK(run("degrade " + dir.str("in") + " " + dir.str("out") + " corrupt_boundaries") == 0);
    const XyzContents out = load_xyz(dir.path / "out" / "roof.xyz", true);
    REQUIRE(out.cloud.size() == roof.cloud.size());
    for (std::size_t i = 0; i < roof.cloud.size(); ++i) {
      CHECK(out.cloud.points[i] == roof.cloud.points[i]);
    }
  }
}

TEST_CASE("kan-check subcommand") {
  CHECK(run("kan-check") == 0);
  CHECK(run("kan-check --seed 7") == 0);
}

TEST_CASE("exit code taxonomy") {
  TempDir dir;
  CHECK(run("") != 0);                   // no subcommand
  CHECK(run("features") != 0);           // missing args
  CHECK(run("eval a b c --config " + dir.str("none.cfg")) != 0);  // absent config
}
