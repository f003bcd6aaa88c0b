#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "roofseg/config.hpp"

using namespace roofseg;
namespace fs = std::filesystem;

namespace {

fs::path write_config(const std::string& contents) {
  const fs::path p = fs::temp_directory_path() / "roofseg_config_test.cfg";
  std::ofstream out(p);
  out << contents;
  return p;
}

}  // namespace

TEST_CASE("defaults validate and wire the documented values") {
  RunConfig config;
  CHECK_NOTHROW(config.validate());
  CHECK(config.lambda == 20.0);      // boundary-refinement weight
  CHECK(config.max_offset == 0.5);   // precision-reduction bound
  CHECK(config.swap_radius == 0.5);  // boundary-corruption radius
  CHECK(config.keep_fraction == 0.5);
  CHECK(config.n_target == 100);
}

TEST_CASE("config files parse key = value lines with comments") {
  const auto p = write_config(
      "# growth\n"
      "t_dist = 0.08   # looser\n"
      "lambda = 25\n"
      "\n"
      "seed = 42\n");
  const RunConfig config = RunConfig::load(p);
  CHECK(config.t_dist == 0.08);
  CHECK(config.lambda == 25.0);
  CHECK(config.seed == 42);
  CHECK(config.t_norm == 0.1);  // untouched default
  fs::remove(p);
}

TEST_CASE("unknown keys are rejected") {
  const auto p = write_config("t_dst = 0.08\n");
  CHECK_THROWS_WITH_AS(RunConfig::load(p), doctest::Contains("t_dst"), ValidationError);
  fs::remove(p);
}

TEST_CASE("unparsable values name the field") {
  const auto p = write_config("t_dist = fast\n");
  CHECK_THROWS_WITH_AS(RunConfig::load(p), doctest::Contains("t_dist"), ValidationError);
  fs::remove(p);
}

TEST_CASE("range violations name the field") {
  auto expect_reject = [](const char* key, const char* value) {
    RunConfig config;
    config.set(key, value);
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains(key), ValidationError);
  };
  expect_reject("features_k", "2");
  expect_reject("contour_k", "3");
  expect_reject("normals_k", "1");
  expect_reject("tau", "0");
  expect_reject("t_dist", "-0.5");
  expect_reject("t_norm", "1.5");
  expect_reject("lambda", "1");  // must exceed 1
  expect_reject("n_target", "1");
  expect_reject("min_region", "2");
  expect_reject("iou_threshold", "0");
  expect_reject("keep_fraction", "0");
  expect_reject("max_shift", "0.6");  // >= spacing / 2
  expect_reject("kan_grid", "0");
}

TEST_CASE("save and reload round trip") {
  RunConfig config;
  config.lambda = 30.0;
  config.seed = 99;
  config.tau = 2.0;
  const fs::path p = fs::temp_directory_path() / "roofseg_config_rt.cfg";
  config.save(p);
  const RunConfig back = RunConfig::load(p);
  CHECK(back.lambda == 30.0);
  CHECK(back.seed == 99);
  CHECK(back.tau == 2.0);
  CHECK(back.to_string() == config.to_string());
  fs::remove(p);
}

TEST_CASE("set applies single overrides") {
  RunConfig config;
  config.set("lambda", "35.5");
  CHECK(config.lambda == 35.5);
  CHECK_THROWS_AS(config.set("nope", "1"), ValidationError);
}
