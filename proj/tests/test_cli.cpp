#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "leaware/config.hpp"
#include "leaware/domains.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(LEAWARE_CLI_PATH) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) o.out += buf;
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("leaware_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "cfg.json";
  std::ofstream(p) << text;
  return p;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

const char* kSmall = R"({"epochs": 2, "domains": {"source": {"n": 80}}, "aug": {"ascent_steps": 2}})";

}  // namespace

TEST_CASE("le-map prints the exponent") {
  const auto o = run("le-map --map linear --param 0.5 --x0 1 --steps 1000");
  CHECK(o.code == 0);
  CHECK(o.out.find("le -0.69314") != std::string::npos);
}

TEST_CASE("invalid input exits 1") {
  const auto dir = scratch("invalid");
  CHECK(run("train --config " + write_config(dir, R"({"epochs": 2, "bogus": 1})").string()).code == 1);
  CHECK(run("train --data-fraction 1.5 --out " + dir.string()).code == 1);
  CHECK(run("train --optimizer newton --out " + dir.string()).code == 1);
  CHECK(run("train --config /nonexistent.json").code == 1);
  CHECK(run("le-map --map tent --param 3").code == 1);
  CHECK(run("nonsense").code == 1);
  CHECK(run("--help").code == 0);
}

TEST_CASE("divergence exits 2 and keeps partial metrics") {
  const auto dir = scratch("diverge");
  const auto cfg = write_config(dir, R"({"epochs": 3, "aug": null, "domains": {"source": {"n": 80}}})");
  const auto o = run("train --config " + cfg.string() + " --optimizer sgd:10000 --out " +
                     (dir / "out").string());
  CHECK(o.code == 2);
  REQUIRE(fs::exists(dir / "out" / "metrics.csv"));
  CHECK(line_count(dir / "out" / "metrics.csv") < 4);
}

TEST_CASE("gen-data writes loadable domains") {
  const auto dir = scratch("gen");
  const auto o = run("gen-data --seed 4 --data-fraction 0.5 --out " + dir.string());
  REQUIRE(o.code == 0);
  const auto src = leaware::load_csv(dir / "source.csv", 2);
  CHECK(leaware::class_counts(src) == std::vector<std::size_t>{100, 100});
  for (const char* tag : {"rot20", "rot40", "rot60"}) {
    const auto t = leaware::load_csv(dir / (std::string("target_") + tag + ".csv"), 2);
    CHECK(t.size() == 400);
    CHECK(t.domain == tag);
  }
}

TEST_CASE("train writes every output and honours the flags") {
  const auto dir = scratch("train");
  const auto cfg = write_config(dir, kSmall);
  const auto out = dir / "out";
  const auto o = run("train --config " + cfg.string() +
                     " --seed 3 --verbose --reset-perturbation-per-epoch --optimizer adam:0.01 --out " +
                     out.string());
  REQUIRE(o.code == 0);
  for (const char* f : {"config.json", "metrics.csv", "le_vs_epoch.csv", "lr_vs_epoch.csv",
                        "lr_history.csv", "iterations.csv"}) {
    CHECK(fs::exists(out / f));
  }
  CHECK(line_count(out / "metrics.csv") == 3);
  std::ifstream in(out / "config.json");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto effective = leaware::parse_config(ss.str());
  CHECK(effective.seed == 3);
  CHECK(effective.verbose);
  CHECK(effective.lyapunov.reset_per_epoch);
  CHECK(effective.optimizer.kind == leaware::OptimizerKind::adam);
  CHECK(effective.optimizer.lr == 0.01);
}

TEST_CASE("compare writes a table") {
  const auto dir = scratch("compare");
  const auto cfg = write_config(dir, kSmall);
  const auto o = run("compare --config " + cfg.string() + " --optimizer leaware,sgd --repeats 2 --out " +
                     dir.string());
  REQUIRE(o.code == 0);
  CHECK(o.out.find("±") != std::string::npos);
  // Header plus (3 targets + avg) rows per optimizer.
  CHECK(line_count(dir / "comparison.csv") == 9);
}
