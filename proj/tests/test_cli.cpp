#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mspmdp/cli.hpp"
#include "mspmdp/examples.hpp"
#include "mspmdp/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace mspmdp;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempSpec {
  std::string path;
  explicit TempSpec(const std::string& id, bool pert = false) {
    path = std::string("/tmp/mspmdp_spec_") + id + (pert ? "_p" : "") + ".json";
    save_instance(build_example(id, pert).instance, path);
  }
  ~TempSpec() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"metric", "kantorovich", "uniform(0,1)"}).code == 2);
  CHECK(run({"solve", "/no/such/file.json"}).code == 2);
}

TEST_CASE("closed-form metric query") {
  const Run r = run({"metric", "kantorovich", "uniform(-2,0,2d)", "uniform(-1.98,0,2d)"});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j.at("value").get<double>() == doctest::Approx(1.0 / 75.0).epsilon(1e-9));
}

TEST_CASE("discretized metric kinds") {
  const Run w = run({"metric", "wasserstein", "uniform(-1,1)", "uniform(-1,1)", "--r", "3",
                     "--atoms", "8"});
  REQUIRE(w.code == 0);
  CHECK(Json::parse(w.out).at("value").get<double>() == doctest::Approx(0.0).epsilon(1e-9));
  const Run fm =
      run({"metric", "fortet-mourier", "uniform(0,1)", "uniform(0,1)", "--p", "2", "--atoms", "8"});
  REQUIRE(fm.code == 0);
  CHECK(Json::parse(fm.out).at("value").get<double>() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("solve on an exported spec") {
  TempSpec spec("4.1");
  const Run r = run({"solve", spec.path, "--xi", "3", "--zeta", "3", "--rule", "midpoint"});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(std::abs(j.at("value").get<double>() - (-78.0)) <= 0.05);

  SUBCASE("deterministic byte-identical output") {
    const Run again = run({"solve", spec.path, "--xi", "3", "--zeta", "3", "--rule", "midpoint"});
    CHECK(again.out == r.out);
  }
  SUBCASE("zero-cost spec solves to zero") {
    BuiltExample zero = build_example("4.1", false);
    for (auto& st : zero.instance.stages) {
      AffineCost c;
      c.a_s = Vector::Zero(2);
      c.a_x = Vector::Zero(2);
      c.a_z = Vector::Zero(2);
      if (st.t >= 1) c.a_xi = Vector::Zero(2 * st.t);
      st.cost = c;
    }
    const std::string path = "/tmp/mspmdp_zero_spec.json";
    save_instance(zero.instance, path);
    const Run rz = run({"solve", path, "--xi", "2", "--zeta", "2"});
    std::remove(path.c_str());
    REQUIRE(rz.code == 0);
    CHECK(Json::parse(rz.out).at("value").get<double>() == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("constants subcommand prints the coefficient table") {
  TempSpec spec("4.2a");
  const Run r = run({"constants", spec.path});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j.at("LX_feasible")[0].get<double>() == doctest::Approx(0.25));
  CHECK(j.at("LX_feasible")[1].get<double>() == doctest::Approx(0.625));
  CHECK(j.at("L_xi")[0].get<double>() == doctest::Approx(8.75));
  CHECK(j.at("L_xi")[1].get<double>() == doctest::Approx(3.25));
}

TEST_CASE("bounds subcommand emits every format") {
  TempSpec base("4.2a", false), pert("4.2a", true);
  const Run j = run({"bounds", base.path, pert.path, "--xi", "3", "--zeta", "3"});
  REQUIRE(j.code == 0);
  CHECK(Json::parse(j.out).contains("bounds"));
  const Run md =
      run({"--format", "markdown", "bounds", base.path, pert.path, "--xi", "3", "--zeta", "3"});
  REQUIRE(md.code == 0);
  CHECK(md.out.find("| bound |") != std::string::npos);
  const Run csv =
      run({"--format", "csv", "bounds", base.path, pert.path, "--xi", "3", "--zeta", "3"});
  REQUIRE(csv.code == 0);
  CHECK(csv.out.rfind("bound_name,value,metric_input,dominates_gap", 0) == 0);
}

TEST_CASE("reproduce runs the fixture suite") {
  const Run r = run({"reproduce", "4.2b"});
  CHECK(r.code == 0);
  CHECK(r.out.find("[PASS]") != std::string::npos);
  CHECK(r.out.find("[FAIL]") == std::string::npos);
  const Run bad = run({"reproduce", "nope"});
  CHECK(bad.code == 2);
}

TEST_CASE("compare emits the bound table") {
  const Run r = run({"compare", "4.1", "--alpha", "10"});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j.at("nested_bound").get<double>() == doctest::Approx(0.16));
  CHECK(std::abs(j.at("stagewise_bound").get<double>() - 0.1066669) <= 1e-4);
}
