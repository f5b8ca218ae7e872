#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bt/chmat.hpp"
#include "bt/models.hpp"

using namespace bt;
using Catch::Matchers::WithinAbs;

TEST_CASE("built-in double-zero points are genuine", "[models]") {
  for (const char* id : {"predator_prey", "neural_network", "vdpo", "bam"}) {
    auto bm = build(id);
    INFO(id);
    MatrixXd xi = bm.bt.eq.replicate(1, bm.model.n_delays());
    CHECK(eval_rhs(bm.model, HistoryPoint{xi}, bm.bt.alpha0).norm() <= 1e-12);
    CharMatrix cm = make_char_matrix(bm.model, xi, bm.bt.alpha0);
    CHECK(std::abs(delta0(cm, 0).determinant()) <= 1e-10);
  }
}

TEST_CASE("neural network critical parameters in closed form", "[models]") {
  auto bm = build("neural_network");
  const double r39 = std::sqrt(39.0);
  CHECK_THAT(bm.bt.alpha0[0], WithinAbs(1.3, 1e-15));
  CHECK_THAT(bm.bt.alpha0[1], WithinAbs((r39 - 10 * std::atanh(std::sqrt(3.0 / 13.0))) / 20.0,
                                        1e-15));
  // Equivalent closed forms for the equilibrium.
  CHECK_THAT(bm.bt.eq[0], WithinAbs(0.25 * std::log((8 - r39) / 5), 1e-15));
  CHECK_THAT(bm.bt.eq[1], WithinAbs(-0.5 * std::sqrt(3.0 / 13.0), 1e-15));
}

TEST_CASE("BAM critical couplings", "[models]") {
  auto bm = build("bam");
  CHECK_THAT(bm.bt.alpha0[0], WithinAbs(0.36, 1e-12));
  CHECK_THAT(bm.bt.alpha0[1], WithinAbs(-0.22, 1e-12));
}

TEST_CASE("neural network odd symmetry", "[models]") {
  auto bm = build("neural_network");
  VectorXd alp(2), alm(2);
  alp << 1.1, 0.07;
  alm << 1.1, -0.07;
  MatrixXd xi(2, 2);
  xi << 0.23, -0.4, -0.11, 0.35;
  VectorXd f = eval_rhs(bm.model, HistoryPoint{xi}, alp);
  VectorXd g = eval_rhs(bm.model, HistoryPoint{MatrixXd(-xi)}, alm);
  CHECK((f + g).norm() <= 1e-14);
}

TEST_CASE("override validation", "[models]") {
  CHECK_THROWS_AS(build("predator_prey", {{"m", 1.0}}), ModelError);
  CHECK_THROWS_AS(build("predator_prey", {{"bogus", 2.0}}), ModelError);
  CHECK_THROWS_AS(build("neural_network", {{"Q", 1.0}}), ModelError);
  CHECK_THROWS_AS(build("bam", {{"mu2", 0.2}}), ModelError);  // collides with mu3
  CHECK_THROWS_AS(build("nosuchmodel"), ModelError);
  CHECK_NOTHROW(build("predator_prey", {{"tau", 2.0}}));
}

TEST_CASE("BAM delay bound for attractivity of the double-zero point", "[models][slow]") {
  StabilityBoundary sb = bam_stability_boundary(0.1, 0.3, 0.2);
  CHECK_THAT(sb.tau0, WithinAbs(5.4320, 1e-3));
  CHECK_THAT(sb.bound, WithinAbs(13.230934887939895, 1e-6));
  CHECK(sb.candidates.front().tan_residual <= 1e-10);
  bool found = false;
  for (const auto& c : sb.candidates)
    if (c.verified && c.tau == sb.bound) {
      found = true;
      CHECK(c.abs_det <= 1e-8);
    }
  CHECK(found);
  CHECK_THROWS_AS(bam_stability_boundary(0.1, 0.25, 0.25), ModelError);
}

TEST_CASE("model configuration files", "[models]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "btdde_cfg_test";
  fs::create_directories(dir);
  auto write = [&](const char* name, const char* text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  SECTION("valid config with overrides") {
    auto p = write("ok.json",
                   R"({"builtin":"predator_prey","params":{"tau":2.0},"n":2,"delays":[0,2.0]})");
    auto bm = build(load_model_config(p));
    CHECK(bm.model.delays[1] == 2.0);
  }
  SECTION("mismatched dimension") {
    auto p = write("badn.json", R"({"builtin":"bam","n":2})");
    CHECK_THROWS_AS(build(load_model_config(p)), ModelError);
  }
  SECTION("unknown field") {
    auto p = write("badkey.json", R"({"builtin":"bam","delay":[0,5]})");
    CHECK_THROWS_AS(load_model_config(p), ModelError);
  }
  SECTION("missing builtin") {
    auto p = write("nob.json", R"({"params":{}})");
    CHECK_THROWS_AS(load_model_config(p), ModelError);
  }
  SECTION("malformed json") {
    auto p = write("broken.json", "{");
    CHECK_THROWS_AS(load_model_config(p), ModelError);
  }
}
