#include <catch2/catch_amalgamated.hpp>

#include "bt/model.hpp"
#include "bt/models.hpp"

using namespace bt;
using Catch::Matchers::WithinAbs;

namespace {

// Custom scalar model exercising the finite-difference path: no exact callback.
DdeModel scalar_poly(std::function<double(double)> f) {
  DdeModel m;
  m.id = "custom_scalar";
  m.n = 1;
  m.delays = {0.0};
  m.param_names = {};
  m.rhs = [f](const MatrixXd& xi, const VectorXd&) {
    VectorXd r(1);
    r[0] = f(xi(0, 0));
    return r;
  };
  return m;
}

}  // namespace

TEST_CASE("second form of x^2 is 2uv", "[model]") {
  auto m = scalar_poly([](double x) { return x * x; });
  const double x0 = 0.31, u = 0.7;
  MatrixXd xi(1, 1), du(1, 1);
  xi << x0;
  du << u;
  VectorXd B = mlf(m, xi, VectorXd(), {state_dir(du), state_dir(du)});
  CHECK_THAT(B[0], WithinAbs(2 * u * u, 1e-7));
}

TEST_CASE("third form of x^3 is 6uvw", "[model]") {
  auto m = scalar_poly([](double x) { return x * x * x; });
  MatrixXd xi(1, 1), du(1, 1), dv(1, 1), dw(1, 1);
  xi << 0.3;
  du << 1.0;
  dv << -0.5;
  dw << 2.0;
  VectorXd C = mlf(m, xi, VectorXd(), {state_dir(du), state_dir(dv), state_dir(dw)});
  CHECK_THAT(C[0], WithinAbs(6 * 1.0 * -0.5 * 2.0, 1e-5));
}

TEST_CASE("polarization identity for the second form", "[model]") {
  auto bm = build("neural_network");
  MatrixXd xi(2, 2);
  xi << 0.05, -0.1, 0.02, 0.08;
  const VectorXd al = bm.bt.alpha0;
  MatrixXd du(2, 2), dv(2, 2);
  du << 1.0, 0.3, -0.2, 0.5;
  dv << 0.4, -1.0, 0.7, 0.1;
  MlfOptions fd;
  fd.force_fd = true;
  auto B = [&](const MatrixXd& a, const MatrixXd& b) {
    return mlf(bm.model, xi, al, {state_dir(a), state_dir(b)}, fd);
  };
  VectorXd lhs = B(du, dv);
  VectorXd rhs = 0.25 * (B(du + dv, du + dv) - B(du - dv, du - dv));
  CHECK((lhs - rhs).norm() <= 1e-6 * (1 + lhs.norm()));
}

TEST_CASE("exact forms match finite differences", "[model]") {
  for (const char* id : {"neural_network", "vdpo", "bam", "predator_prey"}) {
    auto bm = build(id);
    const int n = bm.model.n, nd = bm.model.n_delays();
    MatrixXd xi = bm.bt.eq.replicate(1, nd);
    xi.array() += 0.03;  // move off the equilibrium so all orders are generic
    const VectorXd al = bm.bt.alpha0;
    std::vector<Direction> dirs;
    for (int t = 0; t < 3; ++t) {
      Direction d;
      d.dxi = MatrixXd::Zero(n, nd);
      d.dalpha = VectorXd::Zero(2);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < nd; ++j) d.dxi(i, j) = std::cos(1.0 + i + 2 * j + 3 * t);
      d.dalpha[0] = 0.2 * (t + 1);
      d.dalpha[1] = -0.1 * t;
      dirs.push_back(d);
    }
    MlfOptions fd;
    fd.force_fd = true;
    for (size_t k = 1; k <= 3; ++k) {
      std::vector<Direction> use(dirs.begin(), dirs.begin() + k);
      VectorXd exact = mlf(bm.model, xi, al, use);
      VectorXd approx = mlf(bm.model, xi, al, use, fd);
      INFO(id << " order " << k);
      CHECK((exact - approx).norm() <= 1e-6 * (1 + exact.norm()));
    }
  }
}

TEST_CASE("second form of the delayed oscillator at its double-zero point", "[model]") {
  // Only the delayed transfer term is quadratic at the origin, so
  // B(u,v) = (0, tau*eps*g''(0) u1d v1d) with g''(0) = 4/9.
  auto bm = build("vdpo");
  MatrixXd xi = MatrixXd::Zero(2, 2);
  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 1) = 1.0;  // unit perturbation of the delayed first component
  VectorXd B = mlf(bm.model, xi, bm.bt.alpha0, {state_dir(d), state_dir(d)});
  CHECK_THAT(B[0], WithinAbs(0.0, 1e-12));
  CHECK_THAT(B[1], WithinAbs(0.75 * 0.75 * (4.0 / 9.0), 1e-7));
}

TEST_CASE("zero directions give zero forms", "[model]") {
  auto bm = build("neural_network");
  MatrixXd xi = bm.bt.eq.replicate(1, 2);
  Direction z;  // both blocks empty = zero
  VectorXd r = mlf(bm.model, xi, bm.bt.alpha0, {z, z});
  CHECK(r.norm() == 0.0);
}

TEST_CASE("shape validation", "[model]") {
  auto bm = build("neural_network");
  MatrixXd bad(2, 1);
  bad.setZero();
  CHECK_THROWS_AS(eval_rhs(bm.model, HistoryPoint{bad}, bm.bt.alpha0), ModelError);
  MatrixXd xi = bm.bt.eq.replicate(1, 2);
  CHECK_THROWS_AS(eval_rhs(bm.model, HistoryPoint{xi}, VectorXd::Zero(3)), ModelError);
  Direction d;
  d.dxi = MatrixXd::Zero(3, 2);
  CHECK_THROWS_AS(mlf(bm.model, xi, bm.bt.alpha0, {d}), ModelError);
  CHECK_THROWS_AS(mlf(bm.model, xi, bm.bt.alpha0, {}), ModelError);
}
