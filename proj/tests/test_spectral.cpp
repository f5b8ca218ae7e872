#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bt/models.hpp"
#include "bt/spectral.hpp"

using namespace bt;
using Catch::Matchers::WithinAbs;

namespace {

CharMatrix char_at_bt(const BuiltModel& bm) {
  return make_char_matrix(bm.model, bm.bt.eq.replicate(1, bm.model.n_delays()), bm.bt.alpha0);
}

// psi_1(s) = p1, psi_0(s) = p0 - s p1 on [0, max delay];
// <psi, w> = psi(0) w(0) + sum_j int_{-tau_j}^0 psi(xi + tau_j) A_j w(xi) dxi.
// Gauss-Legendre with 5 nodes per delay interval, exact for the polynomial
// integrands (degree <= 9) used here.
double pair_quadrature(const CharMatrix& cm, const JordanChain& ch, int i, const PolyFun& w) {
  static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640};
  static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                               0.4786286704993665, 0.2369268850561891};
  auto psi = [&](double s) -> VectorXd { return i == 1 ? ch.p1 : VectorXd(ch.p0 - s * ch.p1); };
  double r = psi(0.0).dot(w.eval(0.0));
  for (size_t j = 0; j < cm.delays.size(); ++j) {
    const double tau = cm.delays[j];
    if (tau == 0.0) continue;
    double acc = 0.0;
    for (int g = 0; g < 5; ++g) {
      const double x = 0.5 * tau * (gx[g] - 1.0);  // maps [-1,1] to [-tau, 0]
      acc += gw[g] * psi(x + tau).dot(cm.A[j] * w.eval(x));
    }
    r += 0.5 * tau * acc;
  }
  return r;
}

PolyFun random_polyfun(int n, int deg, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<VectorXd> c(static_cast<size_t>(deg) + 1);
  for (auto& ck : c) {
    ck = VectorXd(n);
    for (int r = 0; r < n; ++r) ck[r] = u(rng);
  }
  return PolyFun(std::move(c));
}

double chain_defect(const CharMatrix& cm, const JordanChain& ch) {
  const MatrixXd D0 = delta0(cm, 0), D1 = delta0(cm, 1);
  double r = (D0 * ch.q0).norm();
  r = std::max(r, (D0 * ch.q1 + D1 * ch.q0).norm());
  r = std::max(r, (D0.transpose() * ch.p1).norm());
  r = std::max(r, (D0.transpose() * ch.p0 + D1.transpose() * ch.p1).norm());
  return r;
}

}  // namespace

TEST_CASE("polynomial history functions evaluate and differentiate", "[spectral]") {
  VectorXd c0(2), c1(2), c2(2);
  c0 << 1.0, -2.0;
  c1 << 0.5, 3.0;
  c2 << -1.5, 0.25;
  PolyFun p({c0, c1, c2});
  REQUIRE(p.degree() == 2);
  const double th = -0.7;
  REQUIRE_THAT((p.eval(th) - (c0 + th * c1 + th * th * c2)).norm(), WithinAbs(0.0, 1e-15));

  const MatrixXd s = p.sample({0.0, 1.0});
  REQUIRE_THAT((s.col(0) - p.eval(0.0)).norm(), WithinAbs(0.0, 1e-15));
  REQUIRE_THAT((s.col(1) - p.eval(-1.0)).norm(), WithinAbs(0.0, 1e-15));

  // derivative of the antiderivative comes back to p, and the constant sticks
  VectorXd xi(2);
  xi << 4.0, -1.0;
  PolyFun v = p.antiderivative(xi);
  REQUIRE(v.degree() == 3);
  REQUIRE_THAT((v.eval(0.0) - xi).norm(), WithinAbs(0.0, 1e-15));
  PolyFun back = v.derivative();
  REQUIRE(back.degree() == 2);
  for (int k = 0; k <= 2; ++k)
    REQUIRE_THAT((back.coeff(k) - p.coeff(k)).norm(), WithinAbs(0.0, 1e-15));

  // arithmetic trims exact cancellation in the leading coefficient
  PolyFun q = p - PolyFun({VectorXd::Zero(2), VectorXd::Zero(2), c2});
  REQUIRE(q.degree() == 1);
  PolyFun z = 0.0 * p;
  REQUIRE(z.degree() == 0);
  REQUIRE_THAT(z.max_coeff_norm(), WithinAbs(0.0, 0.0));
  REQUIRE_THROWS_AS(p + PolyFun::zero(3), std::invalid_argument);
}

TEST_CASE("nilpotent planar toy has the textbook chain", "[spectral]") {
  DdeModel m;
  m.id = "nilpotent";
  m.n = 2;
  m.delays = {0.0};
  m.rhs = [](const MatrixXd& xi, const VectorXd&) {
    VectorXd r(2);
    r << xi(1, 0), 0.0;
    return r;
  };
  const CharMatrix cm = make_char_matrix(m, MatrixXd::Zero(2, 1), VectorXd());
  const JordanChain ch = compute_jordan(cm);
  REQUIRE_THAT((ch.q0 - Vector2d(1, 0)).norm(), WithinAbs(0.0, 1e-12));
  REQUIRE_THAT((ch.q1 - Vector2d(0, 1)).norm(), WithinAbs(0.0, 1e-12));
  REQUIRE_THAT((ch.p1 - Vector2d(0, 1)).norm(), WithinAbs(0.0, 1e-12));
  REQUIRE_THAT((ch.p0 - Vector2d(1, 0)).norm(), WithinAbs(0.0, 1e-12));
}

TEST_CASE("chain residuals and pairing matrix on all bundled models", "[spectral]") {
  for (const char* id : {"predator_prey", "neural_network", "vdpo", "bam"}) {
    INFO(id);
    const auto bm = build(id);
    const CharMatrix cm = char_at_bt(bm);
    const JordanChain ch = compute_jordan(cm);
    REQUIRE_THAT(chain_defect(cm, ch), WithinAbs(0.0, 1e-9));
    REQUIRE_THAT(ch.q0.norm(), WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(ch.q1.dot(ch.q0), WithinAbs(0.0, 1e-12));

    REQUIRE_THAT(pair_psi(cm, ch, 0, phi0(ch)), WithinAbs(1.0, 1e-10));
    REQUIRE_THAT(pair_psi(cm, ch, 0, phi1(ch)), WithinAbs(0.0, 1e-10));
    REQUIRE_THAT(pair_psi(cm, ch, 1, phi0(ch)), WithinAbs(0.0, 1e-10));
    REQUIRE_THAT(pair_psi(cm, ch, 1, phi1(ch)), WithinAbs(1.0, 1e-10));
  }
}

TEST_CASE("normalization is idempotent and kills chain rescalings", "[spectral]") {
  const auto bm = build("neural_network");
  const CharMatrix cm = char_at_bt(bm);
  const JordanChain ch = compute_jordan(cm);

  const JordanChain again = normalize_chain(cm, ch);
  REQUIRE_THAT((again.q0 - ch.q0).norm(), WithinAbs(0.0, 1e-14));
  REQUIRE_THAT((again.q1 - ch.q1).norm(), WithinAbs(0.0, 1e-14));
  REQUIRE_THAT((again.p0 - ch.p0).norm(), WithinAbs(0.0, 1e-14));
  REQUIRE_THAT((again.p1 - ch.p1).norm(), WithinAbs(0.0, 1e-14));

  // q0 -> c q0, q1 -> c q1 + d q0 with compensating left chain is still a chain;
  // normalization lands on the same representative
  JordanChain scaled = ch;
  const double c = -3.25, d = 0.8;
  scaled.q0 = c * ch.q0;
  scaled.q1 = c * ch.q1 + d * ch.q0;
  scaled.p1 = ch.p1 / c;
  scaled.p0 = (ch.p0 - (d / c) * ch.p1) / c;
  const JordanChain renorm = normalize_chain(cm, scaled);
  REQUIRE_THAT((renorm.q0 - ch.q0).norm(), WithinAbs(0.0, 1e-12));
  REQUIRE_THAT((renorm.q1 - ch.q1).norm(), WithinAbs(0.0, 1e-12));
  REQUIRE_THAT((renorm.p0 - ch.p0).norm(), WithinAbs(0.0, 1e-12));
  REQUIRE_THAT((renorm.p1 - ch.p1).norm(), WithinAbs(0.0, 1e-12));
}

TEST_CASE("pairings agree with quadrature of the adjoint representation", "[spectral]") {
  const auto bm = build("neural_network");
  const CharMatrix cm = char_at_bt(bm);
  const JordanChain ch = compute_jordan(cm);
  std::mt19937 rng(20240817);
  for (int trial = 0; trial < 8; ++trial) {
    const PolyFun w = random_polyfun(cm.n, 3, rng);
    for (int i : {0, 1}) {
      INFO("trial " << trial << " i " << i);
      REQUIRE_THAT(pair_psi(cm, ch, i, w), WithinAbs(pair_quadrature(cm, ch, i, w), 1e-8));
    }
  }
}

TEST_CASE("pairing is linear in the polynomial argument", "[spectral]") {
  const auto bm = build("vdpo");
  const CharMatrix cm = char_at_bt(bm);
  const JordanChain ch = compute_jordan(cm);
  std::mt19937 rng(7);
  const PolyFun w1 = random_polyfun(cm.n, 2, rng), w2 = random_polyfun(cm.n, 3, rng);
  const double al = -1.75;
  for (int i : {0, 1})
    REQUIRE_THAT(pair_psi(cm, ch, i, al * w1 + w2),
                 WithinAbs(al * pair_psi(cm, ch, i, w1) + pair_psi(cm, ch, i, w2), 1e-12));
}

TEST_CASE("bordered polynomial inverse satisfies its defining equations", "[spectral]") {
  const auto bm = build("neural_network");
  const CharMatrix cm = char_at_bt(bm);
  const JordanChain ch = compute_jordan(cm);
  std::mt19937 rng(99);

  SECTION("zero data gives the zero function") {
    const auto r = binv0(cm, ch, VectorXd::Zero(cm.n), PolyFun::zero(cm.n));
    REQUIRE_THAT(r.v.max_coeff_norm(), WithinAbs(0.0, 1e-14));
    REQUIRE_THAT(r.slack, WithinAbs(0.0, 1e-14));
  }

  SECTION("consistent random instances") {
    for (int trial = 0; trial < 6; ++trial) {
      INFO("trial " << trial);
      const PolyFun w = random_polyfun(cm.n, 3, rng);
      // project kappa onto the solvable set: the left null vector of the
      // bordered data must be orthogonal to kappa - (Delta-sum of w)
      VectorXd kappa = random_polyfun(cm.n, 0, rng).coeff(0);
      VectorXd sum = VectorXd::Zero(cm.n);
      for (int k = 0; k <= w.degree(); ++k) sum += delta0(cm, k + 1) * w.coeff(k) / (k + 1.0);
      kappa -= ch.p1 * (ch.p1.dot(kappa - sum) / ch.p1.squaredNorm());

      const auto r = binv0(cm, ch, kappa, w);
      REQUIRE(r.slack <= 1e-8);
      // v' = w coefficientwise
      const PolyFun dv = r.v.derivative() - w;
      REQUIRE_THAT(dv.max_coeff_norm(), WithinAbs(0.0, 1e-10 * (1.0 + w.max_coeff_norm())));
      // boundary condition -sum_j A_j v(-tau_j) = kappa - w(0)
      VectorXd bnd = VectorXd::Zero(cm.n);
      for (size_t j = 0; j < cm.delays.size(); ++j) bnd -= cm.A[j] * r.v.eval(-cm.delays[j]);
      REQUIRE_THAT((bnd - (kappa - w.eval(0.0))).norm(),
                   WithinAbs(0.0, 1e-10 * (1.0 + kappa.norm())));
      // particular-solution gauge
      REQUIRE_THAT(ch.q0.dot(r.v.eval(0.0)), WithinAbs(0.0, 1e-12));
    }
  }

  SECTION("inconsistent data is rejected with the Fredholm slack") {
    const PolyFun w = random_polyfun(cm.n, 2, rng);
    REQUIRE_THROWS_AS(binv0(cm, ch, VectorXd(10.0 * ch.p1), w), BinvError);
  }
}

TEST_CASE("quadratic coefficient data is solvable exactly when a matches", "[spectral]") {
  // first cascade step: Delta(0) xi = B(phi0,phi0) - [2a phi1 terms] is solvable
  // iff a = p1 B(phi0,phi0) / 2, which pins the Hessian factor convention
  const auto bm = build("neural_network");
  const CharMatrix cm = char_at_bt(bm);
  const JordanChain ch = compute_jordan(cm);
  const MatrixXd xi0 = bm.bt.eq.replicate(1, bm.model.n_delays());

  const MatrixXd s0 = phi0(ch).sample(bm.model.delays);
  const VectorXd Bq0q0 = mlf(bm.model, xi0, bm.bt.alpha0, {state_dir(s0), state_dir(s0)});
  const double a = 0.5 * ch.p1.dot(Bq0q0);
  REQUIRE(std::abs(a) > 1e-8);

  const auto h = binv0(cm, ch, Bq0q0, 2.0 * a * phi1(ch));
  REQUIRE(h.slack <= 1e-9);
  // the wrong convention (dropping the factor-2 of the second derivative)
  // violates solvability by a wide margin
  REQUIRE_THROWS_AS(binv0(cm, ch, Bq0q0, a * phi1(ch)), BinvError);
}

TEST_CASE("jordan chain construction rejects non-BT spectra", "[spectral]") {
  SECTION("nonsingular matrix") {
    const auto bm = build("neural_network");
    VectorXd al(2);
    al << 2.0, bm.bt.alpha0[1];  // move Q well away from the double zero
    const CharMatrix cm =
        make_char_matrix(bm.model, bm.bt.eq.replicate(1, 2), al);
    REQUIRE_THROWS_AS(compute_jordan(cm), NotBtError);
  }
  SECTION("simple zero eigenvalue") {
    // x' = -x(t) + x(t-1) has Delta(z) = z + 1 - e^{-z}: z = 0 simple since
    // Delta'(0) = 2 != 0
    DdeModel m;
    m.id = "simple_zero";
    m.n = 1;
    m.delays = {0.0, 1.0};
    m.rhs = [](const MatrixXd& xi, const VectorXd&) {
      VectorXd r(1);
      r[0] = -xi(0, 0) + xi(0, 1);
      return r;
    };
    const CharMatrix cm = make_char_matrix(m, MatrixXd::Zero(1, 2), VectorXd());
    REQUIRE_THROWS_AS(compute_jordan(cm), NotBtError);
  }
}
