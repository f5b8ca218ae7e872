#pragma once
// Parameter-dependent normal form at a transcritical double-zero point: the
// expansion point stays an equilibrium for every nearby parameter value, so
// the constant unfolding term of the generic case is replaced by a linear
// one.  The reduced system on the center manifold is
//   w0' = w1,   w1' = beta1 w0 + beta2 w1 + a w0^2 + b w0 w1,
// in a rescaled time t -> (1 + theta1000 w0 + theta0010 beta1
// + theta0001 beta2) t, with the physical parameters recovered as
// alpha = alpha0 + K(beta) and the manifold as the history-valued expansion
// H(w0, w1, beta1, beta2) with H(0, 0, beta) = 0.  The critical stage is the
// same as in the generic case; the parameter-dependent stages differ because
// the unfolding directions are fixed by a 2x2 normalization instead of a
// transversality vector, and no pure-parameter manifold terms exist.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bt/chmat.hpp"
#include "bt/model.hpp"
#include "bt/nf_common.hpp"
#include "bt/spectral.hpp"

namespace bt {

struct TranscriticalBtNormalForm {
  // expansion point
  VectorXd eq;
  Vector2d alpha0;
  CharMatrix cm;
  JordanChain chain;

  // reduced vector field and time rescaling
  double a = 0.0, b = 0.0;
  double theta1000 = 0.0, theta0010 = 0.0, theta0001 = 0.0;

  // parameter transformation K(beta) = K10 b1 + K01 b2 + 1/2 K20 b1^2
  //                                    + K11 b1 b2 + 1/2 K02 b2^2
  Vector2d K10, K01, K20, K11, K02;

  // manifold coefficients, factorial convention (see nf_h)
  PolyFun h2000, h1100, h0200, h3000, h2100;
  PolyFun h1010, h1001, h0110, h0101;
  PolyFun h2010, h1110, h2001, h1101, h1002, h0102, h1011, h0111, h1020, h0120;

  // scalars fixing the non-unique parts of the chain; kept for cross-checks
  double gamma1 = 0.0, gamma2 = 0.0, gamma3 = 0.0, gamma4 = 0.0, gamma5 = 0.0;
  double gamma6 = 0.0, gamma7 = 0.0, gamma8 = 0.0, gamma9 = 0.0, gamma10 = 0.0;
  double delta1 = 0.0, delta2 = 0.0, delta3 = 0.0, delta4 = 0.0;
  double zeta1 = 0.0, zeta2 = 0.0, zeta3 = 0.0, zeta4 = 0.0;

  // every solved linear system with its stored solution and bordered slack
  std::vector<CascadeSystem> systems;
};

inline TranscriticalBtNormalForm compute_transcritical_nf(const DdeModel& m,
                                                          const VectorXd& eq,
                                                          const Vector2d& alpha0,
                                                          const NfOptions& opt = {}) {
  TranscriticalBtNormalForm nf;
  nf.eq = eq;
  nf.alpha0 = alpha0;
  const MatrixXd xi0 = eq.replicate(1, (Eigen::Index)m.n_delays());
  nf.cm = make_char_matrix(m, xi0, alpha0);
  nf.chain = compute_jordan(nf.cm, opt.jordan);

  const TaylorOps ops(m, xi0, alpha0);
  NfWorkspace ws(ops, nf.cm, nf.chain, opt.slack_tol, &nf.systems);
  const PolyFun& f0 = ws.f0;
  const PolyFun& f1 = ws.f1;
  const PolyFun pz = PolyFun::zero(m.n);

  // the whole construction assumes the expansion point is an equilibrium for
  // all nearby parameters, so the rhs must not move with them to first order
  if (ops.J1mat().lpNorm<Eigen::Infinity>() > opt.degenerate_tol)
    throw DegenerateNormalFormError(
        "expansion point is not parameter-fixed: rhs parameter derivative is nonzero");

  const CriticalStage cs = compute_critical_stage(ws, opt.degenerate_tol);
  nf.a = cs.a;
  nf.b = cs.b;
  nf.theta1000 = cs.theta1000;
  nf.gamma1 = cs.gamma1;
  nf.gamma2 = cs.gamma2;
  nf.h2000 = cs.h2000;
  nf.h1100 = cs.h1100;
  nf.h0200 = cs.h0200;
  nf.h3000 = cs.h3000;
  nf.h2100 = cs.h2100;
  const double a = nf.a, b = nf.b, t1000 = nf.theta1000;

  // ---- terms linear in beta ----
  // the unfolding directions normalize the linear parameter terms of the
  // reduced field: the w0 row puts (beta1, beta2) into w1' with coefficients
  // (1, 0), the w1 row with coefficients (0, 1)
  const Vector2d e1(1.0, 0.0), e2(0.0, 1.0);
  const VectorXd a1_00 = ops.A1(f0, e1), a1_01 = ops.A1(f0, e2);
  const VectorXd a1_10 = ops.A1(f1, e1), a1_11 = ops.A1(f1, e2);
  Matrix2d T;
  T(0, 0) = ws.p1dot(a1_00);
  T(0, 1) = ws.p1dot(a1_01);
  T(1, 0) = ws.p1dot(a1_10) + ws.p0dot(a1_00);
  T(1, 1) = ws.p1dot(a1_11) + ws.p0dot(a1_01);
  const double row0 = T.row(0).norm(), row1 = T.row(1).norm();
  if (std::abs(T.determinant()) <= opt.degenerate_tol * std::max(1.0, row0 * row1)) {
    if (row0 <= opt.degenerate_tol)
      throw DegenerateNormalFormError(
          "parameter transversality fails: the w0 row p1 A1(phi0, .) vanishes");
    if (row1 <= opt.degenerate_tol)
      throw DegenerateNormalFormError(
          "parameter transversality fails: the w1 row p1 A1(phi1, .) + p0 A1(phi0, .) "
          "vanishes");
    throw DegenerateNormalFormError(
        "parameter transversality fails: the w0 and w1 normalization rows are linearly "
        "dependent");
  }
  const Matrix2d Tinv = T.inverse();
  nf.K10 = Tinv.col(0);
  nf.K01 = Tinv.col(1);
  nf.delta1 = nf.K10(0);
  nf.delta2 = nf.K10(1);
  nf.delta3 = nf.K01(0);
  nf.delta4 = nf.K01(1);

  // ---- terms linear in beta and the state ----
  // all four systems are solvable outright; the free phi0 multiples gamma3,
  // gamma4 and the time constants theta0010, theta0001 are fixed one order up
  const VectorXd k1010 = ops.A1(f0, nf.K10);
  const Binv0Result hat1010 = ws.solve(k1010, f1);
  const VectorXd k1001 = ops.A1(f0, nf.K01);
  const Binv0Result hat1001 = ws.solve(k1001, pz);
  const VectorXd k0110 = ops.A1(f1, nf.K10);
  const Binv0Result hat0110 = ws.solve(k0110, hat1010.v);
  const VectorXd k0101 = ops.A1(f1, nf.K01);
  const Binv0Result hat0101 = ws.solve(k0101, hat1001.v + f1);

  // gamma3 and theta0010 from the w0^2 beta1 / w0 w1 beta1 pair; the pairing
  // of the unsolvable trial h2010 is eliminated through the solution identity
  // <psi1, h> = <psi0, w> - p0 kappa
  auto resid_g3t = [&](double g3, double th) -> Vector2d {
    const PolyFun h1010 = hat1010.v + g3 * f0;
    const PolyFun h0110 = hat0110.v + (g3 - th) * f1;
    const VectorXd k2010 =
        ops.A1(nf.h2000, nf.K10) + 2.0 * ops.B(h1010, f0) + ops.B1(f0, f0, nf.K10);
    const PolyFun w2010 = 2.0 * (a * h0110 + nf.h1100 - t1000 * f1 - a * th * f1);
    const VectorXd k1110 = ops.A1(nf.h1100, nf.K10) + ops.B(h0110, f0) +
                           ops.B(h1010, f1) + ops.B1(f0, f1, nf.K10);
    const PolyFun w1110_rest = b * h0110 + nf.h0200 - t1000 * (h1010 - th * f0) -
                               th * (nf.h2000 + b * f1 - t1000 * f0);
    const double pair_h2010 = ws.pair0(w2010) - ws.p0dot(k2010);
    return Vector2d(ws.p1dot(k2010) - ws.pair1(w2010),
                    ws.p1dot(k1110) - ws.pair1(w1110_rest) - pair_h2010);
  };
  const Affine2 g3t = solve_affine2(resid_g3t, "gamma3 and theta0010");
  nf.gamma3 = g3t.c(0);
  nf.theta0010 = g3t.c(1);
  nf.zeta1 = -g3t.r0(0);
  nf.zeta2 = -g3t.r0(1);

  // gamma4 and theta0001 from the w0^2 beta2 / w0 w1 beta2 pair, eliminating
  // h2001 the same way
  auto resid_g4t = [&](double g4, double th) -> Vector2d {
    const PolyFun h1001 = hat1001.v + g4 * f0;
    const PolyFun h0101 = hat0101.v + (g4 - th) * f1;
    const VectorXd k2001 =
        ops.A1(nf.h2000, nf.K01) + 2.0 * ops.B(h1001, f0) + ops.B1(f0, f0, nf.K01);
    const PolyFun w2001 = 2.0 * a * (h0101 - th * f1);
    const VectorXd k1101 = ops.A1(nf.h1100, nf.K01) + ops.B(h0101, f0) +
                           ops.B(h1001, f1) + ops.B1(f0, f1, nf.K01);
    const PolyFun w1101_rest = b * h0101 + nf.h1100 - t1000 * (h1001 + f1 - th * f0) -
                               th * (nf.h2000 + b * f1 - t1000 * f0);
    const double pair_h2001 = ws.pair0(w2001) - ws.p0dot(k2001);
    return Vector2d(ws.p1dot(k2001) - ws.pair1(w2001),
                    ws.p1dot(k1101) - ws.pair1(w1101_rest) - pair_h2001);
  };
  const Affine2 g4t = solve_affine2(resid_g4t, "gamma4 and theta0001");
  nf.gamma4 = g4t.c(0);
  nf.theta0001 = g4t.c(1);
  nf.zeta3 = -g4t.r0(0);
  nf.zeta4 = -g4t.r0(1);

  nf.h1010 = hat1010.v + nf.gamma3 * f0;
  nf.h1001 = hat1001.v + nf.gamma4 * f0;
  nf.h0110 = hat0110.v + (nf.gamma3 - nf.theta0010) * f1;
  nf.h0101 = hat0101.v + (nf.gamma4 - nf.theta0001) * f1;
  ws.record("h1010", k1010, f1, nf.h1010, hat1010.slack);
  ws.record("h1001", k1001, pz, nf.h1001, hat1001.slack);
  ws.record("h0110", k0110, nf.h1010 - nf.theta0010 * f0, nf.h0110, hat0110.slack);
  ws.record("h0101", k0101, nf.h1001 + f1 - nf.theta0001 * f0, nf.h0101, hat0101.slack);

  // ---- quadratic parameter terms ----
  // each second-order K block is a combination of the unfolding directions,
  // fixed by the corresponding w0 / w1 solvability pair; the unsolvable trial
  // h1002 / h1011 / h1020 pairings are eliminated as above
  auto k1002_of = [&](const Vector2d& K02) -> VectorXd {
    return 2.0 * ops.A1(nf.h1001, nf.K01) + ops.A1(f0, K02) + ops.A2(f0, nf.K01, nf.K01);
  };
  auto k0102_of = [&](const Vector2d& K02) -> VectorXd {
    return 2.0 * ops.A1(nf.h0101, nf.K01) + ops.A1(f1, K02) + ops.A2(f1, nf.K01, nf.K01);
  };
  const PolyFun w0102_rest =
      2.0 * nf.h0101 - 2.0 * nf.theta0001 * (nf.h1001 + f1 - nf.theta0001 * f0);
  auto resid_g56 = [&](double g5, double g6) -> Vector2d {
    const Vector2d K02 = g5 * nf.K10 + g6 * nf.K01;
    const VectorXd k1002 = k1002_of(K02);
    return Vector2d(ws.p1dot(k1002),
                    ws.p1dot(k0102_of(K02)) - ws.pair1(w0102_rest) + ws.p0dot(k1002));
  };
  const Affine2 g56 = solve_affine2(resid_g56, "gamma5 and gamma6");
  nf.gamma5 = g56.c(0);
  nf.gamma6 = g56.c(1);
  nf.K02 = nf.gamma5 * nf.K10 + nf.gamma6 * nf.K01;

  auto k1011_of = [&](const Vector2d& K11) -> VectorXd {
    return ops.A1(nf.h1001, nf.K10) + ops.A1(nf.h1010, nf.K01) + ops.A1(f0, K11) +
           ops.A2(f0, nf.K01, nf.K10);
  };
  auto k0111_of = [&](const Vector2d& K11) -> VectorXd {
    return ops.A1(nf.h0101, nf.K10) + ops.A1(nf.h0110, nf.K01) + ops.A1(f1, K11) +
           ops.A2(f1, nf.K01, nf.K10);
  };
  const PolyFun w1011 = nf.h0101 - nf.theta0001 * f1;
  const PolyFun w0111_rest = nf.h0110 -
                             nf.theta0010 * (nf.h1001 + f1 - nf.theta0001 * f0) -
                             nf.theta0001 * (nf.h1010 - nf.theta0010 * f0);
  auto resid_g78 = [&](double g7, double g8) -> Vector2d {
    const Vector2d K11 = g7 * nf.K10 + g8 * nf.K01;
    const VectorXd k1011 = k1011_of(K11);
    const double pair_h1011 = ws.pair0(w1011) - ws.p0dot(k1011);
    return Vector2d(ws.p1dot(k1011) - ws.pair1(w1011),
                    ws.p1dot(k0111_of(K11)) - ws.pair1(w0111_rest) - pair_h1011);
  };
  const Affine2 g78 = solve_affine2(resid_g78, "gamma7 and gamma8");
  nf.gamma7 = g78.c(0);
  nf.gamma8 = g78.c(1);
  nf.K11 = nf.gamma7 * nf.K10 + nf.gamma8 * nf.K01;

  auto k1020_of = [&](const Vector2d& K20) -> VectorXd {
    return 2.0 * ops.A1(nf.h1010, nf.K10) + ops.A1(f0, K20) + ops.A2(f0, nf.K10, nf.K10);
  };
  auto k0120_of = [&](const Vector2d& K20) -> VectorXd {
    return 2.0 * ops.A1(nf.h0110, nf.K10) + ops.A1(f1, K20) + ops.A2(f1, nf.K10, nf.K10);
  };
  const PolyFun w1020 = 2.0 * (nf.h0110 - nf.theta0010 * f1);
  const PolyFun w0120_rest = -2.0 * nf.theta0010 * (nf.h1010 - nf.theta0010 * f0);
  auto resid_g910 = [&](double g9, double g10) -> Vector2d {
    const Vector2d K20 = g9 * nf.K10 + g10 * nf.K01;
    const VectorXd k1020 = k1020_of(K20);
    const double pair_h1020 = ws.pair0(w1020) - ws.p0dot(k1020);
    return Vector2d(ws.p1dot(k1020) - ws.pair1(w1020),
                    ws.p1dot(k0120_of(K20)) - ws.pair1(w0120_rest) - pair_h1020);
  };
  const Affine2 g910 = solve_affine2(resid_g910, "gamma9 and gamma10");
  nf.gamma9 = g910.c(0);
  nf.gamma10 = g910.c(1);
  nf.K20 = nf.gamma9 * nf.K10 + nf.gamma10 * nf.K01;

  // ---- cubic-order systems, now all solvable ----
  const VectorXd k2010 =
      ops.A1(nf.h2000, nf.K10) + 2.0 * ops.B(nf.h1010, f0) + ops.B1(f0, f0, nf.K10);
  const PolyFun w2010 =
      2.0 * (a * nf.h0110 + nf.h1100 - t1000 * f1 - a * nf.theta0010 * f1);
  const Binv0Result r2010 = ws.solve(k2010, w2010);
  nf.h2010 = r2010.v;
  ws.record("h2010", k2010, w2010, nf.h2010, r2010.slack);

  const VectorXd k1110 = ops.A1(nf.h1100, nf.K10) + ops.B(nf.h0110, f0) +
                         ops.B(nf.h1010, f1) + ops.B1(f0, f1, nf.K10);
  const PolyFun w1110 = b * nf.h0110 + nf.h0200 + nf.h2010 -
                        t1000 * (nf.h1010 - nf.theta0010 * f0) -
                        nf.theta0010 * (nf.h2000 + b * f1 - t1000 * f0);
  const Binv0Result r1110 = ws.solve(k1110, w1110);
  nf.h1110 = r1110.v;
  ws.record("h1110", k1110, w1110, nf.h1110, r1110.slack);

  const VectorXd k2001 =
      ops.A1(nf.h2000, nf.K01) + 2.0 * ops.B(nf.h1001, f0) + ops.B1(f0, f0, nf.K01);
  const PolyFun w2001 = 2.0 * a * (nf.h0101 - nf.theta0001 * f1);
  const Binv0Result r2001 = ws.solve(k2001, w2001);
  nf.h2001 = r2001.v;
  ws.record("h2001", k2001, w2001, nf.h2001, r2001.slack);

  const VectorXd k1101 = ops.A1(nf.h1100, nf.K01) + ops.B(nf.h0101, f0) +
                         ops.B(nf.h1001, f1) + ops.B1(f0, f1, nf.K01);
  const PolyFun w1101 = b * nf.h0101 + nf.h1100 + nf.h2001 -
                        t1000 * (nf.h1001 + f1 - nf.theta0001 * f0) -
                        nf.theta0001 * (nf.h2000 + b * f1 - t1000 * f0);
  const Binv0Result r1101 = ws.solve(k1101, w1101);
  nf.h1101 = r1101.v;
  ws.record("h1101", k1101, w1101, nf.h1101, r1101.slack);

  const VectorXd k1002 = k1002_of(nf.K02);
  const Binv0Result r1002 = ws.solve(k1002, pz);
  nf.h1002 = r1002.v;
  ws.record("h1002", k1002, pz, nf.h1002, r1002.slack);

  const VectorXd k0102 = k0102_of(nf.K02);
  const PolyFun w0102 = w0102_rest + nf.h1002;
  const Binv0Result r0102 = ws.solve(k0102, w0102);
  nf.h0102 = r0102.v;
  ws.record("h0102", k0102, w0102, nf.h0102, r0102.slack);

  const VectorXd k1011 = k1011_of(nf.K11);
  const Binv0Result r1011 = ws.solve(k1011, w1011);
  nf.h1011 = r1011.v;
  ws.record("h1011", k1011, w1011, nf.h1011, r1011.slack);

  const VectorXd k0111 = k0111_of(nf.K11);
  const PolyFun w0111 = w0111_rest + nf.h1011;
  const Binv0Result r0111 = ws.solve(k0111, w0111);
  nf.h0111 = r0111.v;
  ws.record("h0111", k0111, w0111, nf.h0111, r0111.slack);

  const VectorXd k1020 = k1020_of(nf.K20);
  const Binv0Result r1020 = ws.solve(k1020, w1020);
  nf.h1020 = r1020.v;
  ws.record("h1020", k1020, w1020, nf.h1020, r1020.slack);

  const VectorXd k0120 = k0120_of(nf.K20);
  const PolyFun w0120 = w0120_rest + nf.h1020;
  const Binv0Result r0120 = ws.solve(k0120, w0120);
  nf.h0120 = r0120.v;
  ws.record("h0120", k0120, w0120, nf.h0120, r0120.slack);

  return nf;
}

// ---- evaluators ----

// parameter offset alpha - alpha0 for reduced parameters (b1, b2)
inline Vector2d nf_K(const TranscriticalBtNormalForm& nf, double b1, double b2) {
  return nf.K10 * b1 + nf.K01 * b2 + nf.K20 * (0.5 * b1 * b1) + nf.K11 * (b1 * b2) +
         nf.K02 * (0.5 * b2 * b2);
}

// reduced vector field
inline Vector2d nf_rhs(const TranscriticalBtNormalForm& nf, double w0, double w1, double b1,
                       double b2) {
  return Vector2d(w1, b1 * w0 + b2 * w1 + nf.a * w0 * w0 + nf.b * w0 * w1);
}

// time-rescaling factor
inline double nf_time_factor(const TranscriticalBtNormalForm& nf, double w0, double /*w1*/,
                             double b1, double b2) {
  return 1.0 + nf.theta1000 * w0 + nf.theta0010 * b1 + nf.theta0001 * b2;
}

namespace detail {

inline std::vector<HTerm> h_terms(const TranscriticalBtNormalForm& nf) {
  return {
      {2, 0, 0, 0, &nf.h2000}, {1, 1, 0, 0, &nf.h1100}, {0, 2, 0, 0, &nf.h0200},
      {3, 0, 0, 0, &nf.h3000}, {2, 1, 0, 0, &nf.h2100}, {1, 0, 1, 0, &nf.h1010},
      {1, 0, 0, 1, &nf.h1001}, {0, 1, 1, 0, &nf.h0110}, {0, 1, 0, 1, &nf.h0101},
      {2, 0, 1, 0, &nf.h2010}, {1, 1, 1, 0, &nf.h1110}, {2, 0, 0, 1, &nf.h2001},
      {1, 1, 0, 1, &nf.h1101}, {1, 0, 0, 2, &nf.h1002}, {0, 1, 0, 2, &nf.h0102},
      {1, 0, 1, 1, &nf.h1011}, {0, 1, 1, 1, &nf.h0111}, {1, 0, 2, 0, &nf.h1020},
      {0, 1, 2, 0, &nf.h0120},
  };
}

}  // namespace detail

// manifold expansion H (includes the linear part phi0 w0 + phi1 w1) and its
// partial derivatives in the reduced coordinates; every term carries at least
// one power of w, so H(0, 0, beta) = 0 identically
inline PolyFun nf_h_partial(const TranscriticalBtNormalForm& nf, double w0, double w1,
                            double b1, double b2, int dw0, int dw1) {
  return detail::h_partial_impl(nf.chain, detail::h_terms(nf), (int)nf.eq.size(), w0, w1, b1,
                                b2, dw0, dw1);
}

inline PolyFun nf_h(const TranscriticalBtNormalForm& nf, double w0, double w1, double b1,
                    double b2) {
  return nf_h_partial(nf, w0, w1, b1, b2, 0, 0);
}

inline NfPointEval nf_point_eval(const TranscriticalBtNormalForm& nf, double w0, double w1,
                                 double b1, double b2) {
  NfPointEval at;
  at.H = nf_h(nf, w0, w1, b1, b2);
  at.Hw0 = nf_h_partial(nf, w0, w1, b1, b2, 1, 0);
  at.Hw1 = nf_h_partial(nf, w0, w1, b1, b2, 0, 1);
  at.K = nf_K(nf, b1, b2);
  at.wdot = nf_rhs(nf, w0, w1, b1, b2);
  at.theta = nf_time_factor(nf, w0, w1, b1, b2);
  return at;
}

}  // namespace bt
