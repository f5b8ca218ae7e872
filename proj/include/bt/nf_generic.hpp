#pragma once
// Parameter-dependent normal form at a generic double-zero point.  The
// reduced system on the center manifold is
//   w0' = w1,   w1' = beta1 + beta2 w1 + a w0^2 + b w0 w1,
// in a rescaled time t -> (1 + theta1000 w0 + theta0001 beta2) t, with the
// physical parameters recovered as alpha = alpha0 + K(beta) and the manifold
// itself as the history-valued expansion H(w0, w1, beta1, beta2).  All
// coefficients come from solving the chain of bordered linear systems order
// by order; scalars that are only fixed by later solvability conditions are
// probed affinely instead of transcribed in closed form.

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

struct GenericBtNormalForm {
  // expansion point
  VectorXd eq;
  Vector2d alpha0;
  CharMatrix cm;
  JordanChain chain;

  // reduced vector field and time rescaling
  double a = 0.0, b = 0.0;
  double theta1000 = 0.0, theta0001 = 0.0;

  // parameter transformation K(beta) = K10 b1 + K01 b2 + K11 b1 b2
  //                                    + 1/2 K02 b2^2 + 1/6 K03 b2^3
  Vector2d K10, K01, K11, K02, K03;

  // manifold coefficients, factorial convention (see nf_h)
  PolyFun h2000, h1100, h0200, h3000, h2100;
  PolyFun h0010, h0001, h1010, h1001, h0110, h0101;
  PolyFun h2001, h1101, h0011, h0002, h1002, h0102, h0003;

  // scalars fixing the non-unique parts of the chain; kept for cross-checks
  Vector2d nu;
  double gamma1 = 0.0, gamma2 = 0.0, gamma3 = 0.0, gamma4 = 0.0, gamma5 = 0.0, gamma6 = 0.0;
  double delta1 = 0.0, delta2 = 0.0, delta3 = 0.0;
  double zeta1 = 0.0, zeta2 = 0.0;

  // every solved linear system with its stored solution and bordered slack
  std::vector<CascadeSystem> systems;
};

inline GenericBtNormalForm compute_generic_nf(const DdeModel& m, const VectorXd& eq,
                                              const Vector2d& alpha0,
                                              const NfOptions& opt = {}) {
  GenericBtNormalForm nf;
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
  const MatrixXd J1m = ops.J1mat();
  nf.nu = J1m.transpose() * nf.chain.p1;
  if (nf.nu.norm() < opt.degenerate_tol)
    throw DegenerateNormalFormError("parameter transversality fails: p1 * J1 vanishes");
  const Vector2d K10h = nf.nu / nf.nu.squaredNorm();
  const Vector2d K01h(-K10h(1), K10h(0));

  const Binv0Result hat0010 = ws.solve(J1m * K10h, f1);
  const Binv0Result hat0001raw = ws.solve(J1m * K01h, pz);
  nf.gamma3 = -ws.p1dot(ops.B(hat0001raw.v, f0) + ops.A1(f0, K01h)) / (2.0 * a);
  const PolyFun hat0001 = hat0001raw.v + nf.gamma3 * f0;

  // delta1 scales the beta2 direction so the w1 beta2 coefficient of the
  // reduced field is exactly one
  const Binv0Result hat1001 = ws.solve(ops.B(hat0001, f0) + ops.A1(f0, K01h), pz);
  const double den1 =
      ws.p1dot(ops.B(hat0001, f1) + ops.A1(f1, K01h)) - ws.pair1(hat1001.v);
  if (std::abs(den1) < opt.degenerate_tol)
    throw DegenerateNormalFormError("beta2 normalization fails: scaling condition vanishes");
  nf.delta1 = 1.0 / den1;
  nf.K01 = nf.delta1 * K01h;
  nf.h0001 = nf.delta1 * hat0001;
  ws.record("h0001", J1m * nf.K01, pz, nf.h0001, hat0001raw.slack);

  nf.gamma4 = (ws.pair1(nf.h1100) - t1000 -
               ws.p1dot(ops.B(hat0010.v, f0) + ops.A1(f0, K10h))) /
              (2.0 * a);

  // delta2 aligns the beta1 direction; fixed by solvability of the w1 beta1
  // system
  auto resid_d2 = [&](double d2) {
    const Vector2d K10 = K10h + d2 * nf.K01;
    const PolyFun h0010 = hat0010.v + d2 * nf.h0001 + nf.gamma4 * f0;
    const VectorXd k1010 = ops.B(h0010, f0) + ops.A1(f0, K10);
    const PolyFun h1010 = ws.probe(k1010, nf.h1100 - t1000 * f1);
    const VectorXd k0110 = ops.B(h0010, f1) + ops.A1(f1, K10);
    return ws.p1dot(k0110) - ws.pair1(nf.h0200 + h1010);
  };
  nf.delta2 = solve_affine1(resid_d2, "the beta1 direction");
  nf.K10 = K10h + nf.delta2 * nf.K01;
  nf.h0010 = hat0010.v + nf.delta2 * nf.h0001 + nf.gamma4 * f0;
  ws.record("h0010", J1m * nf.K10, f1, nf.h0010, hat0010.slack);

  const VectorXd k1010 = ops.B(nf.h0010, f0) + ops.A1(f0, nf.K10);
  const PolyFun w1010 = nf.h1100 - t1000 * f1;
  const Binv0Result r1010 = ws.solve(k1010, w1010);
  nf.h1010 = r1010.v;
  ws.record("h1010", k1010, w1010, nf.h1010, r1010.slack);

  const VectorXd k0110 = ops.B(nf.h0010, f1) + ops.A1(f1, nf.K10);
  const PolyFun w0110 = nf.h0200 + nf.h1010;
  const Binv0Result r0110 = ws.solve(k0110, w0110);
  nf.h0110 = r0110.v;
  ws.record("h0110", k0110, w0110, nf.h0110, r0110.slack);

  // ---- gamma5 and theta0001, from the w0^2 beta2 / w0 w1 beta2 pair ----
  const VectorXd k1001 = ops.B(nf.h0001, f0) + ops.A1(f0, nf.K01);
  const Binv0Result r1001 = ws.solve(k1001, pz);
  const VectorXd k0101 = ops.B(nf.h0001, f1) + ops.A1(f1, nf.K01);

  // the w0 w1 beta2 condition involves h2001, which is not solvable at trial
  // values; its pairing is eliminated through the solution identity
  // <psi1, h> = <psi0, w> - p0 kappa instead of solving for it
  auto resid_g5t = [&](double g5, double th) -> Vector2d {
    const PolyFun h1001 = r1001.v + g5 * f0;
    const PolyFun h0101 = ws.probe(k0101, h1001 + f1 - th * f0);
    const VectorXd k2001 = ops.A1(nf.h2000, nf.K01) + ops.B(nf.h0001, nf.h2000) +
                           2.0 * ops.B(h1001, f0) + ops.B1(f0, f0, nf.K01) +
                           ops.C(nf.h0001, f0, f0);
    const PolyFun w2001 = 2.0 * a * (h0101 - th * f1);
    const VectorXd k1101 = ops.A1(nf.h1100, nf.K01) + ops.B(nf.h0001, nf.h1100) +
                           ops.B(h0101, f0) + ops.B(h1001, f1) +
                           ops.B1(f0, f1, nf.K01) + ops.C(nf.h0001, f0, f1);
    const PolyFun w1101_rest = b * h0101 + nf.h1100 - t1000 * (h1001 + f1 - th * f0) -
                               th * (nf.h2000 + b * f1 - t1000 * f0);
    const double pair_h2001 = ws.pair0(w2001) - ws.p0dot(k2001);
    return Vector2d(ws.p1dot(k2001) - ws.pair1(w2001),
                    ws.p1dot(k1101) - ws.pair1(w1101_rest) - pair_h2001);
  };
  const Affine2 g5t = solve_affine2(resid_g5t, "gamma5 and theta0001");
  nf.gamma5 = g5t.c(0);
  nf.theta0001 = g5t.c(1);
  nf.zeta1 = -g5t.r0(0);
  nf.zeta2 = -g5t.r0(1);

  nf.h1001 = r1001.v + nf.gamma5 * f0;
  ws.record("h1001", k1001, pz, nf.h1001, r1001.slack);

  const PolyFun w0101 = nf.h1001 + f1 - nf.theta0001 * f0;
  const Binv0Result r0101 = ws.solve(k0101, w0101);
  nf.h0101 = r0101.v;
  ws.record("h0101", k0101, w0101, nf.h0101, r0101.slack);

  const VectorXd k2001 = ops.A1(nf.h2000, nf.K01) + ops.B(nf.h0001, nf.h2000) +
                         2.0 * ops.B(nf.h1001, f0) + ops.B1(f0, f0, nf.K01) +
                         ops.C(nf.h0001, f0, f0);
  const PolyFun w2001 = 2.0 * a * (nf.h0101 - nf.theta0001 * f1);
  const Binv0Result r2001 = ws.solve(k2001, w2001);
  nf.h2001 = r2001.v;
  ws.record("h2001", k2001, w2001, nf.h2001, r2001.slack);

  const VectorXd k1101 = ops.A1(nf.h1100, nf.K01) + ops.B(nf.h0001, nf.h1100) +
                         ops.B(nf.h0101, f0) + ops.B(nf.h1001, f1) +
                         ops.B1(f0, f1, nf.K01) + ops.C(nf.h0001, f0, f1);
  const PolyFun w1101 = b * nf.h0101 + nf.h1100 + nf.h2001 -
                        t1000 * (nf.h1001 + f1 - nf.theta0001 * f0) -
                        nf.theta0001 * (nf.h2000 + b * f1 - t1000 * f0);
  const Binv0Result r1101 = ws.solve(k1101, w1101);
  nf.h1101 = r1101.v;
  ws.record("h1101", k1101, w1101, nf.h1101, r1101.slack);

  // ---- K11 and the beta1 beta2 coefficient ----
  const VectorXd mix11 = ops.A1(nf.h0001, nf.K10) + ops.A1(nf.h0010, nf.K01) +
                         ops.B(nf.h0010, nf.h0001) + ops.J2(nf.K10, nf.K01);
  const double c11 = ws.pair1(nf.h0101) - nf.theta0001 - ws.p1dot(mix11);
  nf.K11 = c11 * nf.K10;
  const VectorXd k0011 = ops.J1(nf.K11) + mix11;
  const PolyFun w0011 = nf.h0101 - nf.theta0001 * f1;
  const Binv0Result r0011 = ws.solve(k0011, w0011);
  nf.h0011 = r0011.v;
  ws.record("h0011", k0011, w0011, nf.h0011, r0011.slack);

  // ---- K02 block: delta3 and gamma6 from the w0 beta2^2 / w1 beta2^2 pair ----
  const VectorXd mix02 = 2.0 * ops.A1(nf.h0001, nf.K01) + ops.B(nf.h0001, nf.h0001) +
                         ops.J2(nf.K01, nf.K01);
  const Vector2d K02h = -ws.p1dot(mix02) * nf.K10;
  const Binv0Result hat0002 = ws.solve(ops.J1(K02h) + mix02, pz);

  auto k1002_of = [&](const Vector2d& K02, const PolyFun& h0002) -> VectorXd {
    return 2.0 * ops.A1(nf.h1001, nf.K01) + ops.A1(f0, K02) +
           ops.A2(f0, nf.K01, nf.K01) + ops.B(f0, h0002) +
           2.0 * ops.B(nf.h0001, nf.h1001) + 2.0 * ops.B1(f0, nf.h0001, nf.K01) +
           ops.C(f0, nf.h0001, nf.h0001);
  };
  auto k0102_of = [&](const Vector2d& K02, const PolyFun& h0002) -> VectorXd {
    return 2.0 * ops.A1(nf.h0101, nf.K01) + ops.A1(f1, K02) +
           ops.A2(f1, nf.K01, nf.K01) + ops.B(f1, h0002) +
           2.0 * ops.B(nf.h0001, nf.h0101) + 2.0 * ops.B1(f1, nf.h0001, nf.K01) +
           ops.C(f1, nf.h0001, nf.h0001);
  };
  // h1002 is not solvable at trial values; its pairing in the w1 beta2^2
  // condition is eliminated through <psi1, h1002> = -p0 k1002
  auto resid_d3g6 = [&](double d3, double g6) -> Vector2d {
    const Vector2d K02 = K02h + d3 * nf.K01;
    const PolyFun h0002 = hat0002.v + d3 * nf.h0001 + g6 * f0;
    const VectorXd k1002 = k1002_of(K02, h0002);
    const PolyFun w0102_rest = 2.0 * nf.h0101 -
                               2.0 * nf.theta0001 * (nf.h1001 + f1 - nf.theta0001 * f0);
    return Vector2d(ws.p1dot(k1002),
                    ws.p1dot(k0102_of(K02, h0002)) - ws.pair1(w0102_rest) +
                        ws.p0dot(k1002));
  };
  const Affine2 d3g6 = solve_affine2(resid_d3g6, "delta3 and gamma6");
  nf.delta3 = d3g6.c(0);
  nf.gamma6 = d3g6.c(1);
  nf.K02 = K02h + nf.delta3 * nf.K01;
  nf.h0002 = hat0002.v + nf.delta3 * nf.h0001 + nf.gamma6 * f0;
  ws.record("h0002", ops.J1(nf.K02) + mix02, pz, nf.h0002, hat0002.slack);

  const VectorXd k1002 = k1002_of(nf.K02, nf.h0002);
  const Binv0Result r1002 = ws.solve(k1002, pz);
  nf.h1002 = r1002.v;
  ws.record("h1002", k1002, pz, nf.h1002, r1002.slack);

  const VectorXd k0102 = k0102_of(nf.K02, nf.h0002);
  const PolyFun w0102 = 2.0 * nf.h0101 + nf.h1002 -
                        2.0 * nf.theta0001 * (nf.h1001 + f1 - nf.theta0001 * f0);
  const Binv0Result r0102 = ws.solve(k0102, w0102);
  nf.h0102 = r0102.v;
  ws.record("h0102", k0102, w0102, nf.h0102, r0102.slack);

  // ---- K03 and the beta2^3 coefficient ----
  const VectorXd mix03 =
      3.0 * ops.A1(nf.h0001, nf.K02) + 3.0 * ops.A1(nf.h0002, nf.K01) +
      3.0 * ops.B(nf.h0001, nf.h0002) + 3.0 * ops.J2(nf.K01, nf.K02) +
      3.0 * ops.A2(nf.h0001, nf.K01, nf.K01) + 3.0 * ops.B1(nf.h0001, nf.h0001, nf.K01) +
      ops.C(nf.h0001, nf.h0001, nf.h0001) + ops.J3(nf.K01, nf.K01, nf.K01);
  nf.K03 = -ws.p1dot(mix03) * nf.K10;
  const VectorXd k0003 = ops.J1(nf.K03) + mix03;
  const Binv0Result r0003 = ws.solve(k0003, pz);
  nf.h0003 = r0003.v;
  ws.record("h0003", k0003, pz, nf.h0003, r0003.slack);

  return nf;
}

// ---- evaluators ----

// parameter offset alpha - alpha0 for reduced parameters (b1, b2)
inline Vector2d nf_K(const GenericBtNormalForm& nf, double b1, double b2) {
  return nf.K10 * b1 + nf.K01 * b2 + nf.K11 * (b1 * b2) + nf.K02 * (0.5 * b2 * b2) +
         nf.K03 * (b2 * b2 * b2 / 6.0);
}

// reduced vector field
inline Vector2d nf_rhs(const GenericBtNormalForm& nf, double w0, double w1, double b1,
                       double b2) {
  return Vector2d(w1, b1 + b2 * w1 + nf.a * w0 * w0 + nf.b * w0 * w1);
}

// time-rescaling factor
inline double nf_time_factor(const GenericBtNormalForm& nf, double w0, double /*w1*/,
                             double /*b1*/, double b2) {
  return 1.0 + nf.theta1000 * w0 + nf.theta0001 * b2;
}

namespace detail {

inline std::vector<HTerm> h_terms(const GenericBtNormalForm& nf) {
  return {
      {2, 0, 0, 0, &nf.h2000}, {1, 1, 0, 0, &nf.h1100}, {0, 2, 0, 0, &nf.h0200},
      {3, 0, 0, 0, &nf.h3000}, {2, 1, 0, 0, &nf.h2100}, {0, 0, 1, 0, &nf.h0010},
      {0, 0, 0, 1, &nf.h0001}, {1, 0, 1, 0, &nf.h1010}, {1, 0, 0, 1, &nf.h1001},
      {0, 1, 1, 0, &nf.h0110}, {0, 1, 0, 1, &nf.h0101}, {2, 0, 0, 1, &nf.h2001},
      {1, 1, 0, 1, &nf.h1101}, {0, 0, 1, 1, &nf.h0011}, {0, 0, 0, 2, &nf.h0002},
      {1, 0, 0, 2, &nf.h1002}, {0, 1, 0, 2, &nf.h0102}, {0, 0, 0, 3, &nf.h0003},
  };
}

}  // namespace detail

// manifold expansion H (includes the linear part phi0 w0 + phi1 w1) and its
// partial derivatives in the reduced coordinates
inline PolyFun nf_h_partial(const GenericBtNormalForm& nf, double w0, double w1, double b1,
                            double b2, int dw0, int dw1) {
  return detail::h_partial_impl(nf.chain, detail::h_terms(nf), (int)nf.eq.size(), w0, w1, b1,
                                b2, dw0, dw1);
}

inline PolyFun nf_h(const GenericBtNormalForm& nf, double w0, double w1, double b1,
                    double b2) {
  return nf_h_partial(nf, w0, w1, b1, b2, 0, 0);
}

inline NfPointEval nf_point_eval(const GenericBtNormalForm& nf, double w0, double w1,
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
