#pragma once
// Shared machinery for the order-by-order normal form computations on the
// two-dimensional center manifold of a double-zero point: multilinear forms
// of the right-hand side at the critical point, bookkeeping for the solved
// linear systems, affine probing for scalars that are only determined by
// later solvability conditions, and the part of the coefficient chain that
// is identical in the generic and transcritical cases.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bt/chmat.hpp"
#include "bt/model.hpp"
#include "bt/spectral.hpp"

namespace bt {

using Eigen::Matrix2d;

struct DegenerateNormalFormError : std::runtime_error {
  explicit DegenerateNormalFormError(const std::string& msg) : std::runtime_error(msg) {}
};

// knobs shared by the normal form drivers
struct NfOptions {
  JordanOptions jordan;
  double slack_tol = 1e-6;
  double degenerate_tol = 1e-8;
};

// Multilinear forms of the right-hand side frozen at (xi0, alpha0).  State
// arguments are polynomial histories sampled at the delays, parameter
// arguments are directions in the two unfolding parameters.  A/B/C take
// 1/2/3 state slots, J1/J2/J3 take 1/2/3 parameter slots, A1/A2/B1 are the
// mixed blocks.  All forms are the plain directional derivatives, without
// combinatorial prefactors; Taylor factors like 1/2 B(u,u) are written at
// the call sites.
class TaylorOps {
 public:
  TaylorOps(const DdeModel& m, MatrixXd xi0, VectorXd alpha0)
      : m_(&m), xi0_(std::move(xi0)), alpha0_(std::move(alpha0)) {}

  const DdeModel& model() const { return *m_; }
  const MatrixXd& xi0() const { return xi0_; }
  const VectorXd& alpha0() const { return alpha0_; }

  VectorXd A(const PolyFun& u) const { return d({sd(u)}); }
  VectorXd B(const PolyFun& u, const PolyFun& v) const { return d({sd(u), sd(v)}); }
  VectorXd C(const PolyFun& u, const PolyFun& v, const PolyFun& w) const {
    return d({sd(u), sd(v), sd(w)});
  }
  VectorXd J1(const Vector2d& k) const { return d({param_dir(k)}); }
  VectorXd J2(const Vector2d& k, const Vector2d& l) const {
    return d({param_dir(k), param_dir(l)});
  }
  VectorXd J3(const Vector2d& k, const Vector2d& l, const Vector2d& r) const {
    return d({param_dir(k), param_dir(l), param_dir(r)});
  }
  VectorXd A1(const PolyFun& u, const Vector2d& k) const { return d({sd(u), param_dir(k)}); }
  VectorXd A2(const PolyFun& u, const Vector2d& k, const Vector2d& l) const {
    return d({sd(u), param_dir(k), param_dir(l)});
  }
  VectorXd B1(const PolyFun& u, const PolyFun& v, const Vector2d& k) const {
    return d({sd(u), sd(v), param_dir(k)});
  }

  // columns are the parameter-derivative directions J1(e1), J1(e2)
  MatrixXd J1mat() const {
    MatrixXd j(m_->n, 2);
    j.col(0) = J1(Vector2d(1.0, 0.0));
    j.col(1) = J1(Vector2d(0.0, 1.0));
    return j;
  }

 private:
  Direction sd(const PolyFun& u) const { return state_dir(u.sample(m_->delays)); }
  VectorXd d(const std::vector<Direction>& dirs) const {
    return mlf(*m_, xi0_, alpha0_, dirs);
  }
  const DdeModel* m_;
  MatrixXd xi0_;
  VectorXd alpha0_;
};

// One linear system from the coefficient chain together with its stored
// solution, so the solution can later be substituted back independently of
// how it was obtained.  The stored h solves
//   h'(theta) = w(theta),   -sum_j A_j h(-tau_j) = kappa - w(0).
struct CascadeSystem {
  std::string name;
  VectorXd kappa;
  PolyFun w;
  PolyFun h;
  double slack = 0.0;
};

struct SubstitutionCheck {
  double residual = 0.0;  // worst absolute defect over both defining relations
  double scale = 1.0;     // magnitude of the system data, for relative bounds
};

inline SubstitutionCheck check_cascade_system(const CharMatrix& cm, const CascadeSystem& s) {
  SubstitutionCheck out;
  const PolyFun diff = s.h.derivative() - s.w;
  out.residual = diff.max_coeff_norm();
  const MatrixXd vals = s.h.sample(cm.delays);
  VectorXd bnd = VectorXd::Zero(cm.n);
  for (std::size_t j = 0; j < cm.A.size(); ++j) bnd -= cm.A[j] * vals.col((Eigen::Index)j);
  out.residual = std::max(out.residual,
                          (bnd - s.kappa + s.w.eval(0.0)).lpNorm<Eigen::Infinity>());
  out.scale = std::max({1.0, s.kappa.lpNorm<Eigen::Infinity>(), s.w.max_coeff_norm(),
                        s.h.max_coeff_norm()});
  return out;
}

// Working state threaded through the chain: pairing shortcuts, bordered
// solves at fixed tolerance, unchecked solves for probing, and the record of
// finished systems.
struct NfWorkspace {
  const TaylorOps& ops;
  const CharMatrix& cm;
  const JordanChain& ch;
  double slack_tol;
  std::vector<CascadeSystem>* systems;
  PolyFun f0, f1;

  NfWorkspace(const TaylorOps& o, const CharMatrix& c, const JordanChain& j, double tol,
              std::vector<CascadeSystem>* out)
      : ops(o), cm(c), ch(j), slack_tol(tol), systems(out), f0(phi0(j)), f1(phi1(j)) {}

  double p1dot(const VectorXd& v) const { return ch.p1.dot(v); }
  double p0dot(const VectorXd& v) const { return ch.p0.dot(v); }
  double pair1(const PolyFun& w) const { return pair_psi(cm, ch, 1, w); }
  double pair0(const PolyFun& w) const { return pair_psi(cm, ch, 0, w); }

  Binv0Result solve(const VectorXd& kappa, const PolyFun& w) const {
    return binv0(cm, ch, kappa, w, slack_tol);
  }
  // solve without a consistency guard; used while probing solvability
  // conditions at trial values of still-unknown scalars, where the bordered
  // slack absorbs the (affine) inconsistency
  PolyFun probe(const VectorXd& kappa, const PolyFun& w) const {
    return binv0(cm, ch, kappa, w, std::numeric_limits<double>::infinity()).v;
  }
  void record(const std::string& name, VectorXd kappa, PolyFun w, PolyFun h, double slack) {
    systems->push_back(CascadeSystem{name, std::move(kappa), std::move(w), std::move(h), slack});
  }
};

// Scalars fixed only by a later solvability condition enter that condition
// affinely, so two (or three) evaluations of the condition's residual pin
// them down exactly.
template <class F>
double solve_affine1(F&& resid, const char* what) {
  const double r0 = resid(0.0);
  const double slope = resid(1.0) - r0;
  if (std::abs(slope) < 1e-12 * (1.0 + std::abs(r0)))
    throw DegenerateNormalFormError(std::string("solvability condition for ") + what +
                                    " is singular");
  return -r0 / slope;
}

struct Affine2 {
  Vector2d c;   // root of r0 + M c
  Matrix2d M;   // probed slope matrix
  Vector2d r0;  // residual at the origin
};

template <class F>
Affine2 solve_affine2(F&& resid, const char* what) {
  Affine2 out;
  out.r0 = resid(0.0, 0.0);
  out.M.col(0) = resid(1.0, 0.0) - out.r0;
  out.M.col(1) = resid(0.0, 1.0) - out.r0;
  const double scale = std::max(1.0, out.M.cwiseAbs().maxCoeff());
  if (std::abs(out.M.determinant()) < 1e-12 * scale * scale)
    throw DegenerateNormalFormError(std::string("solvability system for ") + what +
                                    " is singular");
  out.c = out.M.fullPivLu().solve(-out.r0);
  return out;
}

// Quadratic and cubic coefficients of the reduced vector field together with
// the beta-independent manifold coefficients.  This part of the chain is the
// same in the generic and transcritical cases.
struct CriticalStage {
  double a = 0.0;
  double b = 0.0;
  double theta1000 = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  PolyFun h2000, h1100, h0200, h3000, h2100;
};

inline CriticalStage compute_critical_stage(NfWorkspace& ws, double degenerate_tol) {
  const PolyFun& f0 = ws.f0;
  const PolyFun& f1 = ws.f1;
  CriticalStage s;

  const VectorXd Bq0q0 = ws.ops.B(f0, f0);
  const VectorXd Bq0q1 = ws.ops.B(f0, f1);
  const VectorXd Bq1q1 = ws.ops.B(f1, f1);
  const VectorXd Cq0q0q0 = ws.ops.C(f0, f0, f0);
  const VectorXd Cq0q0q1 = ws.ops.C(f0, f0, f1);

  s.a = 0.5 * ws.p1dot(Bq0q0);
  s.b = ws.p0dot(Bq0q0) + ws.p1dot(Bq0q1);
  const double qscale = std::max({1.0, Bq0q0.norm(), Bq0q1.norm()});
  if (std::abs(s.a) < degenerate_tol * qscale)
    throw DegenerateNormalFormError("quadratic coefficient a vanishes; point is degenerate");
  if (std::abs(s.b) < degenerate_tol * qscale)
    throw DegenerateNormalFormError("quadratic coefficient b vanishes; point is degenerate");

  const Binv0Result hat2000 = ws.solve(Bq0q0, 2.0 * s.a * f1);
  const Binv0Result hat1100 = ws.solve(Bq0q1, s.b * f1 + hat2000.v);

  s.theta1000 = -ws.p1dot(3.0 * ws.ops.B(hat2000.v, f0) + Cq0q0q0) / (12.0 * s.a) +
                0.5 * ws.pair1(hat1100.v);
  s.gamma1 = 0.5 * ws.p1dot(Bq1q1) - ws.pair1(hat1100.v) + s.theta1000;
  s.h2000 = hat2000.v + s.gamma1 * f0;

  // gamma2 is fixed by solvability of the w0^2 w1 system further down the
  // chain; probe that condition instead of trusting a closed form
  auto resid = [&](double g2) {
    const PolyFun h1100 = hat1100.v + (s.gamma1 - s.theta1000) * f1 + g2 * f0;
    const PolyFun h0200 = ws.probe(Bq1q1, 2.0 * h1100);
    const VectorXd k3000 = 3.0 * ws.ops.B(s.h2000, f0) + Cq0q0q0;
    const PolyFun h3000 = ws.probe(k3000, 6.0 * s.a * (h1100 - s.theta1000 * f1));
    const VectorXd k2100 =
        2.0 * ws.ops.B(h1100, f0) + ws.ops.B(s.h2000, f1) + Cq0q0q1;
    const PolyFun w2100 = 2.0 * s.a * h0200 + 2.0 * s.b * h1100 + h3000 -
                          2.0 * s.theta1000 * (s.b * f1 - s.theta1000 * f0 + s.h2000);
    return ws.p1dot(k2100) - ws.pair1(w2100);
  };
  s.gamma2 = solve_affine1(resid, "the free component of h1100");
  s.h1100 = hat1100.v + (s.gamma1 - s.theta1000) * f1 + s.gamma2 * f0;

  ws.record("h2000", Bq0q0, 2.0 * s.a * f1, s.h2000, hat2000.slack);
  ws.record("h1100", Bq0q1, s.b * f1 - s.theta1000 * f0 + s.h2000, s.h1100, hat1100.slack);

  const PolyFun w0200 = 2.0 * s.h1100;
  const Binv0Result r0200 = ws.solve(Bq1q1, w0200);
  s.h0200 = r0200.v;
  ws.record("h0200", Bq1q1, w0200, s.h0200, r0200.slack);

  const VectorXd k3000 = 3.0 * ws.ops.B(s.h2000, f0) + Cq0q0q0;
  const PolyFun w3000 = 6.0 * s.a * (s.h1100 - s.theta1000 * f1);
  const Binv0Result r3000 = ws.solve(k3000, w3000);
  s.h3000 = r3000.v;
  ws.record("h3000", k3000, w3000, s.h3000, r3000.slack);

  const VectorXd k2100 = 2.0 * ws.ops.B(s.h1100, f0) + ws.ops.B(s.h2000, f1) + Cq0q0q1;
  const PolyFun w2100 = 2.0 * s.a * s.h0200 + 2.0 * s.b * s.h1100 + s.h3000 -
                        2.0 * s.theta1000 * (s.b * f1 - s.theta1000 * f0 + s.h2000);
  const Binv0Result r2100 = ws.solve(k2100, w2100);
  s.h2100 = r2100.v;
  ws.record("h2100", k2100, w2100, s.h2100, r2100.slack);

  return s;
}

// Evaluation of the center-manifold ansatz at one point of the reduced
// phase-parameter space, case-agnostic: the expansion H, its derivatives
// with respect to the two reduced coordinates, the parameter offset K, the
// reduced vector field and the time-rescaling factor.
struct NfPointEval {
  PolyFun H, Hw0, Hw1;
  Vector2d K;
  Vector2d wdot;
  double theta = 1.0;
};

// Defect of the invariance identity at one point: the right-hand side is
// expanded through model.mlf to the same multilinear orders retained by the
// coefficient chain, the reduced field is the truncated normal form.  The
// returned value is the sup over the history interval of both components of
//   theta * (rhs expansion of H, K) - D_w H * wdot        (head)
//   theta * H'(s) - D_w H(s) * wdot                       (tail)
inline double homological_residual(const TaylorOps& ops, const NfPointEval& at, int ngrid = 33) {
  const PolyFun& H = at.H;
  const Vector2d& K = at.K;
  VectorXd head = ops.A(H) + ops.J1(K) + 0.5 * ops.B(H, H) + ops.A1(H, K) +
                  0.5 * ops.J2(K, K) + (1.0 / 6.0) * ops.C(H, H, H) +
                  0.5 * ops.B1(H, H, K) + 0.5 * ops.A2(H, K, K) +
                  (1.0 / 6.0) * ops.J3(K, K, K);
  head *= at.theta;
  head -= at.Hw0.eval(0.0) * at.wdot(0) + at.Hw1.eval(0.0) * at.wdot(1);
  double r = head.lpNorm<Eigen::Infinity>();

  const PolyFun Hp = H.derivative();
  const double tmax = ops.model().max_delay();
  for (int i = 0; i < ngrid; ++i) {
    const double th = -tmax * (double)i / (double)(ngrid - 1);
    const VectorXd tail =
        at.theta * Hp.eval(th) - at.Hw0.eval(th) * at.wdot(0) - at.Hw1.eval(th) * at.wdot(1);
    r = std::max(r, tail.lpNorm<Eigen::Infinity>());
  }
  return r;
}

namespace detail {

// one manifold coefficient h_{ijkl} with its monomial exponents in
// (w0, w1, beta1, beta2); the expansion carries 1/(i! j! k! l!) factors
struct HTerm {
  int i, j, k, l;
  const PolyFun* h;
};

inline double h_monomial(double w0, double w1, double b1, double b2, const HTerm& t, int dw0,
                         int dw1) {
  static const double fact[5] = {1.0, 1.0, 2.0, 6.0, 24.0};
  auto pw = [](double x, int p) {
    double r = 1.0;
    for (int q = 0; q < p; ++q) r *= x;
    return r;
  };
  if (t.i < dw0 || t.j < dw1) return 0.0;
  double c = 1.0;
  for (int q = 0; q < dw0; ++q) c *= (double)(t.i - q);
  for (int q = 0; q < dw1; ++q) c *= (double)(t.j - q);
  c *= pw(w0, t.i - dw0) * pw(w1, t.j - dw1) * pw(b1, t.k) * pw(b2, t.l);
  return c / (fact[t.i] * fact[t.j] * fact[t.k] * fact[t.l]);
}

template <class Terms>
PolyFun h_partial_impl(const JordanChain& ch, const Terms& terms, int n, double w0, double w1,
                       double b1, double b2, int dw0, int dw1) {
  PolyFun r = PolyFun::zero(n);
  if (dw0 == 0 && dw1 == 0)
    r = w0 * phi0(ch) + w1 * phi1(ch);
  else if (dw0 == 1 && dw1 == 0)
    r = phi0(ch);
  else if (dw0 == 0 && dw1 == 1)
    r = phi1(ch);
  for (const auto& t : terms) {
    const double c = h_monomial(w0, w1, b1, b2, t, dw0, dw1);
    if (c != 0.0) r += c * (*t.h);
  }
  return r;
}

}  // namespace detail

// least-squares slope of log(r) against log(s); used to grade how fast
// residuals and defects shrink under a scaling parameter
inline double fitted_order(const std::vector<double>& s, const std::vector<double>& r) {
  if (s.size() != r.size() || s.size() < 2)
    throw std::invalid_argument("fitted_order: need two or more samples");
  const int m = (int)s.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    const double x = std::log(s[i]);
    const double y = std::log(std::max(r[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace bt
