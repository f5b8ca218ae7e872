#pragma once
// Third-order homoclinic asymptotics near the double-zero point, built from
// closed-form series kernels in the blown-up phase variable, and first-order
// predictors for the codimension-one equilibrium curves that emanate from it.
// Everything here maps reduced quantities through the center-manifold data
// computed by nf_generic / nf_transcritical; no model evaluations are needed
// except in the small equilibrium-correction helpers at the end.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bt/chmat.hpp"
#include "bt/model.hpp"
#include "bt/nf_generic.hpp"
#include "bt/nf_transcritical.hpp"

namespace bt {

// Raised when a requested expansion leaves its domain of validity: the time
// reparametrization loses monotonicity, or a kernel stops being invertible.
struct PredictorRangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// log(cosh(s)) without overflowing cosh for large |s|.
inline double log_cosh(double s) {
  const double a = std::abs(s);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

// ---- series kernels ----
//
// The homoclinic orbit of the rescaled planar oscillator
//   u'' = -4 + u^2 + eps (u + tau) u' + O(eps^4)
// is carried by four scalar kernels: the time rescaling tau(eps), the orbit
// components u(zeta), v(zeta) in the squashed variable zeta = tanh(xi(s)),
// and the near-identity change xi(s) itself.  `order` 1 keeps only the eps^0
// part of each series; `order` 3 keeps everything through eps^3.
struct SeriesKernels {
  int order = 3;

  explicit SeriesKernels(int ord = 3) : order(ord) {
    if (ord != 1 && ord != 3) throw PredictorRangeError("series kernels: order must be 1 or 3");
  }

  double e(double eps) const { return order >= 3 ? eps : 0.0; }

  double tau(double eps) const {
    const double q = e(eps);
    return 10.0 / 7.0 + 288.0 / 2401.0 * q * q;
  }

  // u(+-1) = 2 for every eps: the separatrix ends at the saddle.
  double u(double zeta, double eps) const {
    const double q = e(eps);
    return 2.0 - (1.0 - zeta * zeta) * (6.0 + 18.0 / 49.0 * q * q);
  }

  double v(double zeta, double eps) const {
    const double q = e(eps);
    const double inner = -12.0 + 72.0 / 7.0 * zeta * q -
                         (90.0 / 49.0 + 162.0 / 49.0 * zeta * zeta) * q * q +
                         (3888.0 / 2401.0 * zeta - 216.0 / 343.0 * zeta * zeta * zeta) * q * q * q;
    return -inner * (1.0 - zeta * zeta) * zeta;
  }

  double xi(double s, double eps) const {
    if (order < 3) return s;
    const double L = log_cosh(s);
    const double th = std::tanh(s);
    const double sech2 = 1.0 - th * th;
    const double c1 = -6.0 / 7.0 * L;
    const double c2 = -18.0 / 49.0 * s + 45.0 / 98.0 * th + 36.0 / 49.0 * th * L;
    // The cosh(2s) and sinh(2s) factors are folded into sech^2 terms so large
    // windows stay finite: sech^2 cosh(2s) = 2 - sech^2, sech^2 s sinh(2s) = 2 s tanh(s).
    const double c3 = -117.0 / 343.0 * th * th +
                      3.0 / 4802.0 * (sech2 * (-504.0 * L * L + 102.0 * L + 276.0 * L) -
                                      552.0 * L + 504.0 * s * th);
    return s + c1 * eps + c2 * eps * eps + c3 * eps * eps * eps;
  }

  // Antiderivative kernel: d/ds bracket(xi(s), eps) = u(tanh(xi(s)), eps) up to
  // the dropped eps^4 remainder.  Used for the integral of w0 in t(eta).
  double bracket(double xt, double eps) const {
    const double q = e(eps);
    const double th = std::tanh(xt);
    const double sech2 = 1.0 - th * th;
    const double L = log_cosh(xt);
    double r = 2.0 * xt - 6.0 * th;
    r += (18.0 / 7.0 * sech2 + 12.0 / 7.0 * L) * q;
    r += 9.0 / 49.0 * (4.0 * xt - 9.0 * th + 5.0 * th * sech2) * q * q;
    r += 18.0 / 2401.0 * (-21.0 * sech2 * sech2 + 47.0 * sech2 + 8.0 * L) * q * q * q;
    return r;
  }

  // Smallest s with tanh(xi(s)) >= 1 - tail, by bisection on a bracket that is
  // first grown outward.  xi is checked to be increasing on the way.
  double window(double eps, double tail = 1e-8) const {
    const double target = std::atanh(1.0 - tail);
    double hi = target + 1.0;
    while (xi(hi, eps) < target) {
      hi *= 1.5;
      if (hi > 1e4) throw PredictorRangeError("series kernels: window search diverged");
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (xi(mid, eps) < target ? lo : hi) = mid;
    }
    return hi;
  }

  // Dense-grid monotonicity check of xi on [-smax, smax]; the expansion is
  // asymptotic and the cubic term can fold the axis for large eps.
  void require_monotone_xi(double smax, double eps, int ngrid = 2001) const {
    double prev = xi(-smax, eps);
    for (int i = 1; i < ngrid; ++i) {
      const double s = -smax + 2.0 * smax * i / (ngrid - 1);
      const double cur = xi(s, eps);
      if (!(cur > prev))
        throw PredictorRangeError("series kernels: xi(s) not strictly increasing at eps=" +
                                  std::to_string(eps));
      prev = cur;
    }
  }
};

// ---- homoclinic predictor ----

enum class HomoclinicCase { Generic, TranscriticalPlus, TranscriticalMinus };

inline std::string to_string(HomoclinicCase c) {
  switch (c) {
    case HomoclinicCase::Generic: return "generic";
    case HomoclinicCase::TranscriticalPlus: return "transcritical-plus";
    case HomoclinicCase::TranscriticalMinus: return "transcritical-minus";
  }
  return "?";
}

struct HomoclinicPredictor {
  HomoclinicCase kind = HomoclinicCase::Generic;
  double eps = 0.0;
  int order = 3;
  double L = 0.0;  // half-window in the reduced time eta

  Vector2d beta = Vector2d::Zero();   // reduced parameters (beta1, beta2)
  Vector2d alpha = Vector2d::Zero();  // physical parameters alpha0 + K(beta)

  std::vector<double> t;    // strictly increasing physical-time mesh
  std::vector<double> eta;  // reduced time at each node, t(eta[k]) = t[k]
  MatrixXd w;               // 2 x mesh reduced coordinates
  MatrixXd x;               // n x mesh physical profile (history head, theta = 0)

  double A0 = 0.0;        // max - min of w0 over the window, the eps^2 amplitude scale
  double inversion_residual = 0.0;  // max |t(eta_k) - t_k| over the mesh
  Vector2d w_saddle = Vector2d::Zero();
  VectorXd x_saddle;
};

namespace detail {

// Shared assembly: given the reduced-orbit formulas as callables, build the
// time mesh, invert t(eta) per node and map through the manifold expansion.
template <class Nf, class W0Fun, class W1Fun, class TFun, class ThFun>
void assemble_homoclinic(HomoclinicPredictor& hp, const Nf& nf, double L, int mesh_n,
                         W0Fun&& w0f, W1Fun&& w1f, TFun&& tf, ThFun&& thf) {
  // Monotonicity of the reparametrization on a dense grid; theta > 0 is the
  // same statement infinitesimally but the grid also guards the eps^4 slack.
  {
    const int ng = 4001;
    double prev = tf(-L);
    for (int i = 1; i < ng; ++i) {
      const double et = -L + 2.0 * L * i / (ng - 1);
      const double cur = tf(et);
      if (!(cur > prev))
        throw PredictorRangeError("homoclinic predictor: t(eta) not strictly increasing "
                                  "(eps too large for the expansion)");
      prev = cur;
    }
  }

  const double t_lo = tf(-L), t_hi = tf(L);
  hp.t.resize(mesh_n);
  hp.eta.resize(mesh_n);
  const double mid = 0.5 * (t_lo + t_hi), half = 0.5 * (t_hi - t_lo);
  const double pi = std::acos(-1.0);
  for (int k = 0; k < mesh_n; ++k)
    hp.t[(size_t)k] = mid - half * std::cos(pi * k / (mesh_n - 1.0));
  hp.t.front() = t_lo;
  hp.t.back() = t_hi;

  // Invert t(eta) = t_k: Newton with the analytic slope theta(w0(eta)),
  // safeguarded by a maintained bisection bracket.
  for (int k = 0; k < mesh_n; ++k) {
    const double target = hp.t[(size_t)k];
    double lo = -L, hi = L;
    const double g0 = thf(0.0);
    double et = (std::isfinite(g0) && g0 > 1e-8) ? target / g0 : 0.0;
    et = std::clamp(et, lo, hi);
    double r = tf(et) - target;
    for (int it = 0; it < 100 && std::abs(r) > 1e-13 * std::max(1.0, std::abs(target)); ++it) {
      (r > 0 ? hi : lo) = et;
      const double slope = thf(et);
      double next = et - r / slope;
      if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
      et = next;
      r = tf(et) - target;
    }
    hp.eta[(size_t)k] = et;
    hp.inversion_residual = std::max(hp.inversion_residual, std::abs(r));
  }
  hp.eta.front() = -L;
  hp.eta.back() = L;

  const int n = (int)nf.eq.size();
  hp.w.resize(2, mesh_n);
  hp.x.resize(n, mesh_n);
  for (int k = 0; k < mesh_n; ++k) {
    const double et = hp.eta[(size_t)k];
    const double w0 = w0f(et), w1 = w1f(et);
    hp.w(0, k) = w0;
    hp.w(1, k) = w1;
    hp.x.col(k) = nf.eq + nf_h(nf, w0, w1, hp.beta(0), hp.beta(1)).eval(0.0);
  }
  hp.A0 = hp.w.row(0).maxCoeff() - hp.w.row(0).minCoeff();
  hp.alpha = nf.alpha0 + nf_K(nf, hp.beta(0), hp.beta(1));
  hp.x_saddle = nf.eq + nf_h(nf, hp.w_saddle(0), hp.w_saddle(1), hp.beta(0), hp.beta(1)).eval(0.0);
}

template <class Nf>
HomoclinicPredictor bt_point_sentinel(const Nf& nf, HomoclinicCase kind, int order) {
  HomoclinicPredictor hp;
  hp.kind = kind;
  hp.eps = 0.0;
  hp.order = order;
  hp.beta = Vector2d::Zero();
  hp.alpha = nf.alpha0;
  hp.t = {0.0};
  hp.eta = {0.0};
  hp.w = MatrixXd::Zero(2, 1);
  hp.x = nf.eq;
  hp.x_saddle = nf.eq;
  return hp;
}

}  // namespace detail

// Generic case.  In the blown-up variables s = (a/b) eps eta, the orbit is
//   w0 = (a/b^2) u(tanh xi(s)) eps^2,   w1 = (a^2/b^3) v(tanh xi(s)) eps^3,
//   beta = (-4 a^3/b^4 eps^4, (a/b) eps^2 tau(eps)),
// and physical time is t(eta) = int_0^eta (1 + theta1000 w0 + theta0001 beta2).
inline HomoclinicPredictor homoclinic_predictor(const GenericBtNormalForm& nf, double eps,
                                                int order = 3, int mesh_n = 201) {
  if (eps < 0) throw PredictorRangeError("homoclinic predictor: eps must be >= 0");
  if (mesh_n < 2) throw PredictorRangeError("homoclinic predictor: mesh needs >= 2 nodes");
  if (eps == 0.0) return detail::bt_point_sentinel(nf, HomoclinicCase::Generic, order);

  const SeriesKernels kr(order);
  const double a = nf.a, b = nf.b;
  const double c = a / b * eps;  // s = c * eta
  const double smax = kr.window(eps);
  kr.require_monotone_xi(smax, eps);
  const double L = smax / std::abs(c);

  HomoclinicPredictor hp;
  hp.kind = HomoclinicCase::Generic;
  hp.eps = eps;
  hp.order = order;
  hp.L = L;
  hp.beta(0) = -4.0 * a * a * a / (b * b * b * b) * eps * eps * eps * eps;
  hp.beta(1) = a / b * eps * eps * kr.tau(eps);
  hp.w_saddle = Vector2d(2.0 * a / (b * b) * eps * eps, 0.0);

  const double c0 = 1.0 + nf.theta0001 * hp.beta(1);
  const double br0 = kr.bracket(0.0, eps);
  auto w0f = [&](double et) { return a / (b * b) * kr.u(std::tanh(kr.xi(c * et, eps)), eps) * eps * eps; };
  auto w1f = [&](double et) {
    return a * a / (b * b * b) * kr.v(std::tanh(kr.xi(c * et, eps)), eps) * eps * eps * eps;
  };
  auto tf = [&](double et) {
    return c0 * et + nf.theta1000 / b * eps * (kr.bracket(kr.xi(c * et, eps), eps) - br0);
  };
  auto thf = [&](double et) { return c0 + nf.theta1000 * w0f(et); };

  detail::assemble_homoclinic(hp, nf, L, mesh_n, w0f, w1f, tf, thf);
  return hp;
}

// Transcritical case, both branches.  The blow-up keeps the origin fixed:
//   beta1 = sgn 4 (a^2/b^2) eps^2,  beta2 = (a/b)(tau(eps) + sgn 2) eps^2,
//   w0 = (a/b^2)(u(tanh xi(s)) - sgn 2) eps^2,
// so the saddle is the trivial equilibrium on the plus branch and the
// bifurcating one on the minus branch.
inline HomoclinicPredictor homoclinic_predictor(const TranscriticalBtNormalForm& nf, int sgn,
                                                double eps, int order = 3, int mesh_n = 201) {
  if (sgn != 1 && sgn != -1)
    throw PredictorRangeError("homoclinic predictor: branch sign must be +1 or -1");
  if (eps < 0) throw PredictorRangeError("homoclinic predictor: eps must be >= 0");
  if (mesh_n < 2) throw PredictorRangeError("homoclinic predictor: mesh needs >= 2 nodes");
  const HomoclinicCase kind =
      sgn > 0 ? HomoclinicCase::TranscriticalPlus : HomoclinicCase::TranscriticalMinus;
  if (eps == 0.0) return detail::bt_point_sentinel(nf, kind, order);

  const SeriesKernels kr(order);
  const double a = nf.a, b = nf.b;
  const double c = a / b * eps;
  const double smax = kr.window(eps);
  kr.require_monotone_xi(smax, eps);
  const double L = smax / std::abs(c);

  HomoclinicPredictor hp;
  hp.kind = kind;
  hp.eps = eps;
  hp.order = order;
  hp.L = L;
  hp.beta(0) = sgn * 4.0 * a * a / (b * b) * eps * eps;
  hp.beta(1) = a / b * (kr.tau(eps) + sgn * 2.0) * eps * eps;
  hp.w_saddle = Vector2d(a / (b * b) * (2.0 - sgn * 2.0) * eps * eps, 0.0);

  const double c0 = 1.0 + nf.theta0010 * hp.beta(0) + nf.theta0001 * hp.beta(1) -
                    sgn * 2.0 * nf.theta1000 * a / (b * b) * eps * eps;
  const double br0 = kr.bracket(0.0, eps);
  auto w0f = [&](double et) {
    return a / (b * b) * (kr.u(std::tanh(kr.xi(c * et, eps)), eps) - sgn * 2.0) * eps * eps;
  };
  auto w1f = [&](double et) {
    return a * a / (b * b * b) * kr.v(std::tanh(kr.xi(c * et, eps)), eps) * eps * eps * eps;
  };
  auto tf = [&](double et) {
    return c0 * et + nf.theta1000 / b * eps * (kr.bracket(kr.xi(c * et, eps), eps) - br0);
  };
  auto thf = [&](double et) { return c0 + sgn * 2.0 * nf.theta1000 * a / (b * b) * eps * eps +
                                     nf.theta1000 * w0f(et); };

  detail::assemble_homoclinic(hp, nf, L, mesh_n, w0f, w1f, tf, thf);
  return hp;
}

// ---- codimension-one equilibrium curves ----

struct EquilibriumCurvePoint {
  std::string label;
  VectorXd x;       // physical equilibrium predictor
  Vector2d alpha;   // physical parameters
  bool is_hopf = false;
  double omega = 0.0;  // predicted Hopf frequency (eps), 0 on non-Hopf branches
};

// Generic: fold at beta = (0, eps) with the chart origin as equilibrium, Hopf
// at beta = (-eps^4/4a, b eps^2/2a) around w0 = -eps^2/2a with omega = eps.
inline std::vector<EquilibriumCurvePoint> equilibrium_curves(const GenericBtNormalForm& nf,
                                                             double eps) {
  std::vector<EquilibriumCurvePoint> out;
  {
    EquilibriumCurvePoint p;
    p.label = "fold";
    p.x = nf.eq + nf_h(nf, 0.0, 0.0, 0.0, 0.0).eval(0.0);
    p.alpha = nf.alpha0 + nf_K(nf, 0.0, eps);
    out.push_back(std::move(p));
  }
  {
    EquilibriumCurvePoint p;
    p.label = "hopf";
    const double a = nf.a, b = nf.b;
    const double b1 = -eps * eps * eps * eps / (4.0 * a);
    const double b2 = b * eps * eps / (2.0 * a);
    p.x = nf.eq + nf_h(nf, -eps * eps / (2.0 * a), 0.0, b1, b2).eval(0.0);
    p.alpha = nf.alpha0 + nf_K(nf, b1, b2);
    p.is_hopf = true;
    p.omega = eps;
    out.push_back(std::move(p));
  }
  return out;
}

// Transcritical: the trivial branch stays at the expansion equilibrium for all
// parameters; Hopf_1 sits on it at beta = (-eps^2, 0), Hopf_2 on the
// bifurcating branch at beta = (eps^2, (b/a) eps^2) around w0 = -eps^2/a.
inline std::vector<EquilibriumCurvePoint> equilibrium_curves(
    const TranscriticalBtNormalForm& nf, double eps) {
  std::vector<EquilibriumCurvePoint> out;
  {
    EquilibriumCurvePoint p;
    p.label = "transcritical";
    p.x = nf.eq;
    p.alpha = nf.alpha0 + nf_K(nf, 0.0, eps);
    out.push_back(std::move(p));
  }
  {
    EquilibriumCurvePoint p;
    p.label = "hopf1";
    p.x = nf.eq + nf_h(nf, 0.0, 0.0, -eps * eps, 0.0).eval(0.0);
    p.alpha = nf.alpha0 + nf_K(nf, -eps * eps, 0.0);
    p.is_hopf = true;
    p.omega = eps;
    out.push_back(std::move(p));
  }
  {
    EquilibriumCurvePoint p;
    p.label = "hopf2";
    const double a = nf.a, b = nf.b;
    p.x = nf.eq + nf_h(nf, -eps * eps / a, 0.0, eps * eps, b / a * eps * eps).eval(0.0);
    p.alpha = nf.alpha0 + nf_K(nf, eps * eps, b / a * eps * eps);
    p.is_hopf = true;
    p.omega = eps;
    out.push_back(std::move(p));
  }
  return out;
}

// ---- correction and indicator helpers ----

// Damped Newton for an equilibrium of the model at fixed alpha, starting from
// x0.  The Jacobian of the constant-history right-hand side is -Delta(0).
inline VectorXd correct_equilibrium(const DdeModel& m, VectorXd x, const Vector2d& alpha,
                                    double tol = 1e-12, int max_iter = 60) {
  const auto res = [&](const VectorXd& p) {
    return m.rhs(p.replicate(1, (Eigen::Index)m.n_delays()), alpha);
  };
  VectorXd r = res(x);
  for (int it = 0; it < max_iter; ++it) {
    const double rn = r.lpNorm<Eigen::Infinity>();
    if (rn <= tol) return x;
    const CharMatrix cm = make_char_matrix(m, x.replicate(1, (Eigen::Index)m.n_delays()), alpha);
    const VectorXd dx = delta0(cm, 0).partialPivLu().solve(r);
    double sg = 1.0;
    bool improved = false;
    for (int bk = 0; bk < 40; ++bk, sg *= 0.5) {
      const VectorXd xn = x + sg * dx;
      const VectorXd rn2 = res(xn);
      if (rn2.allFinite() && rn2.lpNorm<Eigen::Infinity>() < rn) {
        x = xn;
        r = rn2;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  throw PredictorRangeError(m.id + ": equilibrium correction did not converge");
}

// Equilibrium correction that follows the branch analytically.  Past a fold
// the two colliding equilibria continue as a complex conjugate pair; a real
// Newton iteration can only stall at the residual bottleneck there, so on
// stall the iteration is kicked along the Jacobian's near-null direction into
// the complex domain and finished with a finite-difference complex Newton.
inline VectorXcd continue_equilibrium(const DdeModel& m, const VectorXd& x0,
                                      const Vector2d& alpha, double tol = 1e-12) {
  const Eigen::Index nd = (Eigen::Index)m.n_delays();
  try {
    return correct_equilibrium(m, x0, alpha, tol).cast<complexd>();
  } catch (const PredictorRangeError&) {
  }
  if (!m.rhs_complex)
    throw PredictorRangeError(m.id + ": equilibrium continuation needs a complex right-hand side");

  // rerun the damped phase to recover the bottleneck point
  VectorXd xb = x0;
  {
    const auto res = [&](const VectorXd& p) { return m.rhs(p.replicate(1, nd), alpha); };
    VectorXd r = res(xb);
    for (int it = 0; it < 60; ++it) {
      const CharMatrix cm = make_char_matrix(m, xb.replicate(1, nd), alpha);
      const VectorXd dx = delta0(cm, 0).partialPivLu().solve(r);
      double sg = 1.0;
      bool improved = false;
      for (int bk = 0; bk < 40; ++bk, sg *= 0.5) {
        const VectorXd xn = xb + sg * dx;
        const VectorXd rn2 = res(xn);
        if (rn2.allFinite() &&
            rn2.lpNorm<Eigen::Infinity>() < r.lpNorm<Eigen::Infinity>()) {
          xb = xn;
          r = rn2;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
  }

  const VectorXcd alc = alpha.cast<complexd>();
  const auto resc = [&](const VectorXcd& p) { return m.rhs_complex(p.replicate(1, nd), alc); };
  const auto jacc = [&](const VectorXcd& p) {
    MatrixXcd J(m.n, m.n);
    for (int k = 0; k < m.n; ++k) {
      const double h = 1e-7 * (1.0 + std::abs(p(k)));
      VectorXcd pp = p, pm = p;
      pp(k) += h;
      pm(k) -= h;
      J.col(k) = (resc(pp) - resc(pm)) / (2.0 * h);
    }
    return J;
  };

  // kick scale from the bottleneck residual: the pair sits O(sqrt(|r|)) away
  const CharMatrix cmb = make_char_matrix(m, xb.replicate(1, nd), alpha);
  Eigen::JacobiSVD<MatrixXd> svd(delta0(cmb, 0), Eigen::ComputeFullV);
  const VectorXd q = svd.matrixV().col(m.n - 1);
  const double kick = std::sqrt(m.rhs(xb.replicate(1, nd), alpha).norm());

  VectorXcd z = xb.cast<complexd>() + complexd(0.0, kick) * q.cast<complexd>();
  VectorXcd r = resc(z);
  for (int it = 0; it < 100; ++it) {
    const double rn = r.norm();
    if (rn <= tol) return z;
    const VectorXcd dz = jacc(z).partialPivLu().solve(r);
    double sg = 1.0;
    bool improved = false;
    for (int bk = 0; bk < 40; ++bk, sg *= 0.5) {
      const VectorXcd zn = z - sg * dz;
      const VectorXcd rn2 = resc(zn);
      if (rn2.allFinite() && rn2.norm() < rn) {
        z = zn;
        r = rn2;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  throw PredictorRangeError(m.id + ": complex equilibrium continuation did not converge");
}

// Characteristic root nearest z0 for the linearization at a possibly
// complex-continued equilibrium.  The delayed-state Jacobian blocks come from
// central differences on the complex right-hand side, and the root Newton
// uses d(log det Delta)/dz = tr(Delta^{-1} Delta').
inline complexd nearest_eigenvalue(const DdeModel& m, const VectorXcd& xeq,
                                   const Vector2d& alpha, complexd z0 = complexd(0.0, 0.0)) {
  const int n = m.n, nd = m.n_delays();
  std::vector<MatrixXcd> A((size_t)nd, MatrixXcd::Zero(n, n));
  if (xeq.imag().lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + xeq.real().norm())) {
    // real equilibrium: exact directional-derivative blocks
    const VectorXd xr = xeq.real();
    const CharMatrix cm = make_char_matrix(m, xr.replicate(1, (Eigen::Index)nd), alpha);
    for (int j = 0; j < nd; ++j) A[(size_t)j] = cm.A[(size_t)j].cast<complexd>();
  } else {
    if (!m.rhs_complex)
      throw PredictorRangeError(m.id +
                                ": eigenvalue continuation needs a complex right-hand side");
    const VectorXcd alc = alpha.cast<complexd>();
    const MatrixXcd xi = xeq.replicate(1, (Eigen::Index)nd);
    for (int j = 0; j < nd; ++j)
      for (int k = 0; k < n; ++k) {
        const double h = 1e-7 * (1.0 + std::abs(xi(k, j)));
        MatrixXcd xp = xi, xm = xi;
        xp(k, j) += h;
        xm(k, j) -= h;
        A[(size_t)j].col(k) = (m.rhs_complex(xp, alc) - m.rhs_complex(xm, alc)) / (2.0 * h);
      }
  }

  complexd z = z0;
  for (int it = 0; it < 60; ++it) {
    MatrixXcd D = z * MatrixXcd::Identity(n, n);
    MatrixXcd Dp = MatrixXcd::Identity(n, n);
    for (int j = 0; j < nd; ++j) {
      const complexd w = std::exp(-z * m.delays[(size_t)j]);
      D -= w * A[(size_t)j];
      Dp += m.delays[(size_t)j] * w * A[(size_t)j];
    }
    const complexd tr = (D.partialPivLu().solve(Dp)).trace();
    if (std::abs(tr) < 1e-300) break;
    const complexd step = 1.0 / tr;
    z -= step;
    if (std::abs(step) <= 1e-14 * (1.0 + std::abs(z))) return z;
  }
  throw PredictorRangeError(m.id + ": eigenvalue refinement did not converge");
}

// Smallest singular value of Delta(i omega) at (x, alpha); vanishes on a Hopf
// curve with frequency omega.
inline double hopf_indicator(const DdeModel& m, const VectorXd& x, const Vector2d& alpha,
                             double omega) {
  const MatrixXd xi = x.replicate(1, (Eigen::Index)m.n_delays());
  const CharMatrix cm = make_char_matrix(m, xi, alpha);
  const MatrixXcd D = delta(cm, 0, complexd(0.0, omega));
  Eigen::JacobiSVD<MatrixXcd> svd(D);
  return svd.singularValues().minCoeff();
}

// |z| of the characteristic root nearest the origin along the analytically
// continued equilibrium branch through (x, alpha); vanishes on a fold or
// transcritical curve.
inline double fold_indicator(const DdeModel& m, const VectorXd& x, const Vector2d& alpha) {
  const VectorXcd xeq = continue_equilibrium(m, x, alpha);
  return std::abs(nearest_eigenvalue(m, xeq, alpha));
}

}  // namespace bt
