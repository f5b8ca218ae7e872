#pragma once
// Characteristic matrix of a linearized constant-delay DDE,
//   Delta(z) = z I - sum_j A_j exp(-z tau_j),
// its z-derivatives, scaled-determinant Newton refinement of eigenvalues, a
// bordered linear solver for singular systems with known null data, and a
// grid-seeded spectrum scan.

#include <algorithm>
#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "bt/model.hpp"
#include "bt/multidual.hpp"

namespace bt {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using complexd = std::complex<double>;

struct CharMatrix {
  int n = 0;
  std::vector<double> delays;
  std::vector<MatrixXd> A;  // A[j] pairs with delays[j]
};

// Jacobian blocks of the model at (xi0, alpha0), one per delay column.
inline CharMatrix make_char_matrix(const DdeModel& m, const MatrixXd& xi0,
                                   const VectorXd& alpha0) {
  check_shapes(m, xi0, alpha0);
  CharMatrix cm;
  cm.n = m.n;
  cm.delays = m.delays;
  cm.A.assign(m.n_delays(), MatrixXd::Zero(m.n, m.n));
  for (int j = 0; j < m.n_delays(); ++j)
    for (int k = 0; k < m.n; ++k) {
      MatrixXd e = MatrixXd::Zero(m.n, m.n_delays());
      e(k, j) = 1.0;
      cm.A[j].col(k) = mlf(m, xi0, alpha0, {state_dir(e)});
    }
  return cm;
}

// k-th z-derivative of Delta at z.
inline MatrixXcd delta(const CharMatrix& cm, int k, complexd z) {
  MatrixXcd r = MatrixXcd::Zero(cm.n, cm.n);
  if (k == 0) r = z * MatrixXcd::Identity(cm.n, cm.n);
  if (k == 1) r = MatrixXcd::Identity(cm.n, cm.n);
  for (size_t j = 0; j < cm.A.size(); ++j) {
    const double t = cm.delays[j];
    const complexd w = std::exp(-z * t) * std::pow(complexd(-t), k);
    r -= w * cm.A[j];
  }
  return r;
}

// Same at z = 0, where everything is real.
inline MatrixXd delta0(const CharMatrix& cm, int k) {
  MatrixXd r = MatrixXd::Zero(cm.n, cm.n);
  if (k == 1) r = MatrixXd::Identity(cm.n, cm.n);
  for (size_t j = 0; j < cm.A.size(); ++j) r -= std::pow(-cm.delays[j], k) * cm.A[j];
  return r;
}

namespace detail {

// Determinant by LU with partial pivoting on scalar types carrying
// derivatives; pivots compare |value|.
template <class T>
T lu_det(std::vector<T>& a, int n) {
  T det(1.0);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(a[col * n + col].c[0]);
    for (int r = col + 1; r < n; ++r) {
      const double m = std::abs(a[r * n + col].c[0]);
      if (m > best) {
        best = m;
        piv = r;
      }
    }
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
      det = -det;
    }
    det = det * a[col * n + col];
    if (best == 0.0) return det;  // exactly singular value part; derivatives moot
    const T ipiv = inv(a[col * n + col]);
    for (int r = col + 1; r < n; ++r) {
      const T f = a[r * n + col] * ipiv;
      for (int j = col + 1; j < n; ++j)
        a[r * n + j] -= f * a[col * n + j];
    }
  }
  return det;
}

}  // namespace detail

struct DetDerivs {
  complexd d0, d1, d2;  // det Delta and its first two z-derivatives
  double scale;         // Hadamard bound, the natural size of det Delta(z)
};

inline DetDerivs det_derivs(const CharMatrix& cm, complexd z) {
  const MatrixXcd D0 = delta(cm, 0, z), D1 = delta(cm, 1, z), D2 = delta(cm, 2, z);
  using T = MultiDual<2, complexd>;
  std::vector<T> a(cm.n * cm.n);
  for (int i = 0; i < cm.n; ++i)
    for (int j = 0; j < cm.n; ++j) {
      T& e = a[i * cm.n + j];
      e.c[0] = D0(i, j);
      e.c[1] = e.c[2] = D1(i, j);
      e.c[3] = D2(i, j);
    }
  const T det = detail::lu_det(a, cm.n);
  double scale = 1.0;
  for (int i = 0; i < cm.n; ++i) scale *= D0.row(i).norm();
  if (scale == 0.0) scale = 1.0;
  return DetDerivs{det.c[0], det.c[1], det.c[3], scale};
}

struct RootResult {
  complexd z;
  double abs_det = 0;
  double scale = 1;
  int iters = 0;
  int multiplicity = 1;
  bool converged = false;
};

struct RefineOptions {
  double tol = 1e-12;  // relative to Hadamard scale
  int max_iter = 50;
};

// Newton on det Delta(z) with derivative-ratio deflation: iterating on
// u = det/det' converges for multiple roots as well, and the derivative of u
// estimates the multiplicity.
inline RootResult refine_root(const CharMatrix& cm, complexd z0, const RefineOptions& opt = {}) {
  RootResult res;
  res.z = z0;
  for (int it = 0; it <= opt.max_iter; ++it) {
    const DetDerivs d = det_derivs(cm, res.z);
    res.abs_det = std::abs(d.d0);
    res.scale = d.scale;
    res.iters = it;
    if (res.abs_det < opt.tol * d.scale) {
      res.converged = true;
      // At the root itself the deflation ratio drowns in roundoff, so read the
      // multiplicity a small distance away: near an m-fold root
      // 1 - det det''/det'^2 = 1/m.
      const double off = 1e-5 * (1.0 + std::abs(res.z));
      const DetDerivs p = det_derivs(cm, res.z + complexd(off, 0.5 * off));
      const double mm = std::real((p.d1 * p.d1) / (p.d1 * p.d1 - p.d0 * p.d2));
      res.multiplicity = std::isfinite(mm) ? std::min(std::max(int(std::lround(mm)), 1), 6) : 1;
      return res;
    }
    if (it == opt.max_iter) break;
    const complexd up = 1.0 - d.d0 * d.d2 / (d.d1 * d.d1);
    const complexd u = d.d0 / d.d1;
    complexd step = (std::abs(up) > 0.1) ? u / up : u;
    if (!std::isfinite(std::abs(step))) break;
    res.z -= step;
  }
  return res;
}

struct BinvError : std::runtime_error {
  double slack;
  BinvError(const std::string& w, double s) : std::runtime_error(w), slack(s) {}
};

struct BinvResult {
  VectorXd x;      // particular solution with q0'x = 0
  double slack;    // |multiplier of the bordering column| = inconsistency measure
  double residual; // ||M x - y|| after removing the slack term
};

// Solve the singular system M x = y where q0 spans ker M and p1 spans the left
// kernel, via the bordered extension [[M, p1'], [q0', 0]].  The returned slack
// is the magnitude of the bordering multiplier: zero iff y is in range(M).
inline BinvResult binv_solve(const MatrixXd& M, const VectorXd& q0, const VectorXd& p1,
                             const VectorXd& y, double slack_tol = 1e-6) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n || q0.size() != n || p1.size() != n || y.size() != n)
    throw BinvError("bordered solve: inconsistent dimensions", 0.0);
  MatrixXd B(n + 1, n + 1);
  B.topLeftCorner(n, n) = M;
  B.topRightCorner(n, 1) = p1;
  B.bottomLeftCorner(1, n) = q0.transpose();
  B(n, n) = 0.0;
  Eigen::FullPivLU<MatrixXd> lu(B);
  if (!lu.isInvertible())
    throw BinvError("bordered solve: bordered matrix is singular (null data do not border M)",
                    0.0);
  VectorXd rhs(n + 1);
  rhs.head(n) = y;
  rhs[n] = 0.0;
  const VectorXd sol = lu.solve(rhs);
  BinvResult r;
  r.x = sol.head(n);
  // Squash the roundoff component along q0 so callers can rely on q0'x = 0.
  r.x -= q0 * (q0.dot(r.x) / q0.squaredNorm());
  r.slack = std::abs(sol[n]);
  r.residual = (M * r.x - y + sol[n] * p1).norm();
  if (r.slack > slack_tol * (1.0 + y.norm()))
    throw BinvError("bordered solve: right-hand side not in range (slack " +
                        std::to_string(r.slack) + ")",
                    r.slack);
  return r;
}

struct ScanOptions {
  int nre = 25;
  int nim = 61;
  double dedup_tol = 1e-6;
  double margin = 1e-6;  // roots may stick out of the box by this much
  RefineOptions refine;
};

// Seed Newton refinements from a rectangular grid over the box
// [re0,re1] x [im0,im1] and keep deduplicated converged roots inside the box.
// Heuristic: dense enough grids catch every root whose basin meets the box;
// the defaults resolve spacing ~0.05 in Re and ~0.15 in Im per unit box.
inline std::vector<RootResult> spectrum_scan(const CharMatrix& cm, double re0, double re1,
                                             double im0, double im1,
                                             const ScanOptions& opt = {}) {
  std::vector<RootResult> roots;
  for (int i = 0; i < opt.nre; ++i)
    for (int j = 0; j < opt.nim; ++j) {
      const double re = re0 + (re1 - re0) * (opt.nre == 1 ? 0.5 : double(i) / (opt.nre - 1));
      const double im = im0 + (im1 - im0) * (opt.nim == 1 ? 0.5 : double(j) / (opt.nim - 1));
      RootResult r = refine_root(cm, complexd(re, im), opt.refine);
      if (!r.converged) continue;
      if (r.z.real() < re0 - opt.margin || r.z.real() > re1 + opt.margin ||
          r.z.imag() < im0 - opt.margin || r.z.imag() > im1 + opt.margin)
        continue;
      bool dup = false;
      for (auto& k : roots)
        if (std::abs(k.z - r.z) < opt.dedup_tol * (1.0 + std::abs(r.z))) {
          dup = true;
          break;
        }
      if (!dup) roots.push_back(r);
    }
  std::sort(roots.begin(), roots.end(), [](const RootResult& a, const RootResult& b) {
    if (a.z.real() != b.z.real()) return a.z.real() > b.z.real();
    return a.z.imag() < b.z.imag();
  });
  return roots;
}

}  // namespace bt
