#pragma once
// Jordan chains at a double zero eigenvalue, eigenfunctions phi_0, phi_1,
// closed-form adjoint pairings <psi_i, w> against polynomial histories, and
// the polynomial bordered inverse BINV0 that powers the normal-form cascades.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bt/chmat.hpp"

namespace bt {

// theta -> sum_k c_k theta^k on [-h, 0]; coefficients are n-vectors.
class PolyFun {
 public:
  PolyFun() = default;
  explicit PolyFun(std::vector<VectorXd> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) throw std::invalid_argument("PolyFun: empty coefficient list");
    for (const auto& ck : c_)
      if (ck.size() != c_[0].size())
        throw std::invalid_argument("PolyFun: coefficient sizes differ");
    trim();
  }
  static PolyFun zero(int n) { return PolyFun({VectorXd::Zero(n)}); }

  int n() const { return static_cast<int>(c_[0].size()); }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const VectorXd& coeff(int k) const { return c_[static_cast<size_t>(k)]; }

  VectorXd eval(double theta) const {
    VectorXd v = c_.back();
    for (int k = degree() - 1; k >= 0; --k) v = c_[static_cast<size_t>(k)] + theta * v;
    return v;
  }
  // Column j holds the value at -delays[j], matching the model's history block.
  MatrixXd sample(const std::vector<double>& delays) const {
    MatrixXd m(n(), static_cast<Eigen::Index>(delays.size()));
    for (size_t j = 0; j < delays.size(); ++j)
      m.col(static_cast<Eigen::Index>(j)) = eval(-delays[j]);
    return m;
  }

  PolyFun derivative() const {
    if (degree() == 0) return zero(n());
    std::vector<VectorXd> d(static_cast<size_t>(degree()));
    for (int k = 1; k <= degree(); ++k) d[static_cast<size_t>(k - 1)] = k * coeff(k);
    return PolyFun(std::move(d));
  }
  // at0 + sum_k c_k theta^{k+1} / (k+1)
  PolyFun antiderivative(const VectorXd& at0) const {
    std::vector<VectorXd> a(static_cast<size_t>(degree()) + 2);
    a[0] = at0;
    for (int k = 0; k <= degree(); ++k) a[static_cast<size_t>(k + 1)] = coeff(k) / (k + 1.0);
    return PolyFun(std::move(a));
  }

  double max_coeff_norm() const {
    double m = 0.0;
    for (const auto& ck : c_) m = std::max(m, ck.norm());
    return m;
  }

  PolyFun& operator+=(const PolyFun& o) {
    if (o.n() != n()) throw std::invalid_argument("PolyFun: dimension mismatch");
    if (o.degree() > degree()) c_.resize(static_cast<size_t>(o.degree()) + 1, VectorXd::Zero(n()));
    for (int k = 0; k <= o.degree(); ++k) c_[static_cast<size_t>(k)] += o.coeff(k);
    trim();
    return *this;
  }
  PolyFun& operator-=(const PolyFun& o) { return *this += -1.0 * o; }
  PolyFun& operator*=(double s) {
    for (auto& ck : c_) ck *= s;
    trim();
    return *this;
  }
  friend PolyFun operator+(PolyFun a, const PolyFun& b) { return a += b; }
  friend PolyFun operator-(PolyFun a, const PolyFun& b) { return a -= b; }
  friend PolyFun operator*(double s, PolyFun p) { return p *= s; }
  friend PolyFun operator*(PolyFun p, double s) { return p *= s; }

 private:
  void trim() {
    while (c_.size() > 1 && c_.back().isZero(0.0)) c_.pop_back();
  }
  std::vector<VectorXd> c_;
};

// Right chain q0, q1 and left chain p1, p0 at the double zero:
//   Delta(0) q0 = 0,      Delta(0) q1 = -Delta'(0) q0,
//   p1 Delta(0) = 0,      p0 Delta(0) = -p1 Delta'(0),
// with p0, p1 used as row vectors.  After normalization <psi_i, phi_j> = delta_ij,
// q0' q0 = 1 with the largest-magnitude entry positive, and q1' q0 = 0.
struct JordanChain {
  VectorXd q0, q1, p0, p1;
};

struct NotBtError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateChainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline PolyFun phi0(const JordanChain& ch) { return PolyFun({ch.q0}); }
inline PolyFun phi1(const JordanChain& ch) { return PolyFun({ch.q1, ch.q0}); }

// <psi_i, w> for polynomial w, through the Delta-derivative pairing; psi_0 and
// psi_1 themselves are never materialized.
inline double pair_psi(const CharMatrix& cm, const JordanChain& ch, int i, const PolyFun& w) {
  if (i != 0 && i != 1) throw std::invalid_argument("pair_psi: i must be 0 or 1");
  if (w.degree() > 6) throw std::invalid_argument("pair_psi: polynomial degree above cap 6");
  const VectorXd& p = (i == 0) ? ch.p0 : ch.p1;
  double r = 0.0;
  for (int k = 0; k <= w.degree(); ++k) r += p.dot(delta0(cm, k + 1) * w.coeff(k)) / (k + 1.0);
  if (i == 0)
    for (int k = 0; k <= w.degree(); ++k)
      r += ch.p1.dot(delta0(cm, k + 2) * w.coeff(k)) / ((k + 2.0) * (k + 1.0));
  return r;
}

// Rescales and shifts a valid chain into the normalization above.  Idempotent.
inline JordanChain normalize_chain(const CharMatrix& cm, JordanChain ch) {
  Eigen::Index imax = 0;
  ch.q0.cwiseAbs().maxCoeff(&imax);
  const double c = (ch.q0[imax] < 0 ? -1.0 : 1.0) * ch.q0.norm();
  if (c == 0.0) throw DegenerateChainError("normalize_chain: q0 vanishes");
  ch.q0 /= c;
  ch.q1 /= c;
  ch.p0 *= c;
  ch.p1 *= c;
  ch.q1 -= ch.q1.dot(ch.q0) * ch.q0;
  const double kappa = pair_psi(cm, ch, 1, phi1(ch));
  const double scale = (1.0 + ch.p1.norm()) * (1.0 + ch.q0.norm() + ch.q1.norm());
  if (std::abs(kappa) < 1e-10 * scale)
    throw DegenerateChainError("normalize_chain: <psi1, phi1> vanishes, chain does not extend");
  ch.p0 /= kappa;
  ch.p1 /= kappa;
  const double mu = pair_psi(cm, ch, 0, phi1(ch));
  ch.p0 -= mu * ch.p1;
  return ch;
}

struct JordanOptions {
  double null_tol = 1e-8;  // singular values below null_tol * sigma_max count as zero
  double chain_slack_tol = 1e-6;
};

inline JordanChain compute_jordan(const CharMatrix& cm, const JordanOptions& opt = {}) {
  const MatrixXd D0 = delta0(cm, 0);
  const MatrixXd D1 = delta0(cm, 1);
  Eigen::JacobiSVD<MatrixXd> svd(D0, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd sv = svd.singularValues();
  const double smax = sv[0] > 0 ? sv[0] : 1.0;
  int nullity = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] <= opt.null_tol * smax) ++nullity;
  if (nullity != 1)
    throw NotBtError("compute_jordan: dim ker Delta(0) = " + std::to_string(nullity) +
                     ", need a geometrically simple zero eigenvalue");
  JordanChain ch;
  ch.q0 = svd.matrixV().col(cm.n - 1);
  ch.p1 = svd.matrixU().col(cm.n - 1);
  try {
    ch.q1 = binv_solve(D0, ch.q0, ch.p1, VectorXd(-(D1 * ch.q0)), opt.chain_slack_tol).x;
    ch.p0 = binv_solve(D0.transpose(), ch.p1, ch.q0, VectorXd(-(D1.transpose() * ch.p1)),
                       opt.chain_slack_tol)
                .x;
  } catch (const BinvError& e) {
    throw NotBtError(std::string("compute_jordan: zero eigenvalue is simple, not double (") +
                     e.what() + ")");
  }
  return normalize_chain(cm, ch);
}

struct Binv0Result {
  PolyFun v;  // xi + antiderivative of w; the free gamma*phi0 part is the caller's
  VectorXd xi;
  double slack;     // bordered multiplier = Fredholm inconsistency of the data
  double residual;  // leftover of the xi solve after the slack term
};

// Particular solution of  v' = w,  -sum_j A_j v(-tau_j) = kappa - w(0),  q0' v(0) = 0.
inline Binv0Result binv0(const CharMatrix& cm, const JordanChain& ch, const VectorXd& kappa,
                         const PolyFun& w, double slack_tol = 1e-6) {
  if (w.degree() + 1 > 6)
    throw std::invalid_argument("binv0: antiderivative degree would exceed cap 6");
  VectorXd rhs = kappa;
  for (int k = 0; k <= w.degree(); ++k) rhs -= delta0(cm, k + 1) * w.coeff(k) / (k + 1.0);
  const BinvResult bs = binv_solve(delta0(cm, 0), ch.q0, ch.p1, rhs, slack_tol);
  return {w.antiderivative(bs.x), bs.x, bs.slack, bs.residual};
}

}  // namespace bt
