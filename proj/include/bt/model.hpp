#pragma once
// Delay differential models with constant discrete delays,
//   x'(t) = f(x(t), x(t - tau_1), ..., x(t - tau_m), alpha),
// presented to the rest of the library through one entry point for the
// right-hand side and one for its mixed directional derivatives (multilinear
// forms in state/parameter directions).  Built-in models supply exact forms
// via MultiDual propagation; custom models fall back to central finite
// differences combined by polarization.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bt/multidual.hpp"

namespace bt {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// State snapshot at one time: column j holds x(t - tau_j); column 0 is the
// undelayed value.
struct HistoryPoint {
  MatrixXd xi;
};

// Perturbation direction for the combined (state history, parameter) argument.
// Zero-sized blocks mean "no perturbation in that block".
struct Direction {
  MatrixXd dxi;
  VectorXd dalpha;
};

inline Direction state_dir(const MatrixXd& dxi) { return Direction{dxi, VectorXd()}; }
inline Direction param_dir(const VectorXd& da) { return Direction{MatrixXd(), da}; }

struct DdeModel {
  std::string id;
  int n = 0;
  std::vector<double> delays;  // delays[0] == 0, strictly increasing
  std::vector<std::string> param_names;
  std::function<VectorXd(const MatrixXd& xi, const VectorXd& alpha)> rhs;
  // Exact k-linear directional derivative (k = dirs.size()); optional.
  std::function<VectorXd(const MatrixXd& xi, const VectorXd& alpha,
                         const std::vector<Direction>& dirs)>
      mlf_exact;
  // Same right-hand side on complexified arguments; used to continue
  // equilibria analytically past fold points.  Optional.
  std::function<VectorXcd(const MatrixXcd& xi, const VectorXcd& alpha)> rhs_complex;

  int n_delays() const { return static_cast<int>(delays.size()); }
  double max_delay() const { return delays.back(); }
  double min_positive_delay() const {
    for (double t : delays)
      if (t > 0) return t;
    throw ModelError(id + ": model has no positive delay");
  }
};

inline void check_shapes(const DdeModel& m, const MatrixXd& xi, const VectorXd& alpha) {
  if (xi.rows() != m.n || xi.cols() != m.n_delays())
    throw ModelError(m.id + ": history block must be n x (number of delays)");
  if (alpha.size() != static_cast<Eigen::Index>(m.param_names.size()))
    throw ModelError(m.id + ": wrong parameter count");
}

inline VectorXd eval_rhs(const DdeModel& m, const HistoryPoint& h, const VectorXd& alpha) {
  check_shapes(m, h.xi, alpha);
  return m.rhs(h.xi, alpha);
}

struct MlfOptions {
  bool force_fd = false;  // ignore the exact callback (used for cross-checks)
  double fd_eps = std::numeric_limits<double>::epsilon();
};

namespace detail {

inline Direction padded(const DdeModel& m, const Direction& d) {
  Direction r = d;
  if (r.dxi.size() == 0) r.dxi = MatrixXd::Zero(m.n, m.n_delays());
  if (r.dalpha.size() == 0) r.dalpha = VectorXd::Zero(m.param_names.size());
  if (r.dxi.rows() != m.n || r.dxi.cols() != m.n_delays() ||
      r.dalpha.size() != static_cast<Eigen::Index>(m.param_names.size()))
    throw ModelError(m.id + ": direction has wrong shape");
  return r;
}

inline double dir_norm(const Direction& d) {
  return std::sqrt(d.dxi.squaredNorm() + d.dalpha.squaredNorm());
}

// k-th central difference of s -> f(xi + s*dxi, alpha + s*dalpha) at s = 0,
// sharpened by two Richardson levels.  The plain second-order stencils at the
// classical step eps^(1/(2+k)) lose too much accuracy on right-hand sides with
// fast-growing derivatives (rational terms), so the base step is widened to
// eps^(1/(6+k)) and the h^2, h^4 error terms are extrapolated away.
inline VectorXd central_derivative(const DdeModel& m, const MatrixXd& xi, const VectorXd& alpha,
                                   const Direction& d, int k, double eps) {
  auto g = [&](double s) { return m.rhs(xi + s * d.dxi, alpha + s * d.dalpha); };
  auto stencil = [&](double h) -> VectorXd {
    switch (k) {
      case 1:
        return (g(h) - g(-h)) / (2 * h);
      case 2:
        return (g(h) - 2 * g(0) + g(-h)) / (h * h);
      case 3:
        return (g(2 * h) - 2 * g(h) + 2 * g(-h) - g(-2 * h)) / (2 * h * h * h);
      default:
        throw ModelError("finite differences support derivative orders 1..3");
    }
  };
  const double h = std::pow(eps, 1.0 / (6 + k));
  const VectorXd r1a = (4 * stencil(h / 2) - stencil(h)) / 3;
  const VectorXd r1b = (4 * stencil(h / 4) - stencil(h / 2)) / 3;
  return (16 * r1b - r1a) / 15;
}

inline VectorXd mlf_fd(const DdeModel& m, const MatrixXd& xi, const VectorXd& alpha,
                       const std::vector<Direction>& dirs, double eps) {
  const int k = static_cast<int>(dirs.size());
  double scale = 1.0;
  std::vector<Direction> unit(dirs.size());
  for (size_t i = 0; i < dirs.size(); ++i) {
    const double s = dir_norm(dirs[i]);
    if (s == 0.0) return VectorXd::Zero(m.n);
    scale *= s;
    unit[i].dxi = dirs[i].dxi / s;
    unit[i].dalpha = dirs[i].dalpha / s;
  }
  if (k == 1) return scale * central_derivative(m, xi, alpha, unit[0], 1, eps);

  // Polarization: recover the symmetric k-linear form from directional k-th
  // derivatives along sums of the unit directions.
  VectorXd acc = VectorXd::Zero(m.n);
  const int subsets = 1 << k;
  for (int mask = 1; mask < subsets; ++mask) {
    Direction u;
    u.dxi = MatrixXd::Zero(m.n, m.n_delays());
    u.dalpha = VectorXd::Zero(m.param_names.size());
    for (int i = 0; i < k; ++i)
      if (mask & (1 << i)) {
        u.dxi += unit[i].dxi;
        u.dalpha += unit[i].dalpha;
      }
    const int sign = (k - std::popcount(unsigned(mask))) % 2 ? -1 : 1;
    acc += sign * central_derivative(m, xi, alpha, u, k, eps);
  }
  double kfact = 1;
  for (int i = 2; i <= k; ++i) kfact *= i;
  return scale / kfact * acc;
}

}  // namespace detail

// Mixed directional derivative of the right-hand side of order dirs.size(),
// evaluated at (xi, alpha).  Symmetric in the directions.
inline VectorXd mlf(const DdeModel& m, const MatrixXd& xi, const VectorXd& alpha,
                    const std::vector<Direction>& dirs, const MlfOptions& opt = {}) {
  check_shapes(m, xi, alpha);
  if (dirs.empty() || dirs.size() > 3)
    throw ModelError(m.id + ": multilinear forms take 1..3 directions");
  std::vector<Direction> full;
  full.reserve(dirs.size());
  for (const auto& d : dirs) full.push_back(detail::padded(m, d));
  if (m.mlf_exact && !opt.force_fd) return m.mlf_exact(xi, alpha, full);
  return detail::mlf_fd(m, xi, alpha, full, opt.fd_eps);
}

// Adapter turning a scalar-templated functor
//   fn(x, alpha, out)  with x[j][i] = component i at delay j
// into both the plain right-hand side and the exact multilinear callback.
template <class Fn>
DdeModel make_model(std::string id, int n, std::vector<double> delays,
                    std::vector<std::string> param_names, Fn fn) {
  DdeModel m;
  m.id = std::move(id);
  m.n = n;
  m.delays = std::move(delays);
  m.param_names = std::move(param_names);
  const int nd = m.n_delays();
  const int np = static_cast<int>(m.param_names.size());

  m.rhs = [fn, n, nd, np](const MatrixXd& xi, const VectorXd& alpha) {
    std::vector<std::vector<double>> x(nd, std::vector<double>(n));
    for (int j = 0; j < nd; ++j)
      for (int i = 0; i < n; ++i) x[j][i] = xi(i, j);
    std::vector<double> al(np), out(n);
    for (int p = 0; p < np; ++p) al[p] = alpha[p];
    fn(x, al, out);
    VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = out[i];
    return r;
  };

  m.rhs_complex = [fn, n, nd, np](const MatrixXcd& xi, const VectorXcd& alpha) {
    using C = std::complex<double>;
    std::vector<std::vector<C>> x(nd, std::vector<C>(n));
    for (int j = 0; j < nd; ++j)
      for (int i = 0; i < n; ++i) x[j][i] = xi(i, j);
    std::vector<C> al(np), out(n);
    for (int p = 0; p < np; ++p) al[p] = alpha[p];
    fn(x, al, out);
    VectorXcd r(n);
    for (int i = 0; i < n; ++i) r[i] = out[i];
    return r;
  };

  auto run_md = [fn, n, nd, np]<int K>(std::integral_constant<int, K>, const MatrixXd& xi,
                                       const VectorXd& alpha, const std::vector<Direction>& dirs) {
    using S = MultiDual<K, double>;
    std::vector<std::vector<S>> x(nd, std::vector<S>(n));
    std::vector<S> al(np), out(n);
    for (int j = 0; j < nd; ++j)
      for (int i = 0; i < n; ++i) {
        x[j][i] = S(xi(i, j));
        for (int t = 0; t < K; ++t) x[j][i].c[1 << t] = dirs[t].dxi(i, j);
      }
    for (int p = 0; p < np; ++p) {
      al[p] = S(alpha[p]);
      for (int t = 0; t < K; ++t) al[p].c[1 << t] = dirs[t].dalpha[p];
    }
    fn(x, al, out);
    VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = out[i].mixed();
    return r;
  };

  m.mlf_exact = [run_md](const MatrixXd& xi, const VectorXd& alpha,
                         const std::vector<Direction>& dirs) -> VectorXd {
    switch (dirs.size()) {
      case 1:
        return run_md(std::integral_constant<int, 1>{}, xi, alpha, dirs);
      case 2:
        return run_md(std::integral_constant<int, 2>{}, xi, alpha, dirs);
      case 3:
        return run_md(std::integral_constant<int, 3>{}, xi, alpha, dirs);
      default:
        throw ModelError("multilinear forms take 1..3 directions");
    }
  };
  return m;
}

// Plain-text model configuration (JSON).  Names a built-in model and may
// override documented fixed parameters; n and delays, when present, are
// validated against the built model.
struct ModelConfig {
  std::string builtin;
  std::map<std::string, double> overrides;
  int n = -1;                          // optional, -1 = unspecified
  std::vector<double> delays;          // optional, empty = unspecified
};

}  // namespace bt
