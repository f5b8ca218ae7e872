#pragma once
// Built-in delay models, each with a closed-form double-zero point: a
// ratio-dependent predator-prey system, a two-neuron network, a delayed
// van der Pol oscillator, and a three-neuron bidirectional associative
// memory (BAM) network.  Also: the BAM delay bound below which the
// double-zero point keeps the rest of its spectrum in the open left half
// plane.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bt/chmat.hpp"
#include "bt/model.hpp"

namespace bt {

enum class BtCase { generic, transcritical };

struct BtPointSpec {
  std::string model;
  VectorXd eq;       // equilibrium state at the double-zero point
  Vector2d alpha0;   // critical values of the two unfolding parameters
  BtCase bt_case = BtCase::generic;
  std::map<std::string, double> fixed;  // remaining (non-unfolding) parameters
};

struct BuiltModel {
  DdeModel model;
  BtPointSpec bt;
};

namespace builtin {

struct PredPreyRhs {
  double gamma, alpha, m;
  template <class S>
  void operator()(const std::vector<std::vector<S>>& x, const std::vector<S>& al,
                  std::vector<S>& out) const {
    const S& X = x[0][0];
    const S& Y = x[0][1];
    const S& Xd = x[1][0];
    const S& Yd = x[1][1];
    out[0] = X * ((1.0 - X) * (X - gamma) / (X + al[0]) - alpha * Y / (X + Y));
    out[1] = al[1] * Y * (m * Xd / (Xd + Yd) - 1.0);
  }
};

struct NeuralRhs {
  template <class S>
  static S act(const S& u) {
    using std::exp;
    return 1.0 / (1.0 + exp(-4.0 * u)) - 0.5;
  }
  template <class S>
  void operator()(const std::vector<std::vector<S>>& x, const std::vector<S>& al,
                  std::vector<S>& out) const {
    out[0] = -x[0][0] + 2.6 * act(x[1][0]) - al[0] * x[1][1] + al[1];
    out[1] = -x[0][1] + act(x[1][0]);
  }
};

struct VdpoRhs {
  double c1, c2;
  template <class S>
  void operator()(const std::vector<std::vector<S>>& x, const std::vector<S>& al,
                  std::vector<S>& out) const {
    using std::exp;
    const S& eps = al[0];
    const S& tau = al[1];
    const S e = exp(x[1][0]);
    const S g = (e - 1.0) / (c1 * e + c2);
    out[0] = tau * x[0][1];
    out[1] = tau * (eps * g - eps * (x[0][0] * x[0][0] - 1.0) * x[0][1] - x[0][0]);
  }
};

struct BamRhs {
  double mu1, mu2, mu3, c12, c13;
  template <class S>
  void operator()(const std::vector<std::vector<S>>& x, const std::vector<S>& al,
                  std::vector<S>& out) const {
    using std::tanh;
    const S f2d = tanh(x[1][1]) + 0.1 * x[1][1] * x[1][1];
    const S f3d = tanh(x[1][2]) + 0.1 * x[1][2] * x[1][2];
    out[0] = -mu1 * x[0][0] + al[0] * f2d + al[1] * f3d;
    out[1] = -mu2 * x[0][1] + c12 * tanh(x[0][0]);
    out[2] = -mu3 * x[0][2] + c13 * tanh(x[0][0]);
  }
};

}  // namespace builtin

namespace detail {

inline std::map<std::string, double> merge_params(const std::string& id,
                                                  std::map<std::string, double> defaults,
                                                  const std::map<std::string, double>& overrides) {
  for (const auto& [k, v] : overrides) {
    auto it = defaults.find(k);
    if (it == defaults.end())
      throw ModelError(id + ": unknown parameter override '" + k + "'");
    it->second = v;
  }
  return defaults;
}

}  // namespace detail

inline BuiltModel build(const std::string& id,
                        const std::map<std::string, double>& overrides = {}) {
  if (id == "predator_prey") {
    auto p = detail::merge_params(
        id, {{"gamma", 0.15}, {"alpha", 0.9}, {"m", 1.50298303}, {"tau", 1.0}}, overrides);
    const double gamma = p["gamma"], alpha = p["alpha"], m = p["m"], tau = p["tau"];
    if (m <= 1.0) throw ModelError(id + ": m must exceed 1");
    if (gamma <= 0 || alpha <= 0 || tau <= 0)
      throw ModelError(id + ": gamma, alpha, tau must be positive");
    BuiltModel bm;
    bm.model = make_model(id, 2, {0.0, tau}, {"theta", "delta"},
                          builtin::PredPreyRhs{gamma, alpha, m});
    const double x0 = (m + alpha - m * alpha + m * gamma) / (2 * m);
    const double y0 = (m - 1) * x0;
    const double s = alpha + m * (1 - alpha + gamma);
    const double theta0 = (s * s - 4 * m * m * gamma) / (4 * (m - 1) * m * alpha);
    const double delta0 = alpha / m;
    if (x0 <= gamma || x0 >= 1 || theta0 <= 0)
      throw ModelError(id + ": parameters leave the positive-equilibrium domain");
    bm.bt = {id, (VectorXd(2) << x0, y0).finished(), Vector2d(theta0, delta0), BtCase::generic,
             p};
    return bm;
  }
  if (id == "neural_network") {
    if (!overrides.empty()) throw ModelError(id + ": no overridable parameters");
    BuiltModel bm;
    bm.model = make_model(id, 2, {0.0, 1.0}, {"Q", "E"}, builtin::NeuralRhs{});
    const double r39 = std::sqrt(39.0);
    const double u1 = 0.25 * std::log((8.0 - r39) / 5.0);
    const double u2 = -r39 / 26.0;
    const double Q0 = 1.3;
    const double E0 = (r39 - 10.0 * std::atanh(std::sqrt(3.0 / 13.0))) / 20.0;
    bm.bt = {id, (VectorXd(2) << u1, u2).finished(), Vector2d(Q0, E0), BtCase::generic, {}};
    return bm;
  }
  if (id == "vdpo") {
    auto p = detail::merge_params(id, {{"c1", 0.25}, {"c2", 0.5}}, overrides);
    if (p["c1"] <= 0 || p["c2"] <= 0) throw ModelError(id + ": c1, c2 must be positive");
    BuiltModel bm;
    bm.model = make_model(id, 2, {0.0, 1.0}, {"epsilon", "tau"},
                          builtin::VdpoRhs{p["c1"], p["c2"]});
    bm.bt = {id, VectorXd::Zero(2), Vector2d(0.75, 0.75), BtCase::transcritical, p};
    return bm;
  }
  if (id == "bam") {
    auto p = detail::merge_params(
        id, {{"mu1", 0.1}, {"mu2", 0.3}, {"mu3", 0.2}, {"c12", 1.0}, {"c13", 1.0}, {"tau", 5.0}},
        overrides);
    const double mu1 = p["mu1"], mu2 = p["mu2"], mu3 = p["mu3"];
    const double c12 = p["c12"], c13 = p["c13"], tau = p["tau"];
    if (mu1 <= 0 || mu2 <= 0 || mu3 <= 0 || tau <= 0)
      throw ModelError(id + ": mu1, mu2, mu3, tau must be positive");
    if (std::abs(mu2 - mu3) < 1e-12 * (std::abs(mu2) + std::abs(mu3)))
      throw ModelError(id + ": mu2 = mu3 is degenerate");
    BuiltModel bm;
    bm.model =
        make_model(id, 3, {0.0, tau}, {"c21", "c31"}, builtin::BamRhs{mu1, mu2, mu3, c12, c13});
    const double c21 = mu2 * mu2 * (mu1 * (mu3 * tau + 1) + mu3) / (c12 * (mu2 - mu3));
    const double c31 = mu3 * mu3 * (mu1 * (mu2 * tau + 1) + mu2) / (c13 * (mu3 - mu2));
    bm.bt = {id, VectorXd::Zero(3), Vector2d(c21, c31), BtCase::transcritical, p};
    return bm;
  }
  throw ModelError("unknown model id '" + id + "'");
}

inline ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ModelError("config parse error in " + path + ": " + e.what());
  }
  ModelConfig cfg;
  if (!j.is_object() || !j.contains("builtin") || !j["builtin"].is_string())
    throw ModelError(path + ": config must be an object with a string field 'builtin'");
  for (const auto& [k, v] : j.items()) {
    if (k == "builtin")
      cfg.builtin = v.get<std::string>();
    else if (k == "params") {
      for (const auto& [pk, pv] : v.items()) cfg.overrides[pk] = pv.get<double>();
    } else if (k == "n")
      cfg.n = v.get<int>();
    else if (k == "delays")
      cfg.delays = v.get<std::vector<double>>();
    else
      throw ModelError(path + ": unknown config field '" + k + "'");
  }
  return cfg;
}

inline BuiltModel build(const ModelConfig& cfg) {
  BuiltModel bm = build(cfg.builtin, cfg.overrides);
  if (cfg.n >= 0 && cfg.n != bm.model.n)
    throw ModelError(cfg.builtin + ": config n does not match the model");
  if (!cfg.delays.empty()) {
    if (cfg.delays.size() != bm.model.delays.size())
      throw ModelError(cfg.builtin + ": config delays do not match the model");
    for (size_t i = 0; i < cfg.delays.size(); ++i)
      if (std::abs(cfg.delays[i] - bm.model.delays[i]) > 1e-12)
        throw ModelError(cfg.builtin + ": config delays do not match the model");
  }
  return bm;
}

struct StabilityBoundary {
  std::function<double(double)> omega0;  // candidate crossing frequency vs delay
  double tau0 = 0;                       // smallest tangent-equation solution
  double bound = 0;                      // smallest solution verified on the full spectrum
  struct Candidate {
    double tau, omega, tan_residual, abs_det;
    bool verified;
  };
  std::vector<Candidate> candidates;
};

// Delay values at which the BAM double-zero point can acquire an extra purely
// imaginary eigenvalue pair.  Candidates solve tan(tau*w0) = rational data in
// w0; each is then checked against det Delta(i w0) of the actual model, since
// the tangent equation is necessary but not sufficient.
inline StabilityBoundary bam_stability_boundary(double mu1, double mu2, double mu3,
                                                double c12 = 1.0, double c13 = 1.0,
                                                double tau_max = 40.0, double step = 0.05) {
  if (std::abs(mu2 - mu3) < 1e-12 * (std::abs(mu2) + std::abs(mu3)))
    throw ModelError("bam boundary: mu2 = mu3 is degenerate");
  auto omega0 = [=](double tau) {
    const double z0 =
        std::pow(mu1, 4) + std::pow(mu2 * mu2 + mu3 * mu3, 2) +
        8 * mu1 * mu2 * mu3 * (mu2 + mu3 + mu2 * mu3 * tau) +
        2 * mu1 * mu1 *
            (mu3 * mu3 + 4 * mu2 * mu3 * (1 + mu3 * tau) +
             mu2 * mu2 * (1 + 2 * mu3 * tau * (2 + mu3 * tau)));
    const double inner = (-mu1 * mu1 - mu2 * mu2 - mu3 * mu3 + std::sqrt(z0)) / 2;
    return inner > 0 ? std::sqrt(inner) : 0.0;
  };
  // The crossing condition fixes (cos(tau w), sin(tau w)) up to a common
  // sign, so the tangent relaxation tan(tau w) = (b0 z1 - a0 z2)/(a0 z1 + b0 z2)
  // is taken on both sign branches; the genuine crossings are singled out by
  // the determinant check below.  Each branch is recast pole-free as
  // F = sin(tau w)(a0 z1 + b0 z2) -/+ cos(tau w)(b0 z1 - a0 z2).
  auto F = [&](double tau, double sgn) {
    const double w = omega0(tau);
    const double a0 = -mu1 * mu2 * mu3;
    const double b0 = -w * (mu2 * mu3 + mu1 * (mu2 + mu3 + mu2 * mu3 * tau));
    const double z1 = mu1 * mu2 * mu3 - (mu1 + mu2 + mu3) * w * w;
    const double z2 = mu2 * mu3 * w + mu1 * (mu2 + mu3) * w - w * w * w;
    return std::sin(tau * w) * (a0 * z1 + b0 * z2) - sgn * std::cos(tau * w) * (b0 * z1 - a0 * z2);
  };
  auto tan_residual = [&](double tau) {
    const double w = omega0(tau);
    const double a0 = -mu1 * mu2 * mu3;
    const double b0 = -w * (mu2 * mu3 + mu1 * (mu2 + mu3 + mu2 * mu3 * tau));
    const double z1 = mu1 * mu2 * mu3 - (mu1 + mu2 + mu3) * w * w;
    const double z2 = mu2 * mu3 * w + mu1 * (mu2 + mu3) * w - w * w * w;
    const double rhs = (b0 * z1 - a0 * z2) / (a0 * z1 + b0 * z2);
    const double t = std::tan(tau * w);
    return std::min(std::abs(t - rhs), std::abs(t + rhs));
  };

  StabilityBoundary sb;
  sb.omega0 = omega0;
  for (double sgn : {1.0, -1.0}) {
    double prev_tau = step, prev_F = F(step, sgn);
    for (double tau = 2 * step; tau <= tau_max + 1e-9; tau += step) {
      const double cur = F(tau, sgn);
      if (prev_F == 0.0 || (prev_F < 0) != (cur < 0)) {
        double lo = prev_tau, hi = tau;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * (1 + hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          if ((F(lo, sgn) < 0) != (F(mid, sgn) < 0))
            hi = mid;
          else
            lo = mid;
        }
        const double tc = 0.5 * (lo + hi);
        const double w = omega0(tc);
        BuiltModel bm = build("bam", {{"mu1", mu1},
                                      {"mu2", mu2},
                                      {"mu3", mu3},
                                      {"c12", c12},
                                      {"c13", c13},
                                      {"tau", tc}});
        const CharMatrix cm = make_char_matrix(
            bm.model, bm.bt.eq.replicate(1, bm.model.n_delays()), bm.bt.alpha0);
        const double ad = std::abs(delta(cm, 0, complexd(0.0, w)).determinant());
        sb.candidates.push_back({tc, w, tan_residual(tc), ad, ad <= 1e-8});
      }
      prev_tau = tau;
      prev_F = cur;
    }
  }
  std::sort(sb.candidates.begin(), sb.candidates.end(),
            [](const auto& a, const auto& b) { return a.tau < b.tau; });
  if (sb.candidates.empty()) throw ModelError("bam boundary: no tangent solutions in range");
  sb.tau0 = sb.candidates.front().tau;
  sb.bound = 0;
  for (const auto& c : sb.candidates)
    if (c.verified) {
      sb.bound = c.tau;
      break;
    }
  if (sb.bound == 0)
    throw ModelError("bam boundary: no candidate verified against the spectrum");
  return sb;
}

}  // namespace bt
