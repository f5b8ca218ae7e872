#pragma once
// Truncated multivariate dual numbers.  A MultiDual<K,F> carries a value and
// all square-free mixed partials with respect to K independent perturbation
// directions: c[mask] is the mixed partial over the directions named by the
// set bits of mask.  Propagating K seeded directions through an expression
// yields the exact K-linear directional derivative in c[(1<<K)-1], which is
// how the analytic multilinear forms of the model right-hand sides are built.

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <concepts>

namespace bt {

template <int K, class F = double>
struct MultiDual {
  static constexpr int N = 1 << K;
  std::array<F, N> c{};

  MultiDual() = default;
  MultiDual(F v) { c[0] = v; }

  F value() const { return c[0]; }
  // Highest mixed partial: d^K f / dd_0 ... dd_{K-1}.
  F mixed() const { return c[N - 1]; }

  MultiDual& operator+=(const MultiDual& o) {
    for (int m = 0; m < N; ++m) c[m] += o.c[m];
    return *this;
  }
  MultiDual& operator-=(const MultiDual& o) {
    for (int m = 0; m < N; ++m) c[m] -= o.c[m];
    return *this;
  }
};

template <int K, class F>
MultiDual<K, F> operator+(MultiDual<K, F> a, const MultiDual<K, F>& b) { return a += b; }
template <int K, class F>
MultiDual<K, F> operator-(MultiDual<K, F> a, const MultiDual<K, F>& b) { return a -= b; }
template <int K, class F>
MultiDual<K, F> operator-(const MultiDual<K, F>& a) {
  MultiDual<K, F> r;
  for (int m = 0; m < MultiDual<K, F>::N; ++m) r.c[m] = -a.c[m];
  return r;
}

// Subset convolution: (ab)[m] = sum over splits of m between the factors.
template <int K, class F>
MultiDual<K, F> operator*(const MultiDual<K, F>& a, const MultiDual<K, F>& b) {
  MultiDual<K, F> r;
  for (int m = 0; m < MultiDual<K, F>::N; ++m) {
    F acc{};
    int s = m;
    while (true) {
      acc += a.c[s] * b.c[m ^ s];
      if (s == 0) break;
      s = (s - 1) & m;
    }
    r.c[m] = acc;
  }
  return r;
}

template <class S, class F>
concept ScalarFor = std::convertible_to<S, F>;

template <int K, class F, ScalarFor<F> S>
MultiDual<K, F> operator*(const MultiDual<K, F>& a, S s) {
  MultiDual<K, F> r;
  for (int m = 0; m < MultiDual<K, F>::N; ++m) r.c[m] = a.c[m] * F(s);
  return r;
}
template <int K, class F, ScalarFor<F> S>
MultiDual<K, F> operator*(S s, const MultiDual<K, F>& a) { return a * s; }
template <int K, class F, ScalarFor<F> S>
MultiDual<K, F> operator+(const MultiDual<K, F>& a, S s) {
  MultiDual<K, F> r = a;
  r.c[0] += F(s);
  return r;
}
template <int K, class F, ScalarFor<F> S>
MultiDual<K, F> operator+(S s, const MultiDual<K, F>& a) { return a + s; }
template <int K, class F, ScalarFor<F> S>
MultiDual<K, F> operator-(const MultiDual<K, F>& a, S s) { return a + (-F(s)); }
template <int K, class F, ScalarFor<F> S>
MultiDual<K, F> operator-(S s, const MultiDual<K, F>& a) { return (-a) + s; }
template <int K, class F, ScalarFor<F> S>
MultiDual<K, F> operator/(const MultiDual<K, F>& a, S s) { return a * (F(1) / F(s)); }

template <int K, class F>
MultiDual<K, F> inv(const MultiDual<K, F>& g) {
  MultiDual<K, F> r;
  const F i0 = F(1) / g.c[0];
  r.c[0] = i0;
  for (int m = 1; m < MultiDual<K, F>::N; ++m) {
    F acc{};
    int s = m;
    while (s) {
      acc += g.c[s] * r.c[m ^ s];
      s = (s - 1) & m;
    }
    r.c[m] = -i0 * acc;
  }
  return r;
}

template <int K, class F>
MultiDual<K, F> operator/(const MultiDual<K, F>& a, const MultiDual<K, F>& b) {
  return a * inv(b);
}
template <int K, class F, ScalarFor<F> S>
MultiDual<K, F> operator/(S s, const MultiDual<K, F>& b) { return inv(b) * s; }

// Composition with an analytic function given by its derivatives d[r] = phi^(r)
// at the value point.  comp[r][m] holds (phi^(r) o f) restricted to mask m; the
// recursion peels the lowest bit of m and splits the remaining directions
// between the inner chain-rule factor and the outer composite.
template <int K, class F>
MultiDual<K, F> compose(const MultiDual<K, F>& f, const std::array<F, K + 1>& d) {
  constexpr int N = MultiDual<K, F>::N;
  std::array<std::array<F, N>, K + 1> comp{};
  for (int r = K; r >= 0; --r) {
    comp[r][0] = d[r];
    for (int m = 1; m < N; ++m) {
      if (r + std::popcount(unsigned(m)) > K) continue;
      const int b = m & -m;
      const int rest = m ^ b;
      F acc{};
      int s = rest;
      while (true) {
        acc += comp[r + 1][s] * f.c[(rest ^ s) | b];
        if (s == 0) break;
        s = (s - 1) & rest;
      }
      comp[r][m] = acc;
    }
  }
  MultiDual<K, F> out;
  out.c = comp[0];
  return out;
}

template <int K, class F>
MultiDual<K, F> exp(const MultiDual<K, F>& f) {
  std::array<F, K + 1> d;
  const F e = std::exp(f.c[0]);
  d.fill(e);
  return compose(f, d);
}

template <int K, class F>
MultiDual<K, F> log(const MultiDual<K, F>& f) {
  std::array<F, K + 1> d;
  d[0] = std::log(f.c[0]);
  F p = F(1) / f.c[0];
  F fact = F(1);
  for (int r = 1; r <= K; ++r) {
    d[r] = fact * p;
    fact *= F(-r);
    p = p / f.c[0];
  }
  return compose(f, d);
}

template <int K, class F>
MultiDual<K, F> sqrt(const MultiDual<K, F>& f) {
  std::array<F, K + 1> d;
  d[0] = std::sqrt(f.c[0]);
  F coeff = F(0.5);
  F p = F(1) / d[0];
  for (int r = 1; r <= K; ++r) {
    d[r] = coeff * p;
    coeff *= F(0.5) - F(r);
    p = p / f.c[0];
  }
  return compose(f, d);
}

template <int K, class F>
MultiDual<K, F> tanh(const MultiDual<K, F>& f) {
  static_assert(K <= 3);
  std::array<F, K + 1> d{};
  const F t = std::tanh(f.c[0]);
  const F s = F(1) - t * t;
  d[0] = t;
  if (K >= 1) d[1] = s;
  if (K >= 2) d[2] = F(-2) * t * s;
  if (K >= 3) d[3] = s * (F(6) * t * t - F(2));
  return compose(f, d);
}

template <int K, class F>
MultiDual<K, F> pow_int(const MultiDual<K, F>& f, int n) {
  MultiDual<K, F> r(F(1));
  for (int i = 0; i < n; ++i) r = r * f;
  return r;
}

}  // namespace bt
