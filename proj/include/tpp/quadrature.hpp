#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

#include <Eigen/Core>

namespace tpp::quad {

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
template <typename Scalar = double>
struct GaussLegendre {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    using std::abs;
    using std::cos;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      Scalar x = cos(std::numbers::pi_v<Scalar> * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
      Scalar dp = 0;
      for (int it = 0; it < 100; ++it) {
        Scalar p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1);
        const Scalar dx = p1 / dp;
        x -= dx;
        if (abs(dx) < 4 * std::numeric_limits<Scalar>::epsilon()) break;
      }
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      const Scalar w = 2 / ((1 - x * x) * dp * dp);
      weights[i] = w;
      weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) nodes[n / 2] = 0;
  }

  int size() const { return static_cast<int>(nodes.size()); }

  /// Node i mapped onto [a, b].
  Scalar node(int i, Scalar a, Scalar b) const { return Scalar(0.5) * (a + b) + Scalar(0.5) * (b - a) * nodes[i]; }
  Scalar weight(int i, Scalar a, Scalar b) const { return Scalar(0.5) * (b - a) * weights[i]; }

  template <typename F>
  Scalar integrate(F&& f, Scalar a, Scalar b) const {
    Scalar sum = 0;
    for (int i = 0; i < size(); ++i) sum += weight(i, a, b) * f(node(i, a, b));
    return sum;
  }
};

/// Shared rule instances; construction is cheap but not free.
template <int N, typename Scalar = double>
const GaussLegendre<Scalar>& gauss_legendre() {
  static const GaussLegendre<Scalar> rule(N);
  return rule;
}

template <typename Scalar = double>
struct QuadResult {
  Scalar value = 0;
  Scalar abs_error = 0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Scalar>
struct Panel {
  Scalar a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <typename Scalar, typename F>
Panel<Scalar> gk15(F& f, Scalar a, Scalar b) {
  using std::abs;
  const Scalar c = Scalar(0.5) * (a + b);
  const Scalar h = Scalar(0.5) * (b - a);
  const Scalar fc = f(c);
  Scalar kron = fc * Scalar(kWgk[7]);
  Scalar gauss = fc * Scalar(kWg[3]);
  for (int j = 0; j < 7; ++j) {
    const Scalar dx = h * Scalar(kXgk[j]);
    const Scalar f1 = f(c - dx);
    const Scalar f2 = f(c + dx);
    kron += Scalar(kWgk[j]) * (f1 + f2);
    if (j % 2 == 1) gauss += Scalar(kWg[j / 2]) * (f1 + f2);
  }
  return {a, b, kron * h, abs((kron - gauss) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss–Kronrod (G7/K15) quadrature. Bisects the panel
/// with the largest error estimate until the summed estimate meets
/// max(abs_tol, rel_tol * |I|).
template <typename Scalar = double, typename F>
QuadResult<Scalar> adaptive_gk15(F&& f, Scalar a, Scalar b, Scalar abs_tol, Scalar rel_tol = Scalar(0),
                                 int max_panels = 2000) {
  using std::abs;
  QuadResult<Scalar> out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<detail::Panel<Scalar>> heap;
  auto first = detail::gk15<Scalar>(f, a, b);
  out.evaluations = 15;
  Scalar total = first.value;
  Scalar err = first.error;
  heap.push(first);
  int panels = 1;
  while (err > std::max(abs_tol, rel_tol * abs(total)) && panels < max_panels) {
    const auto worst = heap.top();
    heap.pop();
    const Scalar mid = Scalar(0.5) * (worst.a + worst.b);
    const auto left = detail::gk15<Scalar>(f, worst.a, mid);
    const auto right = detail::gk15<Scalar>(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Re-sum to shed the drift of the running updates.
  total = 0;
  err = 0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.abs_error = err;
  out.converged = err <= std::max(abs_tol, rel_tol * abs(total));
  return out;
}

}  // namespace tpp::quad
