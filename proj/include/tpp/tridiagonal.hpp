#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Core>

#include "tpp/errors.hpp"

namespace tpp::tridiag {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Symmetric tridiagonal matrix stored as main and first off-diagonal.
template <typename Scalar = double>
struct SymmetricTridiagonal {
  Vector<Scalar> diag;
  Vector<Scalar> off;  // size() - 1 entries, off[i] couples i and i+1

  SymmetricTridiagonal() = default;
  explicit SymmetricTridiagonal(Eigen::Index n) : diag(Vector<Scalar>::Zero(n)), off(Vector<Scalar>::Zero(n > 0 ? n - 1 : 0)) {}

  Eigen::Index size() const { return diag.size(); }

  Vector<Scalar> apply(const Vector<Scalar>& v) const {
    Vector<Scalar> out = diag.cwiseProduct(v);
    const Eigen::Index n = size();
    if (n > 1) {
      out.head(n - 1) += off.cwiseProduct(v.tail(n - 1));
      out.tail(n - 1) += off.cwiseProduct(v.head(n - 1));
    }
    return out;
  }

  Scalar quadratic_form(const Vector<Scalar>& v) const { return v.dot(apply(v)); }

  /// D S D for a diagonal scaling D = diag(d).
  SymmetricTridiagonal scaled(const Vector<Scalar>& d) const {
    SymmetricTridiagonal out = *this;
    out.diag = diag.cwiseProduct(d).cwiseProduct(d);
    const Eigen::Index n = size();
    if (n > 1) out.off = off.cwiseProduct(d.head(n - 1)).cwiseProduct(d.tail(n - 1));
    return out;
  }

  /// Drops the last row and column.
  SymmetricTridiagonal leading(Eigen::Index n) const {
    SymmetricTridiagonal out(n);
    out.diag = diag.head(n);
    if (n > 1) out.off = off.head(n - 1);
    return out;
  }

  Scalar max_abs() const {
    Scalar a = diag.size() ? diag.cwiseAbs().maxCoeff() : Scalar(0);
    if (off.size()) a = std::max(a, off.cwiseAbs().maxCoeff());
    return a;
  }

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense() const {
    const Eigen::Index n = size();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
    m.diagonal() = diag;
    if (n > 1) {
      m.diagonal(1) = off;
      m.diagonal(-1) = off;
    }
    return m;
  }
};

namespace detail {

// Pivots of the LDL^T factorization of S - theta B; nullopt on a tiny pivot.
template <typename Scalar>
std::optional<int> negative_pivots(const SymmetricTridiagonal<Scalar>& s, const SymmetricTridiagonal<Scalar>& b,
                                   Scalar theta, Scalar pivmin) {
  using std::abs;
  const Eigen::Index n = s.size();
  int count = 0;
  Scalar d = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar t = s.diag[i] - theta * b.diag[i];
    if (i == 0) {
      d = t;
    } else {
      const Scalar e = s.off[i - 1] - theta * b.off[i - 1];
      d = t - e * e / d;
    }
    if (!(abs(d) > pivmin)) return std::nullopt;
    if (d < 0) ++count;
  }
  return count;
}

}  // namespace detail

/// Number of eigenvalues of the pencil (S, B) strictly below theta, with B
/// symmetric positive definite. By Sylvester's law this is the number of
/// negative pivots of S - theta B. A vanishing pivot triggers a retry at a
/// shift perturbed by a few ulps of the matrix scale.
template <typename Scalar>
int count_below(const SymmetricTridiagonal<Scalar>& s, const SymmetricTridiagonal<Scalar>& b, Scalar theta) {
  using std::abs;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar scale = std::max(s.max_abs(), abs(theta) * b.max_abs());
  const Scalar pivmin = std::numeric_limits<Scalar>::min() * std::max(Scalar(1), scale * scale);
  const Scalar bscale = std::max(b.max_abs(), std::numeric_limits<Scalar>::min());
  for (int attempt = 0; attempt < 8; ++attempt) {
    const Scalar shift = attempt == 0 ? Scalar(0) : -Scalar(1 << attempt) * eps * (abs(theta) + scale / bscale);
    if (auto c = detail::negative_pivots(s, b, theta + shift, pivmin)) return *c;
  }
  throw NumericalError("count_below: zero pivot persists after perturbed refactorization");
}

/// k-th smallest pencil eigenvalue (0-based) by bisection on count_below.
template <typename Scalar>
Scalar eigenvalue(const SymmetricTridiagonal<Scalar>& s, const SymmetricTridiagonal<Scalar>& b, int k,
                  Scalar abs_tol = Scalar(1e-14)) {
  const Eigen::Index n = s.size();
  if (k < 0 || k >= n) throw DomainError("eigenvalue: index out of range");
  Scalar lo = -1, hi = 1;
  for (int i = 0; count_below(s, b, lo) > k; ++i) {
    if (i > 2000) throw NumericalError("eigenvalue: lower bracket not found");
    lo *= 2;
  }
  for (int i = 0; count_below(s, b, hi) <= k; ++i) {
    if (i > 2000) throw NumericalError("eigenvalue: upper bracket not found");
    hi *= 2;
  }
  using std::abs;
  for (int it = 0; it < 400; ++it) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_below(s, b, mid) > k)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= abs_tol * std::max(Scalar(1), abs(mid))) break;
  }
  return Scalar(0.5) * (lo + hi);
}

/// Solves the general tridiagonal system with partial pivoting.
/// lower[i] couples row i+1 to column i, upper[i] couples row i to column i+1.
template <typename Scalar>
Vector<Scalar> solve_general(Vector<Scalar> lower, Vector<Scalar> diag, Vector<Scalar> upper, Vector<Scalar> rhs) {
  using std::abs;
  const Eigen::Index n = diag.size();
  Vector<Scalar> upper2 = Vector<Scalar>::Zero(n);  // second superdiagonal created by swaps
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (abs(diag[i]) >= abs(lower[i])) {
      if (diag[i] == 0) throw NumericalError("solve_general: singular system");
      const Scalar f = lower[i] / diag[i];
      diag[i + 1] -= f * upper[i];
      rhs[i + 1] -= f * rhs[i];
      lower[i] = 0;
    } else {
      const Scalar f = diag[i] / lower[i];
      diag[i] = lower[i];
      std::swap(rhs[i], rhs[i + 1]);
      rhs[i + 1] -= f * rhs[i];
      const Scalar tmp = diag[i + 1];
      diag[i + 1] = upper[i] - f * tmp;
      upper[i] = tmp;
      if (i + 2 < n) {
        upper2[i] = upper[i + 1];
        upper[i + 1] = -f * upper[i + 1];
      }
    }
  }
  if (n > 0 && diag[n - 1] == 0) throw NumericalError("solve_general: singular system");
  Vector<Scalar> x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    Scalar v = rhs[i];
    if (i + 1 < n) v -= upper[i] * x[i + 1];
    if (i + 2 < n) v -= upper2[i] * x[i + 2];
    x[i] = v / diag[i];
  }
  return x;
}

/// (S - sigma B) x = rhs.
template <typename Scalar>
Vector<Scalar> solve_shifted(const SymmetricTridiagonal<Scalar>& s, const SymmetricTridiagonal<Scalar>& b, Scalar sigma,
                             const Vector<Scalar>& rhs) {
  const Vector<Scalar> d = s.diag - sigma * b.diag;
  const Vector<Scalar> e = s.off - sigma * b.off;
  return solve_general<Scalar>(e, d, e, rhs);
}

template <typename Scalar>
struct EigenPair {
  Scalar value;
  Vector<Scalar> vector;  // B-normalized
  Scalar residual;        // ||S v - value B v|| / ||S||
};

/// Eigenvector of the pencil for a known eigenvalue by inverse iteration.
template <typename Scalar>
EigenPair<Scalar> inverse_iteration(const SymmetricTridiagonal<Scalar>& s, const SymmetricTridiagonal<Scalar>& b,
                                    Scalar theta, int iterations = 4) {
  using std::abs;
  using std::sqrt;
  const Eigen::Index n = s.size();
  const Scalar scale = std::max(s.max_abs(), b.max_abs());
  // Nudge off the eigenvalue so the shifted system stays solvable.
  const Scalar sigma = theta + Scalar(64) * std::numeric_limits<Scalar>::epsilon() * std::max(abs(theta), Scalar(1)) *
                                   std::max(Scalar(1), scale / std::max(b.max_abs(), std::numeric_limits<Scalar>::min()));
  Vector<Scalar> v = Vector<Scalar>::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] += Scalar(0.01) * Scalar((i * 7919) % 101) / 101;
  for (int it = 0; it < iterations; ++it) {
    v = solve_shifted(s, b, sigma, b.apply(v));
    v /= sqrt(abs(b.quadratic_form(v)));
  }
  const Scalar rq = s.quadratic_form(v) / b.quadratic_form(v);
  const Scalar res = (s.apply(v) - rq * b.apply(v)).norm() / std::max(scale, std::numeric_limits<Scalar>::min());
  // Fix the sign so the largest component is positive.
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0) v = -v;
  return {rq, v, res};
}

/// v^T B^{-1} v for symmetric positive definite tridiagonal B.
template <typename Scalar>
Scalar inverse_norm_sq(const SymmetricTridiagonal<Scalar>& b, const Vector<Scalar>& v) {
  const Vector<Scalar> z = solve_general<Scalar>(b.off, b.diag, b.off, v);
  return v.dot(z);
}

}  // namespace tpp::tridiag
