#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace tpp::interp {

template <typename Scalar>
struct ValueSlope {
  Scalar value;
  Scalar slope;
};

/// Cubic Hermite segment on [x0, x1] with end values and slopes.
template <typename Scalar>
ValueSlope<Scalar> hermite(Scalar x0, Scalar x1, Scalar y0, Scalar y1, Scalar d0, Scalar d1, Scalar x) {
  const Scalar h = x1 - x0;
  const Scalar t = (x - x0) / h;
  const Scalar t2 = t * t;
  const Scalar t3 = t2 * t;
  const Scalar h00 = 2 * t3 - 3 * t2 + 1;
  const Scalar h10 = t3 - 2 * t2 + t;
  const Scalar h01 = -2 * t3 + 3 * t2;
  const Scalar h11 = t3 - t2;
  const Scalar value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
  const Scalar dh00 = (6 * t2 - 6 * t) / h;
  const Scalar dh10 = 3 * t2 - 4 * t + 1;
  const Scalar dh01 = (-6 * t2 + 6 * t) / h;
  const Scalar dh11 = 3 * t2 - 2 * t;
  const Scalar slope = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
  return {value, slope};
}

/// Index i with xs[i] <= x < xs[i+1], clamped to a valid segment.
template <typename Scalar>
std::size_t segment_index(std::span<const Scalar> xs, Scalar x) {
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto i = static_cast<std::ptrdiff_t>(it - xs.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(xs.size()) - 2));
}

/// Monotonicity-preserving piecewise cubic (Steffen 1990). Strictly
/// increasing data gives a nondecreasing interpolant with no overshoot.
template <typename Scalar = double>
class MonotoneCubic {
 public:
  MonotoneCubic() = default;

  MonotoneCubic(std::vector<Scalar> x, std::vector<Scalar> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("MonotoneCubic: need >= 2 matching samples");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i + 1] > x_[i])) throw std::invalid_argument("MonotoneCubic: abscissae not strictly increasing");
    d_.assign(n, Scalar(0));
    std::vector<Scalar> h(n - 1), s(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      s[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      d_[0] = d_[1] = s[0];
      return;
    }
    using std::abs;
    auto sgn = [](Scalar v) { return Scalar((v > 0) - (v < 0)); };
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const Scalar p = (s[i - 1] * h[i] + s[i] * h[i - 1]) / (h[i - 1] + h[i]);
      d_[i] = (sgn(s[i - 1]) + sgn(s[i])) * std::min({abs(s[i - 1]), abs(s[i]), Scalar(0.5) * abs(p)});
    }
    // One-sided ends, limited the same way.
    const Scalar p0 = s[0] * (1 + h[0] / (h[0] + h[1])) - s[1] * h[0] / (h[0] + h[1]);
    d_[0] = (p0 * s[0] <= 0) ? Scalar(0) : (abs(p0) > 2 * abs(s[0]) ? 2 * s[0] : p0);
    const std::size_t m = n - 2;
    const Scalar pn = s[m] * (1 + h[m] / (h[m] + h[m - 1])) - s[m - 1] * h[m] / (h[m] + h[m - 1]);
    d_[n - 1] = (pn * s[m] <= 0) ? Scalar(0) : (abs(pn) > 2 * abs(s[m]) ? 2 * s[m] : pn);
  }

  ValueSlope<Scalar> operator()(Scalar x) const {
    const std::size_t i = segment_index<Scalar>(x_, x);
    return hermite(x_[i], x_[i + 1], y_[i], y_[i + 1], d_[i], d_[i + 1], x);
  }

  const std::vector<Scalar>& x() const { return x_; }
  const std::vector<Scalar>& y() const { return y_; }
  const std::vector<Scalar>& slopes() const { return d_; }

 private:
  std::vector<Scalar> x_, y_, d_;
};

}  // namespace tpp::interp
