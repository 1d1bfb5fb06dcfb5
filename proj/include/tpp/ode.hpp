#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace tpp::ode {

/// Dormand–Prince 5(4) embedded pair, first-same-as-last.
template <typename Scalar, int N>
class DormandPrince54 {
 public:
  using State = Eigen::Matrix<Scalar, N, 1>;

  struct Step {
    State u;       // 5th-order solution
    State deriv;   // f(t + h, u), reusable as the next first stage
    State error;   // u5 - u4
  };

  template <typename Rhs>
  static Step step(Rhs& rhs, Scalar t, const State& u, const State& k1, Scalar h) {
    const State k2 = rhs(t + h * c2, State(u + h * (a21 * k1)));
    const State k3 = rhs(t + h * c3, State(u + h * (a31 * k1 + a32 * k2)));
    const State k4 = rhs(t + h * c4, State(u + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const State k5 = rhs(t + h * c5, State(u + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const State k6 = rhs(t + h, State(u + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    State u5 = u + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State k7 = rhs(t + h, u5);
    State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    return {std::move(u5), k7, std::move(err)};
  }

  /// Mixed abs/rel RMS-free max norm used for step acceptance.
  static Scalar error_norm(const State& err, const State& u0, const State& u1, Scalar abs_tol, Scalar rel_tol) {
    using std::abs;
    Scalar worst = 0;
    for (int i = 0; i < err.size(); ++i) {
      const Scalar scale = abs_tol + rel_tol * std::max(abs(u0[i]), abs(u1[i]));
      worst = std::max(worst, abs(err[i]) / scale);
    }
    return worst;
  }

  /// Standard controller with safety factor 0.9 and growth in [0.2, 5].
  static Scalar next_step(Scalar h, Scalar err_norm) {
    using std::pow;
    if (err_norm == 0) return 5 * h;
    const Scalar factor = Scalar(0.9) * pow(err_norm, Scalar(-0.2));
    return h * std::clamp(factor, Scalar(0.2), Scalar(5));
  }

 private:
  static constexpr Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5, c5 = Scalar(8) / 9;
  static constexpr Scalar a21 = Scalar(1) / 5;
  static constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
  static constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
  static constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187, a53 = Scalar(64448) / 6561,
                          a54 = Scalar(-212) / 729;
  static constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33, a63 = Scalar(46732) / 5247,
                          a64 = Scalar(49) / 176, a65 = Scalar(-5103) / 18656;
  static constexpr Scalar b1 = Scalar(35) / 384, b3 = Scalar(500) / 1113, b4 = Scalar(125) / 192,
                          b5 = Scalar(-2187) / 6784, b6 = Scalar(11) / 84;
  static constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695, e4 = Scalar(71) / 1920,
                          e5 = Scalar(-17253) / 339200, e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;
};

/// Classical fixed-step RK4. Kept separate from the adaptive pair so the
/// two can serve as independent routes in tests.
template <typename Scalar, int N, typename Rhs>
Eigen::Matrix<Scalar, N, 1> rk4_step(Rhs& rhs, Scalar t, const Eigen::Matrix<Scalar, N, 1>& u, Scalar h) {
  using State = Eigen::Matrix<Scalar, N, 1>;
  const State k1 = rhs(t, u);
  const State k2 = rhs(t + h / 2, State(u + h / 2 * k1));
  const State k3 = rhs(t + h / 2, State(u + h / 2 * k2));
  const State k4 = rhs(t + h, State(u + h * k3));
  return u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

}  // namespace tpp::ode
