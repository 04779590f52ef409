#include "dtof/lmu.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace dtof {

namespace {

void check_args(int d, double theta, double dt) {
  if (d < 1) throw DomainError("lmu: order d must be >= 1");
  if (!(theta > 0)) throw DomainError("lmu: theta must be > 0");
  if (dt < 0) throw DomainError("lmu: dt must be >= 0");
}

} // namespace

Eigen::MatrixXd legendre_continuous_a(int d, double theta) {
  check_args(d, theta, 0.0);
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i) {
    const double row = static_cast<double>(2 * i + 1) / theta;
    for (int j = 0; j < d; ++j) {
      const double sign = i < j ? -1.0 : ((i - j + 1) % 2 == 0 ? 1.0 : -1.0);
      a(i, j) = row * sign;
    }
  }
  return a;
}

Eigen::VectorXd legendre_continuous_b(int d, double theta) {
  check_args(d, theta, 0.0);
  Eigen::VectorXd b(d);
  for (int i = 0; i < d; ++i) {
    b[i] = static_cast<double>(2 * i + 1) * (i % 2 == 0 ? 1.0 : -1.0) / theta;
  }
  return b;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> legendre_matrices(int d, double theta, double dt) {
  check_args(d, theta, dt);
  if (!(dt > 0)) throw DomainError("lmu: dt must be > 0");
  const Eigen::MatrixXd a = legendre_continuous_a(d, theta);
  const Eigen::VectorXd b = legendre_continuous_b(d, theta);

  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(d + 1, d + 1);
  aug.topLeftCorner(d, d) = a * dt;
  aug.topRightCorner(d, 1) = b * dt;
  const Eigen::MatrixXd e = aug.exp();

  Eigen::MatrixXd a_bar = e.topLeftCorner(d, d);
  Eigen::VectorXd b_bar = e.topRightCorner(d, 1);
  if (!a_bar.allFinite() || !b_bar.allFinite()) {
    throw NumericError("lmu: discretization produced non-finite matrices");
  }
  return {std::move(a_bar), std::move(b_bar)};
}

Eigen::VectorXd delay_decoder_weights(int d, double r) {
  if (d < 1) throw DomainError("lmu: order d must be >= 1");
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("lmu: delay fraction must be in [0, 1]");
  // Shifted Legendre P~_n(r) = P_n(2r - 1) by the three-term recurrence.
  Eigen::VectorXd w(d);
  const double y = 2.0 * r - 1.0;
  double p_prev = 1.0;
  double p = y;
  w[0] = p_prev;
  if (d > 1) w[1] = p;
  for (int n = 2; n < d; ++n) {
    const double p_next =
        (static_cast<double>(2 * n - 1) * y * p - static_cast<double>(n - 1) * p_prev) /
        static_cast<double>(n);
    p_prev = p;
    p = p_next;
    w[n] = p;
  }
  return w;
}

} // namespace dtof
