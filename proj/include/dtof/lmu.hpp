#pragma once

#include <Eigen/Dense>
#include <utility>

#include "dtof/units.hpp"

namespace dtof {

// Continuous-time Legendre delay system of order d over a window theta:
//   a_ij = (2i+1)/theta * (-1 if i < j else (-1)^(i-j+1))
//   b_i  = (2i+1) (-1)^i / theta            (0-indexed)
Eigen::MatrixXd legendre_continuous_a(int d, double theta);
Eigen::VectorXd legendre_continuous_b(int d, double theta);

// Zero-order-hold discretization with step dt via the augmented matrix
// exponential exp([[A dt, B dt], [0, 0]]) = [[A_bar, B_bar], [0, 1]].
std::pair<Eigen::MatrixXd, Eigen::VectorXd> legendre_matrices(int d, double theta, double dt);

// Readout weights w with w . m(t) ~ u(t - theta_prime): shifted Legendre
// polynomials evaluated at r = theta_prime / theta in [0, 1].
Eigen::VectorXd delay_decoder_weights(int d, double r);

} // namespace dtof
