#pragma once

#include <Eigen/Dense>

#include "dtof/units.hpp"

namespace dtof {

// Leaky integrate-and-fire population. Times are in network steps (the
// caller's dt is the same unit), threshold normalized to 1, reset to 0.
// J = gain * drive + bias is the effective current per neuron.
struct LifParams {
  double tau_rc = 20.0;
  double tau_ref = 2.0;
  Eigen::VectorXd gain;
  Eigen::VectorXd bias;

  void validate() const;
};

struct LifState {
  Eigen::VectorXd voltage;    // in [0, 1]
  Eigen::VectorXd refractory; // time remaining from the current step start

  static LifState zero(Eigen::Index n) {
    return LifState{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  }
};

// One exact-integration step: voltage relaxes towards J over the
// non-refractory part of the step, threshold crossings are located
// sub-step so the refractory period is honored to machine precision.
// `spikes` gets 1 per spiking neuron (amplitude 1 per step).
void lif_step(LifState& state, const LifParams& params, const Eigen::VectorXd& drive, double dt,
              Eigen::VectorXd& spikes);

// Steady-state firing rate (spikes per step) for constant current J.
double lif_rate(double J, double tau_rc, double tau_ref);

// Softplus-smoothed rate: J - 1 is replaced by sigma*ln(1 + e^((J-1)/sigma)),
// which keeps the rate (and its derivative) nonzero below threshold and
// converges to lif_rate as sigma -> 0. Used as the training surrogate.
double soft_lif_rate(double J, double tau_rc, double tau_ref, double sigma);

// d soft_lif_rate / dJ
double soft_lif_rate_grad(double J, double tau_rc, double tau_ref, double sigma);

// Population helpers applying gain/bias to a drive vector.
Eigen::VectorXd lif_rates(const LifParams& params, const Eigen::VectorXd& drive);
Eigen::VectorXd soft_lif_rates(const LifParams& params, const Eigen::VectorXd& drive,
                               double sigma);

// Vectorized population evaluation on effective currents J (gain/bias already
// applied). These match the scalar functions to rounding; they exist because
// the scalar transcendental calls dominate the training forward pass.
void lif_rates_from_current(const Eigen::ArrayXd& j, double tau_rc, double tau_ref,
                            Eigen::ArrayXd& rate);
void soft_lif_rate_and_grad(const Eigen::ArrayXd& j, double tau_rc, double tau_ref,
                            double sigma, Eigen::ArrayXd& rate, Eigen::ArrayXd& grad);

} // namespace dtof
