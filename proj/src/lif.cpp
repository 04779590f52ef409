#include "dtof/lif.hpp"

#include <algorithm>
#include <cmath>

namespace dtof {

void LifParams::validate() const {
  if (!(tau_rc > 0) || !(tau_ref > 0)) throw DomainError("lif: tau_rc and tau_ref must be > 0");
  if (gain.size() != bias.size()) throw ContractViolation("lif: gain/bias size mismatch");
  if ((gain.array() <= 0).any()) throw DomainError("lif: gains must be > 0");
}

void lif_step(LifState& state, const LifParams& params, const Eigen::VectorXd& drive, double dt,
              Eigen::VectorXd& spikes) {
  const Eigen::Index n = params.gain.size();
  if (drive.size() != n || state.voltage.size() != n || state.refractory.size() != n) {
    throw ContractViolation("lif_step: dimension mismatch");
  }
  if (dt < 0) throw DomainError("lif_step: dt must be >= 0");
  spikes.setZero(n);
  if (dt == 0) return;

  for (Eigen::Index i = 0; i < n; ++i) {
    const double J = params.gain[i] * drive[i] + params.bias[i];
    const double delta = std::clamp(dt - state.refractory[i], 0.0, dt);
    double v = J + (state.voltage[i] - J) * std::exp(-delta / params.tau_rc);
    double refr = std::max(state.refractory[i] - dt, 0.0);
    if (v >= 1.0) {
      spikes[i] = 1.0;
      // Sub-step crossing time from the step start; the new refractory
      // window starts there, not at the step boundary.
      const double t_spike =
          J > 1.0 ? dt + params.tau_rc * std::log1p(-(v - 1.0) / (J - 1.0)) : dt;
      refr = std::max(params.tau_ref + t_spike - dt, 0.0);
      v = 0.0;
    } else if (v < 0.0) {
      v = 0.0;
    }
    state.voltage[i] = v;
    state.refractory[i] = refr;
  }
}

double lif_rate(double J, double tau_rc, double tau_ref) {
  if (J <= 1.0) return 0.0;
  return 1.0 / (tau_ref + tau_rc * std::log1p(1.0 / (J - 1.0)));
}

namespace {

// sigma * softplus((J - 1) / sigma), computed on the stable branch.
double smoothed_excess(double J, double sigma) {
  const double x = (J - 1.0) / sigma;
  if (x > 30.0) return sigma * x;
  return sigma * std::log1p(std::exp(x));
}

} // namespace

double soft_lif_rate(double J, double tau_rc, double tau_ref, double sigma) {
  const double z = smoothed_excess(J, sigma);
  if (z <= 0.0) return 0.0; // underflow: indistinguishable from silent
  // log1p(1/z) expanded as log(z+1) - log(z): 1/z overflows for subnormal z
  // while the expansion keeps the (finite) deep-tail rate
  return 1.0 / (tau_ref + tau_rc * (std::log(z + 1.0) - std::log(z)));
}

double soft_lif_rate_grad(double J, double tau_rc, double tau_ref, double sigma) {
  const double z = smoothed_excess(J, sigma);
  if (z <= 0.0) return 0.0;
  const double denom = tau_ref + tau_rc * (std::log(z + 1.0) - std::log(z));
  const double x = (J - 1.0) / sigma;
  const double dz = x > 30.0 ? 1.0 : 1.0 / (1.0 + std::exp(-x)); // logistic
  // d/dz log1p(1/z) = -1 / (z (z + 1))
  return tau_rc * dz / (z * (z + 1.0) * denom * denom);
}

Eigen::VectorXd lif_rates(const LifParams& params, const Eigen::VectorXd& drive) {
  const Eigen::Index n = params.gain.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = lif_rate(params.gain[i] * drive[i] + params.bias[i], params.tau_rc, params.tau_ref);
  }
  return out;
}

Eigen::VectorXd soft_lif_rates(const LifParams& params, const Eigen::VectorXd& drive,
                               double sigma) {
  const Eigen::Index n = params.gain.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = soft_lif_rate(params.gain[i] * drive[i] + params.bias[i], params.tau_rc,
                           params.tau_ref, sigma);
  }
  return out;
}

void lif_rates_from_current(const Eigen::ArrayXd& j, double tau_rc, double tau_ref,
                            Eigen::ArrayXd& rate) {
  // 1/(tau_ref + tau_rc*log1p(1/(J-1))) above threshold, 0 below. log1p is
  // expanded as log(J) - log(J-1); where that cancels (large J) the log term
  // is negligible against tau_ref, so the rate keeps full relative precision.
  rate = (j > 1.0).select(
      (tau_ref + tau_rc * (j.max(1.0).log() - (j - 1.0).max(0.0).log())).inverse(), 0.0);
}

void soft_lif_rate_and_grad(const Eigen::ArrayXd& j, double tau_rc, double tau_ref, double sigma,
                            Eigen::ArrayXd& rate, Eigen::ArrayXd& grad) {
  const Eigen::ArrayXd x = (j - 1.0) / sigma;
  // overflow-safe softplus: max(x,0) + log1p(e^-|x|); the log1p keeps the
  // subthreshold tail alive down to exp underflow, matching the scalar path
  const Eigen::ArrayXd z = sigma * (x.max(0.0) + (-x.abs()).exp().log1p());
  const Eigen::ArrayXd denom = tau_ref + tau_rc * ((z + 1.0).log() - z.log());
  const Eigen::ArrayXd dz = (1.0 + (-x).exp()).inverse(); // logistic(x)
  rate = (z > 0.0).select(denom.inverse(), 0.0);
  grad = (z > 0.0).select(tau_rc * dz / (z * (z + 1.0) * denom * denom), 0.0);
}

} // namespace dtof
