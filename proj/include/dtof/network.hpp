#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dtof/combine.hpp"
#include "dtof/config.hpp"
#include "dtof/event_sim.hpp"
#include "dtof/lif.hpp"
#include "dtof/units.hpp"

namespace dtof {

enum class RunMode : std::uint32_t { rate = 0, spiking = 1 };

// Architecture hyperparameters. Time constants are in network steps; one
// step covers dt_net_ps of signal (default: the SST clock period).
struct NetworkConfig {
  std::uint32_t enc_per_channel = 64; // LIF neurons per input channel
  std::uint32_t n_hidden = 4;
  std::uint32_t memory_order = 56;
  double dt_net_ps = 500.0;
  double cycle_window_ps = 86000.0; // output normalization span
  double theta_steps = 7740.0;      // LMU window (full exposure by default)
  double tau_rc = 20.0;
  double tau_ref = 2.0;
  double tau_in_sst = 4.0;    // input low-pass, photon-count channel (DC gain 1)
  double tau_in_trig = 172.0; // trigger decay (unit impulse response)
  double tau_h = 10.0;        // synapse on spiking outputs feeding recurrence
  double tau_dec = 10.0;      // synapse feeding the readout
  double soft_sigma = 0.1;    // training-surrogate smoothing

  std::uint32_t encoders_total() const { return 2 * enc_per_channel; }
  void validate() const;
};

struct NetworkParams {
  NetworkConfig cfg;
  RunMode mode = RunMode::rate;

  // Fixed after init
  Eigen::VectorXd enc_gain, enc_bias; // 2N (sst population first, then trigger)
  Eigen::VectorXd hid_gain, hid_bias; // n_h
  Eigen::MatrixXd a_bar;              // d x d
  Eigen::VectorXd b_bar;              // d

  // Trainable
  Eigen::VectorXd enc_w; // 2N, per-neuron weight on its scalar input channel
  Eigen::VectorXd e_x;   // 2N
  Eigen::VectorXd e_h;   // n_h
  Eigen::VectorXd e_m;   // d
  Eigen::MatrixXd w_x;   // n_h x 2N
  Eigen::MatrixXd w_h;   // n_h x n_h
  Eigen::MatrixXd w_m;   // n_h x d
  Eigen::VectorXd w_dec; // n_h
  double b_dec = 0.0;

  std::size_t trainable_count() const;
  std::size_t lmu_state_count() const { return cfg.n_hidden + cfg.memory_order; }
  double depth_scale_m() const; // meters spanned by normalized output 1.0
  void validate() const;
};

// Spike fan-outs used for synaptic-event counting: every neural spike is
// counted once per outgoing connection.
inline std::uint64_t encoder_fan_out(const NetworkConfig& cfg) { return 1 + cfg.n_hidden; }
inline std::uint64_t hidden_fan_out(const NetworkConfig& cfg) { return cfg.n_hidden + 2; }

// Random NEF-style initialization (intercepts, max rates, solved gain/bias,
// small random trainable weights); deterministic in seed. dt/cycle window
// are taken from the sensor and must agree with cfg's SST clocking.
NetworkParams init_network(NetworkConfig cfg, const SensorConfig& sensor, std::uint64_t seed);

// Per-exposure network input: one normalized combined-SPAD sample and one
// trigger impulse flag per step.
struct NetworkInput {
  std::vector<float> sst; // combined value / spads_per_pixel
  std::vector<std::uint8_t> trigger;
  double target_depth_m = -1.0; // < 0 when unknown

  std::size_t steps() const { return sst.size(); }
};

NetworkInput build_network_input(const ExposureRecord& rec, Combiner combiner,
                                 const NetworkConfig& cfg);

// Mutable per-inference state (plus cached per-run constants and scratch
// buffers so stepping does not allocate).
struct NetState {
  double p = 0.0; // filtered sst channel
  double q = 0.0; // filtered trigger channel
  Eigen::VectorXd enc_act;  // last encoder activity (rate or spikes)
  Eigen::VectorXd enc_filt; // synapse-filtered encoder activity (= x_t of the cell)
  Eigen::VectorXd hid_act;
  Eigen::VectorXd h_filt; // filtered hidden activity (= h_t)
  Eigen::VectorXd d_filt; // decoder synapse state
  Eigen::VectorXd m;      // memory state
  LifState enc_lif, hid_lif;

  // cached at make_state()
  double alpha_s = 0.0, alpha_g = 0.0, alpha_h = 0.0, alpha_d = 0.0;
  LifParams enc_params, hid_params;
  Eigen::VectorXd drive, c, m_next;     // scratch
  Eigen::ArrayXd j_enc, j_hid, r_buf;   // rate-mode scratch
};

NetState make_state(const NetworkParams& params);

// Advances one step given the raw inputs (s = combined sample / n_spads,
// g = trigger impulse). Activities are LIF rates in rate mode and unit
// spikes in spiking mode; enc_act/hid_act expose them for spike counting.
void net_step(const NetworkParams& params, double s, double g, NetState& state);

// Filtered readout of the current state.
double net_readout(const NetworkParams& params, const NetState& state);

struct SpikeCounters {
  std::uint64_t neural = 0;
  std::uint64_t synaptic = 0;
};

struct InferResult {
  double depth_m = 0.0;
  double y_norm = 0.0; // raw readout before depth scaling
  SpikeCounters counters;
};

// Steps the network over the exposure and reads the decoder output at the
// final step. Spiking mode tallies every neural spike plus spike x fan-out
// synaptic events; rate mode reports the accumulated expected counts,
// rounded.
InferResult infer_exposure(const NetworkInput& input, const NetworkParams& params);

// 32-bit fast path: identical dynamics with all state and weights in float.
// Held to the same invariants as the reference path at 4x tolerances.
InferResult infer_exposure_f32(const NetworkInput& input, const NetworkParams& params);

// Mode views: identical weights, only the nonlinearity changes.
NetworkParams to_rate_mode(NetworkParams params);
NetworkParams to_spiking_mode(NetworkParams params);

// Versioned binary checkpoint; byte-exact round trip.
void save_checkpoint(const std::filesystem::path& file, const NetworkParams& params);
NetworkParams load_checkpoint(const std::filesystem::path& file);

} // namespace dtof
