#include "dtof/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dtof/lmu.hpp"
#include "dtof/rng.hpp"

namespace dtof {

void NetworkConfig::validate() const {
  if (enc_per_channel < 1) throw DomainError("network: enc_per_channel must be >= 1");
  if (n_hidden < 1) throw DomainError("network: n_hidden must be >= 1");
  if (memory_order < 1) throw DomainError("network: memory_order must be >= 1");
  if (!(dt_net_ps > 0)) throw DomainError("network: dt_net_ps must be > 0");
  if (!(cycle_window_ps > 0)) throw DomainError("network: cycle_window_ps must be > 0");
  if (!(theta_steps > 0)) throw DomainError("network: theta_steps must be > 0");
  for (const double tau : {tau_rc, tau_ref, tau_in_sst, tau_in_trig, tau_h, tau_dec}) {
    if (!(tau > 0)) throw DomainError("network: time constants must be > 0");
  }
  if (!(soft_sigma > 0)) throw DomainError("network: soft_sigma must be > 0");
}

std::size_t NetworkParams::trainable_count() const {
  return static_cast<std::size_t>(enc_w.size() + e_x.size() + e_h.size() + e_m.size() +
                                  w_x.size() + w_h.size() + w_m.size() + w_dec.size()) +
         1; // b_dec
}

double NetworkParams::depth_scale_m() const { return tof_to_depth_m(cfg.cycle_window_ps); }

void NetworkParams::validate() const {
  cfg.validate();
  const auto n2 = static_cast<Eigen::Index>(cfg.encoders_total());
  const auto nh = static_cast<Eigen::Index>(cfg.n_hidden);
  const auto d = static_cast<Eigen::Index>(cfg.memory_order);
  if (enc_gain.size() != n2 || enc_bias.size() != n2 || enc_w.size() != n2 || e_x.size() != n2 ||
      hid_gain.size() != nh || hid_bias.size() != nh || e_h.size() != nh || e_m.size() != d ||
      w_x.rows() != nh || w_x.cols() != n2 || w_h.rows() != nh || w_h.cols() != nh ||
      w_m.rows() != nh || w_m.cols() != d || w_dec.size() != nh || a_bar.rows() != d ||
      a_bar.cols() != d || b_bar.size() != d) {
    throw ContractViolation("network: parameter dimensions inconsistent");
  }
}

namespace {

// Current that produces a target steady-state rate (inverse of lif_rate).
double current_for_rate(double rate, double tau_rc, double tau_ref) {
  if (!(rate > 0) || !(rate < 1.0 / tau_ref)) {
    throw DomainError("network: max rate must be in (0, 1/tau_ref)");
  }
  return 1.0 + 1.0 / std::expm1((1.0 / rate - tau_ref) / tau_rc);
}

// Solve gain/bias so that J = 1 at drive = intercept and rate = max_rate at
// drive = 1.
void solve_gain_bias(double intercept, double max_rate, double tau_rc, double tau_ref,
                     double& gain, double& bias) {
  const double j_max = current_for_rate(max_rate, tau_rc, tau_ref);
  gain = (j_max - 1.0) / (1.0 - intercept);
  bias = 1.0 - gain * intercept;
}

} // namespace

NetworkParams init_network(NetworkConfig cfg, const SensorConfig& sensor, std::uint64_t seed) {
  cfg.dt_net_ps = static_cast<double>(sensor.sst_clock_period_ps);
  cfg.cycle_window_ps = static_cast<double>(sensor.cycle_window_ps);
  cfg.validate();

  NetworkParams p;
  p.cfg = cfg;
  p.mode = RunMode::rate;

  const auto n2 = static_cast<Eigen::Index>(cfg.encoders_total());
  const auto nh = static_cast<Eigen::Index>(cfg.n_hidden);
  const auto d = static_cast<Eigen::Index>(cfg.memory_order);

  Rng rng(seed);
  const auto draw_population = [&](Eigen::VectorXd& gain, Eigen::VectorXd& bias,
                                   Eigen::Index n) {
    gain.resize(n);
    bias.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double intercept = -0.9 + 1.8 * rng.uniform();
      const double max_rate = 0.1 + 0.2 * rng.uniform();
      solve_gain_bias(intercept, max_rate, cfg.tau_rc, cfg.tau_ref, gain[i], bias[i]);
    }
  };
  draw_population(p.enc_gain, p.enc_bias, n2);
  draw_population(p.hid_gain, p.hid_bias, nh);

  p.enc_w.resize(n2);
  for (Eigen::Index i = 0; i < n2; ++i) p.enc_w[i] = (i % 2 == 0) ? 1.0 : -1.0;

  const auto gauss_vector = [&](Eigen::Index n, double scale) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.gaussian();
    return v;
  };
  const auto gauss_matrix = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) { // row-major draw order
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.gaussian();
    }
    return m;
  };

  const double s_enc = 1.0 / std::sqrt(static_cast<double>(n2));
  p.e_x = gauss_vector(n2, s_enc);
  p.e_h = Eigen::VectorXd::Zero(nh);
  p.e_m = Eigen::VectorXd::Zero(d);
  p.w_x = gauss_matrix(nh, n2, s_enc);
  p.w_h = Eigen::MatrixXd::Zero(nh, nh);
  p.w_m = gauss_matrix(nh, d, 1.0 / std::sqrt(static_cast<double>(d)));
  p.w_dec = gauss_vector(nh, 1.0 / std::sqrt(static_cast<double>(nh)));
  p.b_dec = 0.5;

  auto [a_bar, b_bar] = legendre_matrices(static_cast<int>(cfg.memory_order), cfg.theta_steps,
                                          1.0 /* one network step */);
  p.a_bar = std::move(a_bar);
  p.b_bar = std::move(b_bar);
  p.validate();
  return p;
}

NetworkInput build_network_input(const ExposureRecord& rec, Combiner combiner,
                                 const NetworkConfig& cfg) {
  if (static_cast<double>(rec.sensor.sst_clock_period_ps) != cfg.dt_net_ps) {
    throw DomainError("network input: dt_net_ps must equal the SST clock period");
  }
  const Ps exposure_length = rec.exposure_length_ps();

  ClockedStream stream;
  switch (combiner) {
    case Combiner::level_sst:
      stream = combine_level_sst(rec.events, rec.sensor, exposure_length);
      break;
    case Combiner::edge_sst:
      stream = combine_edge_sst(rec.events, rec.sensor, exposure_length);
      break;
    case Combiner::adder_async:
      stream = sample_adder_levels(combine_adder(rec.events), rec.sensor, exposure_length);
      break;
  }

  NetworkInput in;
  const double norm = 1.0 / static_cast<double>(rec.sensor.spads_per_pixel);
  in.sst.resize(stream.values.size());
  for (std::size_t i = 0; i < stream.values.size(); ++i) {
    in.sst[i] = static_cast<float>(static_cast<double>(stream.values[i]) * norm);
  }
  in.trigger.assign(stream.values.size(), 0);
  const Ps clock = rec.sensor.sst_clock_period_ps;
  for (const Ps t : rec.trigger_times) {
    Ps idx = t >= 0 ? t / clock : -((-t + clock - 1) / clock); // floor division
    idx = std::clamp<Ps>(idx, 0, static_cast<Ps>(in.trigger.size()) - 1);
    in.trigger[static_cast<std::size_t>(idx)] = 1;
  }
  in.target_depth_m = rec.ground_truth_tof_ps >= 0 ? rec.scene.depth_m : -1.0;
  return in;
}

NetState make_state(const NetworkParams& params) {
  const auto n2 = static_cast<Eigen::Index>(params.cfg.encoders_total());
  const auto nh = static_cast<Eigen::Index>(params.cfg.n_hidden);
  const auto d = static_cast<Eigen::Index>(params.cfg.memory_order);
  NetState s;
  s.enc_act = Eigen::VectorXd::Zero(n2);
  s.enc_filt = Eigen::VectorXd::Zero(n2);
  s.hid_act = Eigen::VectorXd::Zero(nh);
  s.h_filt = Eigen::VectorXd::Zero(nh);
  s.d_filt = Eigen::VectorXd::Zero(nh);
  s.m = Eigen::VectorXd::Zero(d);
  s.enc_lif = LifState::zero(n2);
  s.hid_lif = LifState::zero(nh);
  s.alpha_s = std::exp(-1.0 / params.cfg.tau_in_sst);
  s.alpha_g = std::exp(-1.0 / params.cfg.tau_in_trig);
  s.alpha_h = std::exp(-1.0 / params.cfg.tau_h);
  s.alpha_d = std::exp(-1.0 / params.cfg.tau_dec);
  s.enc_params = LifParams{params.cfg.tau_rc, params.cfg.tau_ref, params.enc_gain,
                           params.enc_bias};
  s.hid_params = LifParams{params.cfg.tau_rc, params.cfg.tau_ref, params.hid_gain,
                           params.hid_bias};
  s.drive = Eigen::VectorXd::Zero(n2);
  s.c = Eigen::VectorXd::Zero(nh);
  s.m_next = Eigen::VectorXd::Zero(d);
  s.j_enc = Eigen::ArrayXd::Zero(n2);
  s.j_hid = Eigen::ArrayXd::Zero(nh);
  s.r_buf = Eigen::ArrayXd::Zero(n2);
  return s;
}

void net_step(const NetworkParams& params, double s, double g, NetState& st) {
  const NetworkConfig& cfg = params.cfg;
  const auto n = static_cast<Eigen::Index>(cfg.enc_per_channel);

  st.p = st.alpha_s * st.p + (1.0 - st.alpha_s) * s;
  st.q = st.alpha_g * st.q + g;

  // Encoder drive: per-neuron weight on its channel's filtered scalar.
  st.drive.head(n) = params.enc_w.head(n) * st.p;
  st.drive.tail(n) = params.enc_w.tail(n) * st.q;

  if (params.mode == RunMode::spiking) {
    lif_step(st.enc_lif, st.enc_params, st.drive, 1.0, st.enc_act);
  } else {
    st.j_enc = st.enc_params.gain.array() * st.drive.array() + st.enc_params.bias.array();
    lif_rates_from_current(st.j_enc, cfg.tau_rc, cfg.tau_ref, st.r_buf);
    st.enc_act = st.r_buf.matrix();
  }
  st.enc_filt = st.alpha_h * st.enc_filt + (1.0 - st.alpha_h) * st.enc_act;

  // u_t from the filtered encoder vector and the previous h/m.
  const double u = params.e_x.dot(st.enc_filt) + params.e_h.dot(st.h_filt) +
                   params.e_m.dot(st.m);
  st.m_next.noalias() = params.a_bar * st.m;
  st.m_next += params.b_bar * u;
  st.m.swap(st.m_next);

  st.c.noalias() = params.w_x * st.enc_filt;
  st.c.noalias() += params.w_h * st.h_filt;
  st.c.noalias() += params.w_m * st.m;
  if (params.mode == RunMode::spiking) {
    lif_step(st.hid_lif, st.hid_params, st.c, 1.0, st.hid_act);
  } else {
    st.j_hid = st.hid_params.gain.array() * st.c.array() + st.hid_params.bias.array();
    st.hid_act.array() = (st.j_hid > 1.0).select(
        (cfg.tau_rc * (st.j_hid.max(1.0).log() - (st.j_hid - 1.0).max(0.0).log()) + cfg.tau_ref)
            .inverse(),
        0.0);
  }
  st.h_filt = st.alpha_h * st.h_filt + (1.0 - st.alpha_h) * st.hid_act;
  st.d_filt = st.alpha_d * st.d_filt + (1.0 - st.alpha_d) * st.hid_act;
}

double net_readout(const NetworkParams& params, const NetState& state) {
  return params.w_dec.dot(state.d_filt) + params.b_dec;
}

InferResult infer_exposure(const NetworkInput& input, const NetworkParams& params) {
  params.validate();
  if (input.sst.size() != input.trigger.size() || input.sst.empty()) {
    throw ContractViolation("infer_exposure: malformed input");
  }
  NetState st = make_state(params);
  double expected_neural = 0.0;
  double expected_synaptic = 0.0;
  SpikeCounters counters;
  const std::uint64_t enc_fan = encoder_fan_out(params.cfg);
  const std::uint64_t hid_fan = hidden_fan_out(params.cfg);

  for (std::size_t t = 0; t < input.sst.size(); ++t) {
    net_step(params, static_cast<double>(input.sst[t]),
             static_cast<double>(input.trigger[t]), st);
    if (params.mode == RunMode::spiking) {
      std::uint64_t enc_spikes = 0;
      for (Eigen::Index i = 0; i < st.enc_act.size(); ++i) {
        if (st.enc_act[i] != 0.0) ++enc_spikes;
      }
      std::uint64_t hid_spikes = 0;
      for (Eigen::Index i = 0; i < st.hid_act.size(); ++i) {
        if (st.hid_act[i] != 0.0) ++hid_spikes;
      }
      counters.neural += enc_spikes + hid_spikes;
      counters.synaptic += enc_spikes * enc_fan + hid_spikes * hid_fan;
    } else {
      expected_neural += st.enc_act.sum() + st.hid_act.sum();
      expected_synaptic += st.enc_act.sum() * static_cast<double>(enc_fan) +
                           st.hid_act.sum() * static_cast<double>(hid_fan);
    }
    if (!st.m.allFinite()) throw NumericError("infer_exposure: memory state diverged");
  }

  InferResult out;
  out.y_norm = net_readout(params, st);
  out.depth_m = out.y_norm * params.depth_scale_m();
  if (params.mode == RunMode::rate) {
    counters.neural = static_cast<std::uint64_t>(std::llround(expected_neural));
    counters.synaptic = static_cast<std::uint64_t>(std::llround(expected_synaptic));
  }
  out.counters = counters;
  return out;
}

InferResult infer_exposure_f32(const NetworkInput& input, const NetworkParams& params) {
  params.validate();
  if (input.sst.size() != input.trigger.size() || input.sst.empty()) {
    throw ContractViolation("infer_exposure_f32: malformed input");
  }
  const NetworkConfig& cfg = params.cfg;
  const auto n = static_cast<Eigen::Index>(cfg.enc_per_channel);
  const auto n2 = 2 * n;
  const auto nh = static_cast<Eigen::Index>(cfg.n_hidden);
  const bool spiking = params.mode == RunMode::spiking;

  const Eigen::MatrixXf a_bar = params.a_bar.cast<float>();
  const Eigen::VectorXf b_bar = params.b_bar.cast<float>();
  const Eigen::VectorXf enc_gain = params.enc_gain.cast<float>();
  const Eigen::VectorXf enc_bias = params.enc_bias.cast<float>();
  const Eigen::VectorXf hid_gain = params.hid_gain.cast<float>();
  const Eigen::VectorXf hid_bias = params.hid_bias.cast<float>();
  const Eigen::VectorXf enc_w = params.enc_w.cast<float>();
  const Eigen::VectorXf e_x = params.e_x.cast<float>();
  const Eigen::VectorXf e_h = params.e_h.cast<float>();
  const Eigen::VectorXf e_m = params.e_m.cast<float>();
  const Eigen::MatrixXf w_x = params.w_x.cast<float>();
  const Eigen::MatrixXf w_h = params.w_h.cast<float>();
  const Eigen::MatrixXf w_m = params.w_m.cast<float>();
  const Eigen::VectorXf w_dec = params.w_dec.cast<float>();
  const float trc = static_cast<float>(cfg.tau_rc);
  const float trf = static_cast<float>(cfg.tau_ref);
  const float as = std::exp(-1.0f / static_cast<float>(cfg.tau_in_sst));
  const float ag = std::exp(-1.0f / static_cast<float>(cfg.tau_in_trig));
  const float ah = std::exp(-1.0f / static_cast<float>(cfg.tau_h));
  const float ad = std::exp(-1.0f / static_cast<float>(cfg.tau_dec));

  float p = 0.0f, q = 0.0f;
  Eigen::VectorXf enc_act(n2), hid_act(nh);
  Eigen::VectorXf enc_filt = Eigen::VectorXf::Zero(n2);
  Eigen::VectorXf h_filt = Eigen::VectorXf::Zero(nh);
  Eigen::VectorXf d_filt = Eigen::VectorXf::Zero(nh);
  Eigen::VectorXf m = Eigen::VectorXf::Zero(cfg.memory_order);
  Eigen::VectorXf m_next(cfg.memory_order), c(nh), drive(n2);
  Eigen::VectorXf enc_v = Eigen::VectorXf::Zero(n2), enc_r = Eigen::VectorXf::Zero(n2);
  Eigen::VectorXf hid_v = Eigen::VectorXf::Zero(nh), hid_r = Eigen::VectorXf::Zero(nh);

  // single-neuron float LIF step (dt = 1), mirroring lif_step
  auto step_lif = [&](float J, float& v, float& refr) -> float {
    const float delta = std::clamp(1.0f - refr, 0.0f, 1.0f);
    v = J + (v - J) * std::exp(-delta / trc);
    refr = std::max(refr - 1.0f, 0.0f);
    float spike = 0.0f;
    if (v >= 1.0f) {
      spike = 1.0f;
      const float t_spike = J > 1.0f ? 1.0f + trc * std::log1p(-(v - 1.0f) / (J - 1.0f)) : 1.0f;
      refr = std::max(trf + t_spike - 1.0f, 0.0f);
      v = 0.0f;
    } else if (v < 0.0f) {
      v = 0.0f;
    }
    return spike;
  };
  auto rate_of = [&](float J) -> float {
    if (J <= 1.0f) return 0.0f;
    return 1.0f / (trf + trc * std::log1p(1.0f / (J - 1.0f)));
  };

  double expected_neural = 0.0, expected_synaptic = 0.0;
  SpikeCounters counters;
  const std::uint64_t enc_fan = encoder_fan_out(cfg);
  const std::uint64_t hid_fan = hidden_fan_out(cfg);

  for (std::size_t t = 0; t < input.sst.size(); ++t) {
    p = as * p + (1.0f - as) * input.sst[t];
    q = ag * q + static_cast<float>(input.trigger[t]);
    drive.head(n) = enc_w.head(n) * p;
    drive.tail(n) = enc_w.tail(n) * q;
    std::uint64_t enc_spikes = 0;
    for (Eigen::Index i = 0; i < n2; ++i) {
      const float J = enc_gain[i] * drive[i] + enc_bias[i];
      if (spiking) {
        enc_act[i] = step_lif(J, enc_v[i], enc_r[i]);
        if (enc_act[i] != 0.0f) ++enc_spikes;
      } else {
        enc_act[i] = rate_of(J);
      }
    }
    enc_filt = ah * enc_filt + (1.0f - ah) * enc_act;
    const float u = e_x.dot(enc_filt) + e_h.dot(h_filt) + e_m.dot(m);
    m_next.noalias() = a_bar * m;
    m_next += b_bar * u;
    m.swap(m_next);
    c.noalias() = w_x * enc_filt;
    c.noalias() += w_h * h_filt;
    c.noalias() += w_m * m;
    std::uint64_t hid_spikes = 0;
    for (Eigen::Index i = 0; i < nh; ++i) {
      const float J = hid_gain[i] * c[i] + hid_bias[i];
      if (spiking) {
        hid_act[i] = step_lif(J, hid_v[i], hid_r[i]);
        if (hid_act[i] != 0.0f) ++hid_spikes;
      } else {
        hid_act[i] = rate_of(J);
      }
    }
    h_filt = ah * h_filt + (1.0f - ah) * hid_act;
    d_filt = ad * d_filt + (1.0f - ad) * hid_act;
    if (spiking) {
      counters.neural += enc_spikes + hid_spikes;
      counters.synaptic += enc_spikes * enc_fan + hid_spikes * hid_fan;
    } else {
      const double ea = static_cast<double>(enc_act.sum());
      const double ha = static_cast<double>(hid_act.sum());
      expected_neural += ea + ha;
      expected_synaptic += ea * static_cast<double>(enc_fan) + ha * static_cast<double>(hid_fan);
    }
    if (!m.allFinite()) throw NumericError("infer_exposure_f32: memory state diverged");
  }

  InferResult out;
  out.y_norm = static_cast<double>(w_dec.dot(d_filt) + static_cast<float>(params.b_dec));
  out.depth_m = out.y_norm * params.depth_scale_m();
  if (!spiking) {
    counters.neural = static_cast<std::uint64_t>(std::llround(expected_neural));
    counters.synaptic = static_cast<std::uint64_t>(std::llround(expected_synaptic));
  }
  out.counters = counters;
  return out;
}

NetworkParams to_rate_mode(NetworkParams params) {
  params.mode = RunMode::rate;
  return params;
}

NetworkParams to_spiking_mode(NetworkParams params) {
  params.mode = RunMode::spiking;
  return params;
}

namespace {

constexpr char ckpt_magic[4] = {'S', 'N', 'C', 'P'};
constexpr std::uint32_t ckpt_version = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

void put_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f64(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_vector(std::ofstream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}
void put_matrix_rowmajor(std::ofstream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
  }
}

std::uint32_t get_u32(std::ifstream& in) {
  std::uint32_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("checkpoint: truncated");
  return v;
}
double get_f64(std::ifstream& in) {
  double v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("checkpoint: truncated");
  return v;
}
Eigen::VectorXd get_vector(std::ifstream& in, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = get_f64(in);
  return v;
}
Eigen::MatrixXd get_matrix_rowmajor(std::ifstream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get_f64(in);
  }
  return m;
}

} // namespace

void save_checkpoint(const std::filesystem::path& file, const NetworkParams& p) {
  p.validate();
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("checkpoint: cannot open " + file.string());
  out.write(ckpt_magic, sizeof(ckpt_magic));
  put_u32(out, ckpt_version);
  put_u32(out, static_cast<std::uint32_t>(p.mode));
  put_u32(out, p.cfg.enc_per_channel);
  put_u32(out, p.cfg.n_hidden);
  put_u32(out, p.cfg.memory_order);
  for (const double v : {p.cfg.dt_net_ps, p.cfg.cycle_window_ps, p.cfg.theta_steps, p.cfg.tau_rc,
                         p.cfg.tau_ref, p.cfg.tau_in_sst, p.cfg.tau_in_trig, p.cfg.tau_h,
                         p.cfg.tau_dec, p.cfg.soft_sigma}) {
    put_f64(out, v);
  }
  put_vector(out, p.enc_gain);
  put_vector(out, p.enc_bias);
  put_vector(out, p.enc_w);
  put_vector(out, p.e_x);
  put_vector(out, p.hid_gain);
  put_vector(out, p.hid_bias);
  put_vector(out, p.e_h);
  put_vector(out, p.e_m);
  put_matrix_rowmajor(out, p.w_x);
  put_matrix_rowmajor(out, p.w_h);
  put_matrix_rowmajor(out, p.w_m);
  put_vector(out, p.w_dec);
  put_f64(out, p.b_dec);
  put_matrix_rowmajor(out, p.a_bar);
  put_vector(out, p.b_bar);
  if (!out) throw DataError("checkpoint: write failed: " + file.string());
}

NetworkParams load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + file.string());
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, ckpt_magic, 4) != 0) {
    throw DataError("checkpoint: bad magic in " + file.string());
  }
  if (get_u32(in) != ckpt_version) throw DataError("checkpoint: unsupported version");

  NetworkParams p;
  const std::uint32_t mode = get_u32(in);
  if (mode > 1) throw DataError("checkpoint: bad mode");
  p.mode = static_cast<RunMode>(mode);
  p.cfg.enc_per_channel = get_u32(in);
  p.cfg.n_hidden = get_u32(in);
  p.cfg.memory_order = get_u32(in);
  p.cfg.dt_net_ps = get_f64(in);
  p.cfg.cycle_window_ps = get_f64(in);
  p.cfg.theta_steps = get_f64(in);
  p.cfg.tau_rc = get_f64(in);
  p.cfg.tau_ref = get_f64(in);
  p.cfg.tau_in_sst = get_f64(in);
  p.cfg.tau_in_trig = get_f64(in);
  p.cfg.tau_h = get_f64(in);
  p.cfg.tau_dec = get_f64(in);
  p.cfg.soft_sigma = get_f64(in);

  const auto n2 = static_cast<Eigen::Index>(p.cfg.encoders_total());
  const auto nh = static_cast<Eigen::Index>(p.cfg.n_hidden);
  const auto d = static_cast<Eigen::Index>(p.cfg.memory_order);
  p.enc_gain = get_vector(in, n2);
  p.enc_bias = get_vector(in, n2);
  p.enc_w = get_vector(in, n2);
  p.e_x = get_vector(in, n2);
  p.hid_gain = get_vector(in, nh);
  p.hid_bias = get_vector(in, nh);
  p.e_h = get_vector(in, nh);
  p.e_m = get_vector(in, d);
  p.w_x = get_matrix_rowmajor(in, nh, n2);
  p.w_h = get_matrix_rowmajor(in, nh, nh);
  p.w_m = get_matrix_rowmajor(in, nh, d);
  p.w_dec = get_vector(in, nh);
  p.b_dec = get_f64(in);
  p.a_bar = get_matrix_rowmajor(in, d, d);
  p.b_bar = get_vector(in, d);

  char extra;
  if (in.read(&extra, 1)) throw DataError("checkpoint: trailing bytes");
  p.validate();
  return p;
}

} // namespace dtof
