#include "dtof/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>

#include "dtof/histogram.hpp"
#include "dtof/lif.hpp"
#include "dtof/rng.hpp"

namespace dtof {

namespace {

// Strided worker loop; deterministic because workers never share output slots.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned k = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::thread> pool;
  pool.reserve(k);
  for (unsigned w = 0; w < k; ++w) {
    pool.emplace_back([&fn, w, k, n] {
      for (std::size_t i = w; i < n; i += k) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

void fisher_yates(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.uniform_below(i)]);
  }
}

} // namespace

void TrainConfig::validate(std::size_t manifest_entries) const {
  if (!(learning_rate > 0.0)) throw DomainError("train: learning rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw DomainError("train: beta1 must be in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw DomainError("train: beta2 must be in (0,1)");
  if (!(epsilon > 0.0)) throw DomainError("train: epsilon must be > 0");
  if (batch_size == 0) throw DomainError("train: batch size must be >= 1");
  if (epochs == 0) throw DomainError("train: epochs must be >= 1");
  if (n_train == 0) throw DomainError("train: need at least one training exposure");
  if (n_train + n_val != manifest_entries) {
    throw DomainError("train: split " + std::to_string(n_train) + "+" +
                      std::to_string(n_val) + " does not match the manifest's " +
                      std::to_string(manifest_entries) + " exposures");
  }
}

double logcosh_loss(double pred_m, double target_m) {
  if (!std::isfinite(pred_m) || !std::isfinite(target_m)) {
    throw NumericError("logcosh_loss: non-finite input");
  }
  const double e = std::abs(pred_m - target_m);
  // ln cosh e = e + ln((1 + exp(-2e))/2)
  return e + std::log1p(std::exp(-2.0 * e)) - std::numbers::ln2;
}

AdamState AdamState::zero(Eigen::Index n) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(n);
  s.v = Eigen::VectorXd::Zero(n);
  s.t = 0;
  return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const TrainConfig& config) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw ContractViolation("adam_step: shape mismatch");
  }
  state.t += 1;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grads;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grads.cwiseProduct(grads);
  const double mc = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double vc = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  params -= (config.learning_rate / mc) *
            (state.m.array() / ((state.v.array() / vc).sqrt() + config.epsilon)).matrix();
}

namespace {

template <typename FlatFn>
void for_each_trainable(NetworkParams& net, FlatFn&& fn) {
  Eigen::Index k = 0;
  auto vec = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) fn(k++, v[i]);
  };
  auto mat = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) fn(k++, m(r, c));
    }
  };
  vec(net.enc_w);
  vec(net.e_x);
  vec(net.e_h);
  vec(net.e_m);
  mat(net.w_x);
  mat(net.w_h);
  mat(net.w_m);
  vec(net.w_dec);
  fn(k++, net.b_dec);
}

} // namespace

Eigen::VectorXd pack_trainable(const NetworkParams& net) {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(net.trainable_count()));
  for_each_trainable(const_cast<NetworkParams&>(net),
                     [&](Eigen::Index k, double& v) { flat[k] = v; });
  return flat;
}

void unpack_trainable(const Eigen::VectorXd& flat, NetworkParams& net) {
  if (flat.size() != static_cast<Eigen::Index>(net.trainable_count())) {
    throw ContractViolation("unpack_trainable: size mismatch");
  }
  for_each_trainable(net, [&](Eigen::Index k, double& v) { v = flat[k]; });
}

namespace {

// One soft-rate forward pass; optionally tapes the quantities the adjoint
// walk needs from step `tape_start` on. Returns the terminal d_filt.
struct SoftForward {
  Eigen::MatrixXd pq;   // 2 x TT (post-update p, q)
  Eigen::MatrixXd ge;   // 2N x TT (surrogate gradient at the encoder)
  Eigen::MatrixXd f;    // 2N x TT (enc_filt, post)
  Eigen::MatrixXd mem;  // d x TT  (m, post)
  Eigen::MatrixXd h;    // nh x TT (h_filt, post)
  Eigen::MatrixXd gh;   // nh x TT (surrogate gradient at the hidden layer)
  Eigen::VectorXd m_pre, h_pre; // state entering the taped region
  Eigen::VectorXd d_final;
  std::size_t tape_start = 0;
};

void soft_forward(const NetworkInput& input, const NetworkParams& net,
                  std::size_t tape_start, bool tape, SoftForward& out) {
  const NetworkConfig& cfg = net.cfg;
  const auto N = static_cast<Eigen::Index>(cfg.enc_per_channel);
  const auto n2 = 2 * N;
  const auto nh = static_cast<Eigen::Index>(cfg.n_hidden);
  const auto d = static_cast<Eigen::Index>(cfg.memory_order);
  const std::size_t T = input.steps();
  const double as = std::exp(-1.0 / cfg.tau_in_sst);
  const double ag = std::exp(-1.0 / cfg.tau_in_trig);
  const double ah = std::exp(-1.0 / cfg.tau_h);
  const double ad = std::exp(-1.0 / cfg.tau_dec);
  const double sig = cfg.soft_sigma;

  out.tape_start = tape_start;
  if (tape) {
    const auto TT = static_cast<Eigen::Index>(T - tape_start);
    out.pq.resize(2, TT);
    out.ge.resize(n2, TT);
    out.f.resize(n2, TT);
    out.mem.resize(d, TT);
    out.h.resize(nh, TT);
    out.gh.resize(nh, TT);
  }

  double p = 0.0, q = 0.0;
  Eigen::VectorXd fv = Eigen::VectorXd::Zero(n2);
  Eigen::VectorXd hv = Eigen::VectorXd::Zero(nh);
  Eigen::VectorXd dv = Eigen::VectorXd::Zero(nh);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd c(nh), m_next(d);
  // hoisted per-neuron constants and transcendental workspaces
  const Eigen::ArrayXd gw = net.enc_gain.array() * net.enc_w.array();
  const Eigen::ArrayXd eb = net.enc_bias.array();
  Eigen::ArrayXd je(n2), a(n2), gcol(n2), xw(n2), zw(n2), dw(n2);
  Eigen::ArrayXd jh(nh), b(nh), ghc(nh), xh(nh), zh(nh), dh(nh);
  const double trc = cfg.tau_rc, trf = cfg.tau_ref;
  auto soft_pop = [&](const Eigen::ArrayXd& j, Eigen::ArrayXd& x, Eigen::ArrayXd& z,
                      Eigen::ArrayXd& den, Eigen::ArrayXd& rate, Eigen::ArrayXd& grad) {
    x = (j - 1.0) / sig;
    z = sig * (x.max(0.0) + (-x.abs()).exp().log1p());
    den = trf + trc * ((z + 1.0).log() - z.log());
    rate = (z > 0.0).select(den.inverse(), 0.0);
    grad = (z > 0.0).select(trc / ((1.0 + (-x).exp()) * z * (z + 1.0) * den * den), 0.0);
  };
  out.m_pre = m;
  out.h_pre = hv;

  for (std::size_t t = 0; t < T; ++t) {
    if (tape && t == tape_start) {
      out.m_pre = m;
      out.h_pre = hv;
    }
    p = as * p + (1.0 - as) * static_cast<double>(input.sst[t]);
    q = ag * q + static_cast<double>(input.trigger[t]);
    je.head(N) = gw.head(N) * p + eb.head(N);
    je.tail(N) = gw.tail(N) * q + eb.tail(N);
    soft_pop(je, xw, zw, dw, a, gcol);
    fv = ah * fv + (1.0 - ah) * a.matrix();
    const double u = net.e_x.dot(fv) + net.e_h.dot(hv) + net.e_m.dot(m);
    m_next.noalias() = net.a_bar * m;
    m_next += net.b_bar * u;
    m.swap(m_next);
    c.noalias() = net.w_x * fv;
    c.noalias() += net.w_h * hv;
    c.noalias() += net.w_m * m;
    jh = net.hid_gain.array() * c.array() + net.hid_bias.array();
    soft_pop(jh, xh, zh, dh, b, ghc);
    hv = ah * hv + (1.0 - ah) * b.matrix();
    dv = ad * dv + (1.0 - ad) * b.matrix();

    if (tape && t >= tape_start) {
      const auto col = static_cast<Eigen::Index>(t - tape_start);
      out.pq(0, col) = p;
      out.pq(1, col) = q;
      out.ge.col(col) = gcol.matrix();
      out.f.col(col) = fv;
      out.mem.col(col) = m;
      out.h.col(col) = hv;
      out.gh.col(col) = ghc.matrix();
    }
  }
  out.d_final = dv;
}

} // namespace

double soft_predict(const NetworkInput& input, const NetworkParams& net) {
  SoftForward fwd;
  soft_forward(input, net, input.steps(), false, fwd);
  const double y = net.w_dec.dot(fwd.d_final) + net.b_dec;
  return y * net.depth_scale_m();
}

double exposure_grad(const NetworkInput& input, const NetworkParams& net,
                     std::uint32_t truncation, Eigen::VectorXd& grad_out) {
  if (net.mode != RunMode::rate) throw DomainError("exposure_grad: rate mode required");
  if (input.target_depth_m < 0.0) throw DataError("exposure_grad: exposure lacks ground truth");
  const NetworkConfig& cfg = net.cfg;
  const auto N = static_cast<Eigen::Index>(cfg.enc_per_channel);
  const auto n2 = 2 * N;
  const auto nh = static_cast<Eigen::Index>(cfg.n_hidden);
  const std::size_t T = input.steps();
  if (T == 0) throw DataError("exposure_grad: empty input");
  const std::size_t tape_start =
      (truncation > 0 && truncation < T) ? T - truncation : 0;

  SoftForward fwd;
  soft_forward(input, net, tape_start, true, fwd);

  const double scale = net.depth_scale_m();
  const double y = net.w_dec.dot(fwd.d_final) + net.b_dec;
  const double pred = y * scale;
  const double err = pred - input.target_depth_m;
  const double loss = logcosh_loss(pred, input.target_depth_m);
  const double dy = std::tanh(err) * scale;

  const double as = std::exp(-1.0 / cfg.tau_in_sst);
  const double ag = std::exp(-1.0 / cfg.tau_in_trig);
  const double ah = std::exp(-1.0 / cfg.tau_h);
  const double ad = std::exp(-1.0 / cfg.tau_dec);

  // Gradient accumulators, one per trainable block.
  Eigen::VectorXd g_encw = Eigen::VectorXd::Zero(n2);
  Eigen::VectorXd g_ex = Eigen::VectorXd::Zero(n2);
  Eigen::VectorXd g_eh = Eigen::VectorXd::Zero(nh);
  Eigen::VectorXd g_em = Eigen::VectorXd::Zero(fwd.mem.rows());
  Eigen::MatrixXd g_wx = Eigen::MatrixXd::Zero(nh, n2);
  Eigen::MatrixXd g_wh = Eigen::MatrixXd::Zero(nh, nh);
  Eigen::MatrixXd g_wm = Eigen::MatrixXd::Zero(nh, fwd.mem.rows());
  Eigen::VectorXd g_wdec = dy * fwd.d_final;
  double g_bdec = dy;

  // Carried adjoints.
  double lam_p = 0.0, lam_q = 0.0;
  Eigen::VectorXd lam_f = Eigen::VectorXd::Zero(n2);
  Eigen::VectorXd lam_h = Eigen::VectorXd::Zero(nh);
  Eigen::VectorXd lam_d = dy * net.w_dec;
  Eigen::VectorXd lam_m = Eigen::VectorXd::Zero(fwd.mem.rows());

  Eigen::VectorXd db(nh), dc(nh), lam_h_next(nh), df(n2), dJe(n2), dx(n2),
      dm(fwd.mem.rows());

  for (Eigen::Index t = static_cast<Eigen::Index>(T - tape_start) - 1; t >= 0; --t) {
    const auto f_t = fwd.f.col(t);
    const auto m_t = fwd.mem.col(t);
    const Eigen::Ref<const Eigen::VectorXd> h_prev =
        t > 0 ? fwd.h.col(t - 1) : Eigen::Ref<const Eigen::VectorXd>(fwd.h_pre);
    const Eigen::Ref<const Eigen::VectorXd> m_prev =
        t > 0 ? fwd.mem.col(t - 1) : Eigen::Ref<const Eigen::VectorXd>(fwd.m_pre);
    const double p_t = fwd.pq(0, t);
    const double q_t = fwd.pq(1, t);

    // hidden activity: feeds h_filt and d_filt
    db = (1.0 - ah) * lam_h + (1.0 - ad) * lam_d;
    lam_h_next = ah * lam_h;
    lam_d *= ad;
    dc = db.cwiseProduct(fwd.gh.col(t)).cwiseProduct(net.hid_gain);

    g_wx.noalias() += dc * f_t.transpose();
    g_wh.noalias() += dc * h_prev.transpose();
    g_wm.noalias() += dc * m_t.transpose();
    df.noalias() = net.w_x.transpose() * dc;
    lam_h_next.noalias() += net.w_h.transpose() * dc;
    dm = lam_m;
    dm.noalias() += net.w_m.transpose() * dc;

    // memory update and its driving scalar u
    const double du = net.b_bar.dot(dm);
    g_ex.noalias() += du * f_t;
    g_eh.noalias() += du * h_prev;
    g_em.noalias() += du * m_prev;
    df.noalias() += du * net.e_x;
    lam_h_next.noalias() += du * net.e_h;
    lam_m.noalias() = net.a_bar.transpose() * dm;
    lam_m.noalias() += du * net.e_m;

    // encoder filter and neurons
    lam_f += df;
    dJe = (1.0 - ah) * lam_f.cwiseProduct(fwd.ge.col(t));
    lam_f *= ah;
    dx = dJe.cwiseProduct(net.enc_gain);
    g_encw.head(N).noalias() += p_t * dx.head(N);
    g_encw.tail(N).noalias() += q_t * dx.tail(N);
    const double dp = net.enc_w.head(N).dot(dx.head(N));
    const double dq = net.enc_w.tail(N).dot(dx.tail(N));
    lam_p = as * (lam_p + dp);
    lam_q = ag * (lam_q + dq);
    lam_h = lam_h_next;
  }

  grad_out.resize(static_cast<Eigen::Index>(net.trainable_count()));
  Eigen::Index k = 0;
  auto put_vec = [&](const Eigen::VectorXd& v) {
    grad_out.segment(k, v.size()) = v;
    k += v.size();
  };
  auto put_mat = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      grad_out.segment(k, m.cols()) = m.row(r).transpose();
      k += m.cols();
    }
  };
  put_vec(g_encw);
  put_vec(g_ex);
  put_vec(g_eh);
  put_vec(g_em);
  put_mat(g_wx);
  put_mat(g_wh);
  put_mat(g_wm);
  put_vec(g_wdec);
  grad_out[k++] = g_bdec;
  return loss;
}

TrainResult train(const DatasetManifest& manifest, const std::filesystem::path& manifest_dir,
                  const NetworkParams& init, const TrainConfig& config) {
  config.validate(manifest.entries.size());
  if (init.mode != RunMode::rate) throw DomainError("train: network must be in rate mode");
  init.validate();

  const auto records = load_all_exposures(manifest, manifest_dir);
  std::vector<NetworkInput> inputs(records.size());
  parallel_for(records.size(), config.workers, [&](std::size_t i) {
    inputs[i] = build_network_input(records[i], config.combiner, init.cfg);
  });

  NetworkParams net = init;
  Eigen::VectorXd flat = pack_trainable(net);
  AdamState adam = AdamState::zero(flat.size());

  const std::size_t n_train = config.n_train;
  const std::size_t n_val = config.n_val;
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.best = net;
  result.best_val_mae_m = std::numeric_limits<double>::infinity();
  result.best_epoch = 0;

  std::vector<Eigen::VectorXd> batch_grads;
  std::vector<double> batch_losses;

  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_stream_seed(config.seed, epoch));
    fisher_yates(order, shuffle_rng);

    double loss_sum = 0.0;
    std::size_t pos = 0;
    std::size_t step_in_epoch = 0;
    while (pos < n_train) {
      const std::size_t bs = std::min<std::size_t>(config.batch_size, n_train - pos);
      batch_grads.assign(bs, Eigen::VectorXd());
      batch_losses.assign(bs, 0.0);
      parallel_for(bs, config.workers, [&](std::size_t j) {
        const std::size_t idx = order[pos + j];
        batch_losses[j] =
            exposure_grad(inputs[idx], net, config.bptt_truncation, batch_grads[j]);
      });
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(flat.size());
      double batch_loss = 0.0;
      for (std::size_t j = 0; j < bs; ++j) { // fixed-order reduction
        grad += batch_grads[j];
        batch_loss += batch_losses[j];
      }
      grad /= static_cast<double>(bs);
      batch_loss /= static_cast<double>(bs);
      loss_sum += batch_loss * static_cast<double>(bs);
      ++step_in_epoch;
      if (!std::isfinite(batch_loss) || !grad.allFinite()) {
        throw NumericError("train: non-finite loss/gradient at epoch " +
                           std::to_string(epoch) + ", step " +
                           std::to_string(step_in_epoch));
      }
      adam_step(flat, grad, adam, config);
      unpack_trainable(flat, net);
      pos += bs;
    }
    const double train_loss = loss_sum / static_cast<double>(n_train);

    double val_mae = std::numeric_limits<double>::quiet_NaN();
    if (n_val > 0) {
      std::vector<double> abs_err(n_val);
      parallel_for(n_val, config.workers, [&](std::size_t j) {
        const std::size_t idx = records.size() - n_val + j;
        const InferResult r = infer_exposure(inputs[idx], net);
        abs_err[j] = std::abs(r.depth_m - inputs[idx].target_depth_m);
      });
      val_mae = std::accumulate(abs_err.begin(), abs_err.end(), 0.0) /
                static_cast<double>(n_val);
      if (val_mae < result.best_val_mae_m) {
        result.best_val_mae_m = val_mae;
        result.best = net;
        result.best_epoch = epoch;
      }
    } else {
      // No validation split: keep the most-trained weights.
      result.best = net;
      result.best_val_mae_m = train_loss;
      result.best_epoch = epoch;
    }

    const auto t1 = std::chrono::steady_clock::now();
    EpochLogRow row;
    row.epoch = epoch;
    row.train_loss = train_loss;
    row.val_mae_m = val_mae;
    row.wall_s = std::chrono::duration<double>(t1 - t0).count();
    result.log.push_back(row);
  }
  return result;
}

void write_training_log(const std::filesystem::path& file,
                        const std::vector<EpochLogRow>& log) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write training log: " + file.string());
  out << "epoch,train_loss,val_mae_m,wall_s\n";
  out.precision(10);
  for (const auto& row : log) {
    out << row.epoch << ',' << row.train_loss << ',' << row.val_mae_m << ','
        << row.wall_s << '\n';
  }
}

void EvalReport::validate() const {
  if (!(mae_m >= 0.0)) throw ContractViolation("EvalReport: MAE must be >= 0");
  if (!(frac_within_15cm >= 0.0 && frac_within_15cm <= 1.0)) {
    throw ContractViolation("EvalReport: fraction out of [0,1]");
  }
}

EvalReport evaluate_sets(const std::vector<std::filesystem::path>& manifest_files,
                         const DepthPredictor& predict, unsigned workers) {
  if (manifest_files.empty()) throw DomainError("evaluate: no test sets given");
  EvalReport rep;
  double abs_sum = 0.0;
  std::uint64_t n_total = 0, n_within = 0;
  for (const auto& file : manifest_files) {
    const DatasetManifest manifest = load_manifest(file);
    const auto records = load_all_exposures(manifest, file.parent_path());
    if (records.empty()) throw DataError("evaluate: empty test set " + file.string());
    std::vector<double> preds(records.size());
    parallel_for(records.size(), workers,
                 [&](std::size_t i) { preds[i] = predict(records[i]); });
    double set_abs = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const double truth = records[i].scene.depth_m;
      const double err = std::abs(preds[i] - truth);
      set_abs += err;
      abs_sum += err;
      ++n_total;
      if (err <= 0.15) ++n_within;
      rep.scatter.push_back({truth, preds[i], records[i].scene.reflectivity,
                             records[i].scene.ambient_klux});
    }
    TestSetResult set;
    set.label = file.parent_path().filename().string();
    set.reflectivity = manifest.spec.test_reflectivity;
    set.ambient_klux = manifest.spec.test_ambient_klux;
    set.mae_m = set_abs / static_cast<double>(records.size());
    set.exposures = records.size();
    rep.per_set.push_back(set);
  }
  rep.mae_m = abs_sum / static_cast<double>(n_total);
  rep.frac_within_15cm =
      static_cast<double>(n_within) / static_cast<double>(n_total);
  if (rep.per_set.size() > 1) {
    double mean = 0.0;
    for (const auto& s : rep.per_set) mean += s.mae_m;
    mean /= static_cast<double>(rep.per_set.size());
    double var = 0.0;
    for (const auto& s : rep.per_set) var += (s.mae_m - mean) * (s.mae_m - mean);
    rep.mae_std_m = std::sqrt(var / static_cast<double>(rep.per_set.size() - 1));
  }
  rep.validate();
  return rep;
}

EvalReport evaluate(const std::vector<std::filesystem::path>& manifest_files,
                    const NetworkParams& net, RunMode mode, Combiner combiner,
                    unsigned workers) {
  NetworkParams run = mode == RunMode::spiking ? to_spiking_mode(net) : to_rate_mode(net);
  auto predict = [&run, combiner](const ExposureRecord& rec) {
    const NetworkInput input = build_network_input(rec, combiner, run.cfg);
    return infer_exposure(input, run).depth_m;
  };
  return evaluate_sets(manifest_files, predict, workers);
}

EvalReport evaluate_com(const std::vector<std::filesystem::path>& manifest_files,
                        std::size_t window_halfwidth, unsigned workers) {
  auto predict = [window_halfwidth](const ExposureRecord& rec) {
    const Histogram hist = accumulate_histogram(rec, rec.sensor);
    return com_depth(hist, window_halfwidth).depth_estimate_m;
  };
  return evaluate_sets(manifest_files, predict, workers);
}

void write_eval_report(const std::filesystem::path& report_csv,
                       const std::filesystem::path& scatter_csv,
                       const EvalReport& report) {
  {
    std::ofstream out(report_csv);
    if (!out) throw DataError("cannot write eval report: " + report_csv.string());
    out.precision(10);
    out << "set,reflectivity,ambient_klux,exposures,mae_m,mae_std_m,frac_within_15cm\n";
    out << "all,,," << std::accumulate(report.per_set.begin(), report.per_set.end(),
                                       std::uint64_t{0},
                                       [](std::uint64_t acc, const TestSetResult& s) {
                                         return acc + s.exposures;
                                       })
        << ',' << report.mae_m << ',' << report.mae_std_m << ','
        << report.frac_within_15cm << '\n';
    for (const auto& s : report.per_set) {
      out << s.label << ',' << s.reflectivity << ',' << s.ambient_klux << ','
          << s.exposures << ',' << s.mae_m << ",,\n";
    }
  }
  {
    std::ofstream out(scatter_csv);
    if (!out) throw DataError("cannot write scatter file: " + scatter_csv.string());
    out.precision(10);
    out << "truth_m,pred_m,reflectivity,ambient_klux\n";
    for (const auto& p : report.scatter) {
      out << p.truth_m << ',' << p.pred_m << ',' << p.reflectivity << ','
          << p.ambient_klux << '\n';
    }
  }
}

} // namespace dtof
