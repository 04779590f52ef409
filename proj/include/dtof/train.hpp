#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dtof/dataset.hpp"
#include "dtof/network.hpp"

namespace dtof {

struct TrainConfig {
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint32_t batch_size = 32;
  std::uint32_t epochs = 20;
  std::uint32_t bptt_truncation = 0; // backward steps from the end; 0 = full unroll
  std::uint64_t seed = 1;
  std::uint64_t n_train = 0; // leading manifest entries
  std::uint64_t n_val = 0;   // trailing manifest entries
  unsigned workers = 1;      // batch-parallel gradients, fixed-order reduction
  Combiner combiner = Combiner::level_sst;

  void validate(std::size_t manifest_entries) const;
};

// ln cosh(pred - target), stable for large |error|.
double logcosh_loss(double pred_m, double target_m);

struct AdamState {
  Eigen::VectorXd m, v; // first/second moment estimates
  std::uint64_t t = 0;  // completed steps

  static AdamState zero(Eigen::Index n);
};

// One bias-corrected Adam update in place. Shapes must match.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const TrainConfig& config);

// Flat view of the trainable parameters, packing order:
// enc_w, e_x, e_h, e_m, w_x (row-major), w_h, w_m, w_dec, b_dec.
Eigen::VectorXd pack_trainable(const NetworkParams& net);
void unpack_trainable(const Eigen::VectorXd& flat, NetworkParams& net);

// Loss and flat gradient for one exposure: forward through the soft-rate
// network (smoothed LIF surrogate), terminal LogCosh loss in meters, full
// adjoint BPTT backward. `truncation` > 0 stops the backward walk that many
// steps from the end. grad_out is overwritten (sized to trainable count).
double exposure_grad(const NetworkInput& input, const NetworkParams& net,
                     std::uint32_t truncation, Eigen::VectorXd& grad_out);

// Forward-only prediction with the same soft-rate surrogate (training-side
// view of the network; evaluation uses infer_exposure instead).
double soft_predict(const NetworkInput& input, const NetworkParams& net);

struct EpochLogRow {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double val_mae_m = 0.0;
  double wall_s = 0.0; // informational only; excluded from determinism claims
};

struct TrainResult {
  NetworkParams best; // lowest validation MAE seen
  std::vector<EpochLogRow> log;
  double best_val_mae_m = 0.0;
  std::uint32_t best_epoch = 0;
};

// Rate-mode BPTT training over the manifest's exposures: the first n_train
// entries train, the last n_val validate. Deterministic in (seed, data);
// independent of `workers` because per-exposure gradients are reduced in
// index order.
TrainResult train(const DatasetManifest& manifest, const std::filesystem::path& manifest_dir,
                  const NetworkParams& init, const TrainConfig& config);

// CSV: epoch,train_loss,val_mae_m,wall_s
void write_training_log(const std::filesystem::path& file,
                        const std::vector<EpochLogRow>& log);

struct TestSetResult {
  std::string label;
  double reflectivity = 0.0;
  double ambient_klux = 0.0;
  double mae_m = 0.0;
  std::uint64_t exposures = 0;
};

struct ScatterPoint {
  double truth_m = 0.0;
  double pred_m = 0.0;
  double reflectivity = 0.0;
  double ambient_klux = 0.0;
};

struct EvalReport {
  double mae_m = 0.0;            // over every exposure in every set
  double mae_std_m = 0.0;        // sample std of the per-set MAEs (0 if one set)
  double frac_within_15cm = 0.0; // |err| <= 0.15 m
  std::vector<TestSetResult> per_set;
  std::vector<ScatterPoint> scatter;

  void validate() const;
};

// Any depth estimator over a self-describing exposure. Both the SNN and the
// CoM baseline evaluate through this single reporter so their metrics are
// computed by the same code.
using DepthPredictor = std::function<double(const ExposureRecord&)>;

EvalReport evaluate_sets(const std::vector<std::filesystem::path>& manifest_files,
                         const DepthPredictor& predict, unsigned workers = 1);

// SNN path (checkpoint weights, chosen mode/combiner).
EvalReport evaluate(const std::vector<std::filesystem::path>& manifest_files,
                    const NetworkParams& net, RunMode mode, Combiner combiner,
                    unsigned workers = 1);

// CoM baseline path.
EvalReport evaluate_com(const std::vector<std::filesystem::path>& manifest_files,
                        std::size_t window_halfwidth, unsigned workers = 1);

// report CSV: one summary row + one row per test set;
// scatter CSV: truth_m,pred_m,reflectivity,ambient_klux per exposure.
void write_eval_report(const std::filesystem::path& report_csv,
                       const std::filesystem::path& scatter_csv, const EvalReport& report);

} // namespace dtof
