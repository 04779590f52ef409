#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "dtof/dataset.hpp"
#include "dtof/histogram.hpp"
#include "dtof/network.hpp"
#include "dtof/rng.hpp"
#include "dtof/train.hpp"
#include "dtof/units.hpp"

using namespace dtof;

namespace {

std::filesystem::path temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() / (std::string("dtof_train_") + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

NetworkConfig tiny_cfg() {
  NetworkConfig cfg;
  cfg.enc_per_channel = 3;
  cfg.n_hidden = 2;
  cfg.memory_order = 4;
  cfg.theta_steps = 20.0;
  cfg.tau_in_trig = 8.0;
  cfg.tau_dec = 5.0;
  return cfg;
}

SensorConfig tiny_sensor() {
  SensorConfig s;
  s.sst_clock_period_ps = 500;
  s.cycle_window_ps = 4000;
  s.histogram_bins = 8;
  s.bin_width_ps = 500;
  return s;
}

NetworkInput random_input(int steps, std::uint64_t seed, double target_m) {
  NetworkInput in;
  Rng rng(seed);
  in.sst.resize(steps);
  in.trigger.assign(steps, 0);
  for (int t = 0; t < steps; ++t) {
    in.sst[t] = static_cast<float>(rng.uniform_below(17)) / 16.0f;
    if (t % 8 == 0) in.trigger[t] = 1;
  }
  in.target_depth_m = target_m;
  return in;
}

std::string slurp(const std::filesystem::path& f) {
  std::ifstream in(f, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("logcosh loss") {
  CHECK(logcosh_loss(3.0, 3.0) == 0.0);
  CHECK(logcosh_loss(4.0, 3.0) == doctest::Approx(logcosh_loss(2.0, 3.0)).epsilon(1e-15));
  // ln cosh(x) -> |x| - ln 2 for large |x|
  CHECK(logcosh_loss(13.0, 3.0) == doctest::Approx(10.0 - std::log(2.0)).epsilon(1e-9));
  CHECK(logcosh_loss(1e6, 0.0) == doctest::Approx(1e6 - std::log(2.0)).epsilon(1e-12));
  // series bounds: e^2/2 - e^4/12 <= ln cosh e <= e^2/2
  for (double e = -2.0; e <= 2.0; e += 0.125) {
    const double l = logcosh_loss(e, 0.0);
    CHECK(l <= e * e / 2.0 + 1e-15);
    CHECK(l >= e * e / 2.0 - e * e * e * e / 12.0 - 1e-15);
  }
  CHECK_THROWS_AS(logcosh_loss(std::nan(""), 0.0), NumericError);
}

TEST_CASE("adam optimizer") {
  TrainConfig tc;
  tc.learning_rate = 1e-3;

  SUBCASE("zero gradient leaves parameters unchanged") {
    Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
    const Eigen::VectorXd orig = p;
    AdamState st = AdamState::zero(5);
    adam_step(p, Eigen::VectorXd::Zero(5), st, tc);
    CHECK((p - orig).cwiseAbs().maxCoeff() == 0.0);
    CHECK(st.t == 1);
  }
  SUBCASE("first step is a signed unit step scaled by the learning rate") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd g(3);
    g << 1.0, -0.5, 2.0;
    AdamState st = AdamState::zero(3);
    adam_step(p, g, st, tc);
    for (int i = 0; i < 3; ++i) {
      // m_hat = g, v_hat = g^2 -> delta = -lr g / (|g| + eps)
      const double expect = -tc.learning_rate * g[i] / (std::abs(g[i]) + tc.epsilon);
      CHECK(p[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(p[0] == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
  }
  SUBCASE("two deterministic steps match the closed form") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
    Eigen::VectorXd g1(1), g2(1);
    g1 << 0.3;
    g2 << -0.7;
    AdamState st = AdamState::zero(1);
    adam_step(p, g1, st, tc);
    adam_step(p, g2, st, tc);

    // replay by hand
    double m = 0, v = 0, x = 0;
    for (const double g : {0.3, -0.7}) {
      m = tc.beta1 * m + (1 - tc.beta1) * g;
      v = tc.beta2 * v + (1 - tc.beta2) * g * g;
      const double t = (g == 0.3) ? 1.0 : 2.0;
      const double mh = m / (1 - std::pow(tc.beta1, t));
      const double vh = v / (1 - std::pow(tc.beta2, t));
      x -= tc.learning_rate * mh / (std::sqrt(vh) + tc.epsilon);
    }
    CHECK(p[0] == doctest::Approx(x).epsilon(1e-14));
  }
  SUBCASE("vector update equals independent scalar updates") {
    Rng rng(5);
    Eigen::VectorXd p(32), g(32);
    for (int i = 0; i < 32; ++i) {
      p[i] = rng.uniform() - 0.5;
      g[i] = rng.uniform() - 0.5;
    }
    Eigen::VectorXd pv = p;
    AdamState sv = AdamState::zero(32);
    adam_step(pv, g, sv, tc);
    adam_step(pv, (0.5 * g).eval(), sv, tc);
    for (int i = 0; i < 32; ++i) {
      Eigen::VectorXd ps = p.segment(i, 1);
      AdamState ss = AdamState::zero(1);
      adam_step(ps, g.segment(i, 1), ss, tc);
      adam_step(ps, (0.5 * g.segment(i, 1)).eval(), ss, tc);
      CHECK(ps[0] == doctest::Approx(pv[i]).epsilon(1e-12));
    }
  }
  SUBCASE("shape mismatch rejected") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
    AdamState st = AdamState::zero(4);
    CHECK_THROWS_AS(adam_step(p, Eigen::VectorXd::Zero(3), st, tc), ContractViolation);
  }
}

TEST_CASE("trainable parameters pack and unpack") {
  const NetworkParams net = init_network(tiny_cfg(), tiny_sensor(), 3);
  const Eigen::VectorXd flat = pack_trainable(net);
  CHECK(static_cast<std::size_t>(flat.size()) == net.trainable_count());

  NetworkParams other = init_network(tiny_cfg(), tiny_sensor(), 4);
  unpack_trainable(flat, other);
  CHECK((pack_trainable(other) - flat).cwiseAbs().maxCoeff() == 0.0);
  CHECK((other.w_x - net.w_x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(other.b_dec == net.b_dec);

  Eigen::VectorXd wrong = Eigen::VectorXd::Zero(flat.size() + 1);
  CHECK_THROWS_AS(unpack_trainable(wrong, other), ContractViolation);
}

TEST_CASE("bptt gradient matches central finite differences") {
  const NetworkParams net = init_network(tiny_cfg(), tiny_sensor(), 123);
  const NetworkInput in = random_input(20, 9, 2.0);

  Eigen::VectorXd grad;
  const double loss = exposure_grad(in, net, 0, grad);
  REQUIRE(static_cast<std::size_t>(grad.size()) == net.trainable_count());
  CHECK(loss == doctest::Approx(logcosh_loss(soft_predict(in, net), 2.0)).epsilon(1e-12));

  const Eigen::VectorXd theta = pack_trainable(net);
  Eigen::VectorXd fd(theta.size());
  const double eps = 1e-5;
  NetworkParams probe = net;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd tp = theta;
    tp[i] += eps;
    unpack_trainable(tp, probe);
    const double lp = logcosh_loss(soft_predict(in, probe), 2.0);
    tp[i] = theta[i] - eps;
    unpack_trainable(tp, probe);
    const double lm = logcosh_loss(soft_predict(in, probe), 2.0);
    fd[i] = (lp - lm) / (2.0 * eps);
  }
  const double rel = (grad - fd).norm() / fd.norm();
  INFO("relative gradient error " << rel);
  CHECK(rel <= 1e-4);
}

TEST_CASE("bptt truncation") {
  const NetworkParams net = init_network(tiny_cfg(), tiny_sensor(), 21);
  const NetworkInput in = random_input(40, 10, 3.0);

  Eigen::VectorXd full, capped, cut;
  const double l1 = exposure_grad(in, net, 0, full);
  const double l2 = exposure_grad(in, net, 4000, capped); // longer than the input
  CHECK(l1 == l2);
  CHECK((full - capped).cwiseAbs().maxCoeff() == 0.0);

  exposure_grad(in, net, 5, cut);
  CHECK((full - cut).cwiseAbs().maxCoeff() > 0.0); // truly truncated

  SUBCASE("contract violations") {
    Eigen::VectorXd g;
    NetworkParams spk = to_spiking_mode(net);
    CHECK_THROWS_AS(exposure_grad(in, spk, 0, g), DomainError);
    NetworkInput no_target = in;
    no_target.target_depth_m = -1.0;
    CHECK_THROWS_AS(exposure_grad(no_target, net, 0, g), DataError);
  }
}

TEST_CASE("training is deterministic and driven by the split") {
  // small but real dataset
  ToolConfig cfg;
  cfg.optical.laser_cycles = 3;
  cfg.optical.pulse_energy_nj = 6400.0; // bright: strong peaks at short range
  DatasetSpec spec;
  spec.mode = DatasetSpec::Mode::train;
  spec.count = 8;
  spec.depth_max_m = 6.0;
  spec.ambient_max_klux = 5.0;
  const auto dir = temp_dir("data");
  const DatasetManifest manifest = generate_dataset(cfg, spec, 99, dir, 1);

  NetworkConfig ncfg = tiny_cfg();
  ncfg.theta_steps = 516.0;
  ncfg.tau_in_trig = 172.0;
  const NetworkParams init = init_network(ncfg, cfg.sensor, 1234);

  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 4;
  tc.n_train = 6;
  tc.n_val = 2;
  tc.seed = 5;

  SUBCASE("split must cover the manifest") {
    TrainConfig bad = tc;
    bad.n_val = 1;
    CHECK_THROWS_AS(bad.validate(manifest.entries.size()), DomainError);
    bad.n_train = 0;
    CHECK_THROWS_AS(bad.validate(manifest.entries.size()), DomainError);
    CHECK_NOTHROW(tc.validate(manifest.entries.size()));
  }

  const TrainResult a = train(manifest, dir, init, tc);
  REQUIRE(a.log.size() == 2);
  for (const auto& row : a.log) {
    CHECK(std::isfinite(row.train_loss));
    CHECK(std::isfinite(row.val_mae_m));
    CHECK(row.val_mae_m >= 0.0);
  }
  CHECK(a.best_epoch >= 1);

  SUBCASE("same seed and data reproduce the run exactly") {
    const TrainResult b = train(manifest, dir, init, tc);
    REQUIRE(b.log.size() == a.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      CHECK(b.log[i].train_loss == a.log[i].train_loss);
      CHECK(b.log[i].val_mae_m == a.log[i].val_mae_m);
    }
    CHECK((pack_trainable(b.best) - pack_trainable(a.best)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("worker count does not change the result") {
    TrainConfig tc3 = tc;
    tc3.workers = 3;
    const TrainResult b = train(manifest, dir, init, tc3);
    CHECK(b.log.back().train_loss == a.log.back().train_loss);
    CHECK((pack_trainable(b.best) - pack_trainable(a.best)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("shuffle seed matters") {
    TrainConfig tc2 = tc;
    tc2.seed = 6;
    const TrainResult b = train(manifest, dir, init, tc2);
    CHECK(b.log.back().train_loss != a.log.back().train_loss);
  }
  SUBCASE("non-finite parameters abort with a numeric error") {
    NetworkParams bad = init;
    bad.b_dec = std::nan("");
    CHECK_THROWS_AS(train(manifest, dir, bad, tc), NumericError);
  }
  SUBCASE("training log csv round trips") {
    const auto f = dir / "log.csv";
    write_training_log(f, a.log);
    std::ifstream in(f);
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,train_loss,val_mae_m,wall_s");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) ++rows;
    }
    CHECK(rows == 2);
  }

  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluation reporters") {
  ToolConfig cfg;
  cfg.optical.laser_cycles = 2;
  DatasetSpec spec;
  spec.mode = DatasetSpec::Mode::test;
  spec.count = 1;
  spec.test_ambient_klux = 0.0;
  const auto dir = temp_dir("eval");
  generate_dataset(cfg, spec, 7, dir, 1);
  const std::vector<std::filesystem::path> sets = {dir / "manifest.json"};

  SUBCASE("a perfect predictor scores zero error") {
    const EvalReport r = evaluate_sets(sets, [](const ExposureRecord& e) {
      return e.scene.depth_m;
    });
    CHECK(r.mae_m == 0.0);
    CHECK(r.frac_within_15cm == 1.0);
    REQUIRE(r.per_set.size() == 1);
    CHECK(r.per_set[0].exposures == 20);
    CHECK(r.scatter.size() == 20);
  }
  SUBCASE("constant predictor equals the grid mean deviation") {
    const EvalReport r = evaluate_sets(sets, [](const ExposureRecord&) { return 5.25; });
    // independent brute force over the actual truth depths
    double sum = 0.0;
    for (const auto& pt : r.scatter) sum += std::abs(5.25 - pt.truth_m);
    CHECK(r.mae_m == doctest::Approx(sum / 20.0).epsilon(1e-12));
    CHECK(r.mae_m == doctest::Approx(2.5).epsilon(1e-12));
  }
  SUBCASE("workers do not change the report") {
    const auto pred = [](const ExposureRecord& e) { return e.scene.depth_m * 0.9; };
    const EvalReport r1 = evaluate_sets(sets, pred, 1);
    const EvalReport r3 = evaluate_sets(sets, pred, 3);
    CHECK(r1.mae_m == r3.mae_m);
    CHECK(r1.frac_within_15cm == r3.frac_within_15cm);
  }
  SUBCASE("com baseline evaluates through the same reporter") {
    const EvalReport direct = evaluate_com(sets, default_com_window_halfwidth, 1);
    const EvalReport via = evaluate_sets(sets, [](const ExposureRecord& e) {
      const Histogram h = accumulate_histogram(e, e.sensor);
      return com_depth(h, default_com_window_halfwidth).depth_estimate_m;
    });
    CHECK(direct.mae_m == via.mae_m);
    CHECK(direct.frac_within_15cm == via.frac_within_15cm);
  }
  SUBCASE("snn evaluation runs a checkpointed network") {
    NetworkConfig ncfg = tiny_cfg();
    const NetworkParams net = init_network(ncfg, cfg.sensor, 2);
    const EvalReport r = evaluate(sets, net, RunMode::rate, Combiner::level_sst, 1);
    CHECK(std::isfinite(r.mae_m));
    CHECK(r.scatter.size() == 20);
    const EvalReport s = evaluate(sets, net, RunMode::spiking, Combiner::level_sst, 1);
    CHECK(std::isfinite(s.mae_m));
  }
  SUBCASE("report csv round trips") {
    const EvalReport r = evaluate_sets(sets, [](const ExposureRecord&) { return 1.0; });
    const auto rcsv = dir / "report.csv";
    const auto scsv = dir / "scatter.csv";
    write_eval_report(rcsv, scsv, r);
    std::string rep = slurp(rcsv);
    CHECK(rep.find("mae_m") != std::string::npos);
    std::ifstream sc(scsv);
    std::string header;
    std::getline(sc, header);
    CHECK(header == "truth_m,pred_m,reflectivity,ambient_klux");
    int rows = 0;
    std::string line;
    while (std::getline(sc, line)) {
      if (!line.empty()) ++rows;
    }
    CHECK(rows == 20);
  }
  SUBCASE("missing sets are rejected") {
    CHECK_THROWS_AS(evaluate_sets({}, [](const ExposureRecord&) { return 0.0; }),
                    DomainError);
  }

  std::filesystem::remove_all(dir);
}
