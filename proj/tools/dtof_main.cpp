// dtof: synthetic SPAD event datasets, LMU-SNN training/inference, CoM
// baseline, energy reports, and real-frame ingestion in one binary.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dtof/dataset.hpp"
#include "dtof/energy.hpp"
#include "dtof/histogram.hpp"
#include "dtof/ingest.hpp"
#include "dtof/network.hpp"
#include "dtof/sha256.hpp"
#include "dtof/train.hpp"
#include "dtof/units.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dtof;

namespace {

constexpr const char* kToolVersion = "0.1.0";

int dispatch(const std::vector<std::string>& args); // forward, used by rerun

// ---------------------------------------------------------------------------
// Run manifests: every artifact-producing command drops run_manifest.json in
// its output directory with digests of inputs and outputs so any run can be
// replayed and byte-compared (see the rerun subcommand).

struct RunContext {
  std::string subcommand;
  std::vector<std::string> args; // full args as dispatched (subcommand first)
  fs::path out_dir;
  json extra;                                     // command-specific fields
  std::vector<std::pair<std::string, std::string>> inputs; // path, digest
  std::vector<std::string> informational;         // outputs excluded from digests
};

void add_input(RunContext& ctx, const fs::path& p) {
  ctx.inputs.emplace_back(p.string(), sha256_file_hex(p));
}

void write_run_manifest(const RunContext& ctx) {
  json j;
  j["tool"] = "dtof";
  j["version"] = kToolVersion;
  j["subcommand"] = ctx.subcommand;
  j["args"] = ctx.args;
  j["rng_algorithm"] = "mt19937_64/splitmix64-derive/v1";
  for (auto it = ctx.extra.begin(); it != ctx.extra.end(); ++it) j[it.key()] = it.value();
  json inputs = json::object();
  for (const auto& [path, digest] : ctx.inputs) inputs[path] = digest;
  j["inputs"] = inputs;

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(ctx.out_dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  json outputs = json::object();
  json info = json::array();
  for (const auto& f : files) {
    const std::string rel = fs::relative(f, ctx.out_dir).generic_string();
    if (rel == "run_manifest.json") continue;
    if (std::find(ctx.informational.begin(), ctx.informational.end(), rel) !=
        ctx.informational.end()) {
      info.push_back(rel);
    } else {
      outputs[rel] = sha256_file_hex(f);
    }
  }
  j["outputs"] = outputs;
  j["informational"] = info;

  std::ofstream out(ctx.out_dir / "run_manifest.json");
  if (!out) throw DataError("cannot write run manifest in " + ctx.out_dir.string());
  out << j.dump(2) << '\n';
}

fs::path resolve_manifest_path(const fs::path& p) {
  if (fs::is_directory(p)) return p / "manifest.json";
  return p;
}

ToolConfig resolve_config(const std::string& config_file,
                          const std::vector<std::string>& overrides, RunContext* ctx) {
  ToolConfig cfg;
  if (!config_file.empty()) {
    cfg = load_config(config_file);
    if (ctx) add_input(*ctx, config_file);
  }
  apply_config_overrides(cfg, overrides);
  return cfg;
}

std::string config_text(const ToolConfig& cfg) {
  std::ostringstream os;
  write_config(os, cfg);
  return os.str();
}

NetworkConfig network_config_for(const ToolConfig& cfg) {
  NetworkConfig net;
  net.dt_net_ps = static_cast<double>(cfg.sensor.sst_clock_period_ps);
  net.cycle_window_ps = static_cast<double>(cfg.sensor.cycle_window_ps);
  net.theta_steps =
      static_cast<double>(cfg.sensor.exposure_length_ps(cfg.optical.laser_cycles)) /
      net.dt_net_ps;
  return net;
}

// ---------------------------------------------------------------------------
// gen

struct GenOpts {
  std::string out;
  std::string mode = "train";
  std::uint32_t count = 0; // 0 -> mode default
  std::uint64_t seed = 1;
  std::string config_file;
  std::vector<std::string> overrides;
  double reflectivity = 0.4; // test pair
  double ambient = 25.0;
  double depth_min = 0.5, depth_max = 10.0, depth_step = 0.5;
  double refl_min = 0.25, refl_max = 1.0;
  double ambient_min = 0.0, ambient_max = 30.0;
  unsigned workers = 1;
};

int cmd_gen(const GenOpts& o, const std::vector<std::string>& args) {
  RunContext ctx{"gen", args, o.out, {}, {}, {}};
  const ToolConfig cfg = resolve_config(o.config_file, o.overrides, &ctx);

  DatasetSpec spec;
  spec.mode = o.mode == "test" ? DatasetSpec::Mode::test : DatasetSpec::Mode::train;
  spec.count = o.count ? o.count : (spec.mode == DatasetSpec::Mode::test ? 500u : 2000u);
  spec.depth_min_m = o.depth_min;
  spec.depth_max_m = o.depth_max;
  spec.depth_step_m = o.depth_step;
  spec.reflectivity_min = o.refl_min;
  spec.reflectivity_max = o.refl_max;
  spec.ambient_min_klux = o.ambient_min;
  spec.ambient_max_klux = o.ambient_max;
  spec.test_reflectivity = o.reflectivity;
  spec.test_ambient_klux = o.ambient;

  fs::create_directories(o.out);
  const DatasetManifest manifest = generate_dataset(cfg, spec, o.seed, o.out, o.workers);
  std::cout << "generated " << manifest.entries.size() << " exposures ("
            << o.mode << ", seed " << o.seed << ") in " << o.out << "\n";

  ctx.extra["seed"] = o.seed;
  ctx.extra["workers"] = o.workers;
  ctx.extra["config_text"] = config_text(cfg);
  write_run_manifest(ctx);
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data;
  std::string out;
  std::string init_checkpoint;
  TrainConfig tc;
  std::string combiner = "level_sst";
  std::uint64_t net_seed = 7;
  // network hyperparameters; <= 0 means "module default"
  double theta = 0.0; // 0 -> full exposure
  double tau_dec = -1.0, tau_h = -1.0, tau_in_sst = -1.0, tau_in_trig = -1.0;
  double soft_sigma = -1.0;
  std::uint32_t enc_per_channel = 0, n_hidden = 0, memory_order = 0;
  bool n_val_given = false; // distinguishes an explicit --n-val 0 from the default split
};

int cmd_train(TrainOpts o, const std::vector<std::string>& args) {
  RunContext ctx{"train", args, o.out, {}, {}, {}};
  const fs::path manifest_path = resolve_manifest_path(o.data);
  const DatasetManifest manifest = load_manifest(manifest_path);
  add_input(ctx, manifest_path);

  if (o.tc.n_train == 0 && o.tc.n_val == 0 && !o.n_val_given) {
    // default split: one sixth held out for validation
    o.tc.n_val = manifest.entries.size() / 6;
    o.tc.n_train = manifest.entries.size() - o.tc.n_val;
  } else if (o.tc.n_val == 0 && !o.n_val_given && o.tc.n_train < manifest.entries.size()) {
    o.tc.n_val = manifest.entries.size() - o.tc.n_train;
  }
  if (o.tc.n_train == 0) o.tc.n_train = manifest.entries.size() - o.tc.n_val;
  o.tc.combiner = combiner_from_string(o.combiner);

  NetworkParams net;
  if (!o.init_checkpoint.empty()) {
    net = to_rate_mode(load_checkpoint(o.init_checkpoint));
    // surrogate smoothing is a training knob, not part of the architecture, so
    // it may be annealed across restarts
    if (o.soft_sigma > 0.0) net.cfg.soft_sigma = o.soft_sigma;
    add_input(ctx, o.init_checkpoint);
  } else {
    NetworkConfig ncfg = network_config_for(manifest.config);
    if (o.theta > 0.0) ncfg.theta_steps = o.theta;
    if (o.tau_dec > 0.0) ncfg.tau_dec = o.tau_dec;
    if (o.tau_h > 0.0) ncfg.tau_h = o.tau_h;
    if (o.tau_in_sst > 0.0) ncfg.tau_in_sst = o.tau_in_sst;
    if (o.tau_in_trig > 0.0) ncfg.tau_in_trig = o.tau_in_trig;
    if (o.soft_sigma > 0.0) ncfg.soft_sigma = o.soft_sigma;
    if (o.enc_per_channel) ncfg.enc_per_channel = o.enc_per_channel;
    if (o.n_hidden) ncfg.n_hidden = o.n_hidden;
    if (o.memory_order) ncfg.memory_order = o.memory_order;
    net = init_network(ncfg, manifest.config.sensor, o.net_seed);
  }
  std::cout << "trainable parameters: " << net.trainable_count() << "\n"
            << "state variables (memory + hidden): " << net.lmu_state_count() << "\n"
            << "training on " << o.tc.n_train << " exposures, validating on "
            << o.tc.n_val << ", " << o.tc.epochs << " epochs\n";

  fs::create_directories(o.out);
  const TrainResult result = train(manifest, manifest_path.parent_path(), net, o.tc);
  save_checkpoint(fs::path(o.out) / "checkpoint.sncp", result.best);
  write_training_log(fs::path(o.out) / "training_log.csv", result.log);
  std::cout << "best validation MAE " << result.best_val_mae_m << " m at epoch "
            << result.best_epoch << "; checkpoint written\n";

  ctx.extra["seed"] = o.tc.seed;
  ctx.extra["net_seed"] = o.net_seed;
  ctx.extra["workers"] = o.tc.workers;
  ctx.extra["trainable_params"] = net.trainable_count();
  ctx.extra["best_epoch"] = result.best_epoch;
  ctx.extra["best_val_mae_m"] = result.best_val_mae_m;
  ctx.extra["config_text"] = config_text(manifest.config);
  ctx.informational.push_back("training_log.csv"); // wall-clock column
  write_run_manifest(ctx);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string checkpoint;
  std::vector<std::string> test_sets;
  std::string out;
  std::string mode = "spiking";
  std::string method = "snn";
  std::string combiner = "level_sst";
  std::size_t com_window = default_com_window_halfwidth;
  unsigned workers = 1;
};

int cmd_eval(const EvalOpts& o, const std::vector<std::string>& args) {
  RunContext ctx{"eval", args, o.out, {}, {}, {}};
  std::vector<fs::path> manifests;
  for (const auto& t : o.test_sets) {
    manifests.push_back(resolve_manifest_path(t));
    add_input(ctx, manifests.back());
  }

  EvalReport report;
  if (o.method == "com") {
    report = evaluate_com(manifests, o.com_window, o.workers);
  } else {
    if (o.checkpoint.empty()) throw DataError("eval: --checkpoint required for method snn");
    add_input(ctx, o.checkpoint);
    const NetworkParams net = load_checkpoint(o.checkpoint);
    const RunMode mode = o.mode == "rate" ? RunMode::rate : RunMode::spiking;
    report = evaluate(manifests, net, mode, combiner_from_string(o.combiner), o.workers);
  }

  fs::create_directories(o.out);
  write_eval_report(fs::path(o.out) / "eval.csv", fs::path(o.out) / "scatter.csv", report);
  std::cout << o.method << " MAE " << report.mae_m << " m (std " << report.mae_std_m
            << "), " << report.frac_within_15cm * 100.0 << "% within 0.15 m over "
            << report.scatter.size() << " exposures\n";

  ctx.extra["workers"] = o.workers;
  write_run_manifest(ctx);
  return 0;
}

// ---------------------------------------------------------------------------
// infer

struct InferOpts {
  std::string checkpoint;
  std::string data;
  std::size_t index = 0;
  std::string out;
  std::string mode = "spiking";
  std::string combiner = "level_sst";
  std::size_t com_window = default_com_window_halfwidth;
};

int cmd_infer(const InferOpts& o, const std::vector<std::string>& args) {
  const fs::path manifest_path = resolve_manifest_path(o.data);
  const DatasetManifest manifest = load_manifest(manifest_path);
  if (o.index >= manifest.entries.size()) {
    throw DataError("infer: index " + std::to_string(o.index) + " out of range (" +
                    std::to_string(manifest.entries.size()) + " exposures)");
  }
  const ExposureRecord rec = load_exposure(manifest, manifest_path.parent_path(), o.index);

  NetworkParams net = load_checkpoint(o.checkpoint);
  net = o.mode == "rate" ? to_rate_mode(net) : to_spiking_mode(net);
  const NetworkInput input = build_network_input(rec, combiner_from_string(o.combiner), net.cfg);
  const InferResult snn = infer_exposure(input, net);

  double com_m = std::numeric_limits<double>::quiet_NaN();
  try {
    com_m = com_depth(accumulate_histogram(rec, rec.sensor), o.com_window).depth_estimate_m;
  } catch (const DataError&) {
  }

  const double truth = rec.scene.depth_m;
  std::cout << "exposure " << o.index << ": truth " << truth << " m\n"
            << "  snn (" << o.mode << "): " << snn.depth_m << " m (err "
            << snn.depth_m - truth << " m), spikes neural=" << snn.counters.neural
            << " synaptic=" << snn.counters.synaptic << "\n"
            << "  com: " << com_m << " m (err " << com_m - truth << " m)\n";

  if (!o.out.empty()) {
    RunContext ctx{"infer", args, o.out, {}, {}, {}};
    add_input(ctx, manifest_path);
    add_input(ctx, o.checkpoint);
    fs::create_directories(o.out);
    std::ofstream csv(fs::path(o.out) / "infer.csv");
    csv.precision(10);
    csv << "index,truth_m,snn_m,com_m,neural_spikes,synaptic_spikes\n"
        << o.index << ',' << truth << ',' << snn.depth_m << ',' << com_m << ','
        << snn.counters.neural << ',' << snn.counters.synaptic << '\n';
    csv.close();
    write_run_manifest(ctx);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// energy

struct EnergyOpts {
  std::uint64_t neural = 0;
  std::uint64_t synaptic = 0;
  double fps = 30.0;
  std::string out;
  std::string profile = "all";
};

int cmd_energy(const EnergyOpts& o, const std::vector<std::string>& args) {
  SpikeCounters counters{o.neural, o.synaptic};
  std::vector<NeuronEnergyProfile> profiles =
      o.profile == "all" ? energy_presets()
                         : std::vector<NeuronEnergyProfile>{energy_preset(o.profile)};

  std::cout << "N_n = " << counters.neural << ", N_s = " << counters.synaptic << "\n";
  for (const auto& p : profiles) {
    const EnergyBreakdown b = estimate_energy(counters, p);
    std::cout << "  " << p.name << ": neural " << format_energy_zj(b.neural_zj)
              << ", synaptic " << format_energy_zj(b.synaptic_zj) << ", total "
              << format_energy_zj(b.total_zj) << ", "
              << format_power_w(power_at_fps(b.total_j(), o.fps)) << " at " << o.fps
              << " fps\n";
  }
  if (!o.out.empty()) {
    RunContext ctx{"energy", args, o.out, {}, {}, {}};
    fs::create_directories(o.out);
    write_energy_report(fs::path(o.out) / "energy.csv", counters, profiles, o.fps);
    write_run_manifest(ctx);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// ingest

struct IngestOpts {
  std::string frames;
  bool packed = false;
  std::string out;
  std::string config_file;
  std::vector<std::string> overrides;
  ReformatOptions ro;
  std::string method = "com";
  std::string checkpoint;
  std::string combiner = "level_sst";
  std::size_t com_window = default_com_window_halfwidth;
  unsigned workers = 1;
};

int cmd_ingest(const IngestOpts& o, const std::vector<std::string>& args) {
  RunContext ctx{"ingest", args, o.out, {}, {}, {}};
  const ToolConfig cfg = resolve_config(o.config_file, o.overrides, &ctx);
  const RealFrameSet set =
      o.packed ? load_real_frames_packed(o.frames) : load_real_frames_text(o.frames);
  add_input(ctx, o.frames);

  const ReformatResult r = reformat_frames(set, cfg, o.ro);
  std::cout << "reformatted " << set.records.size() << " detections into "
            << r.exposures.size() << " exposure(s) of " << r.map_width << "x"
            << r.map_height << " macropixels (" << r.dropped << " dropped, "
            << r.dead_filtered << " dead-time filtered)\n";

  const bool want_snn = o.method == "snn" || o.method == "both";
  const bool want_com = o.method == "com" || o.method == "both";
  NetworkParams net;
  if (want_snn) {
    if (o.checkpoint.empty()) throw DataError("ingest: --checkpoint required for method snn");
    net = to_spiking_mode(load_checkpoint(o.checkpoint));
    add_input(ctx, o.checkpoint);
  }

  fs::create_directories(o.out);
  for (std::size_t e = 0; e < r.exposures.size(); ++e) {
    const std::string tag = "exposure" + std::to_string(e);
    if (want_com) {
      const DepthMap map = render_depth_map_com(r.exposures[e], r.map_width, r.map_height,
                                                o.com_window, o.workers);
      write_depth_csv(fs::path(o.out) / (tag + "_com.csv"), map);
      write_depth_pgm(fs::path(o.out) / (tag + "_com.pgm"), map);
    }
    if (want_snn) {
      const DepthMap map = render_depth_map_snn(r.exposures[e], r.map_width, r.map_height,
                                                net, combiner_from_string(o.combiner),
                                                o.workers);
      write_depth_csv(fs::path(o.out) / (tag + "_snn.csv"), map);
      write_depth_pgm(fs::path(o.out) / (tag + "_snn.pgm"), map);
    }
  }

  ctx.extra["dropped"] = r.dropped;
  ctx.extra["dead_filtered"] = r.dead_filtered;
  ctx.extra["workers"] = o.workers;
  ctx.extra["config_text"] = config_text(cfg);
  write_run_manifest(ctx);
  return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareOpts {
  std::vector<std::string> test_sets;
  std::string checkpoint;
  std::string out;
  std::string combiner = "level_sst";
  bool adder = false;
  double fps = 30.0;
  std::size_t com_window = default_com_window_halfwidth;
  unsigned workers = 1;
};

struct CompareRow {
  std::string method;
  EvalReport report;
  bool has_spikes = false;
  double mean_neural = 0.0, mean_synaptic = 0.0;
};

CompareRow snn_compare_row(const std::string& method_name,
                           const std::vector<fs::path>& manifests,
                           const NetworkParams& net, Combiner combiner, unsigned workers) {
  std::atomic<std::uint64_t> neural{0}, synaptic{0};
  std::atomic<std::uint64_t> count{0};
  auto predict = [&](const ExposureRecord& rec) {
    const NetworkInput input = build_network_input(rec, combiner, net.cfg);
    const InferResult r = infer_exposure(input, net);
    neural += r.counters.neural;
    synaptic += r.counters.synaptic;
    count += 1;
    return r.depth_m;
  };
  CompareRow row;
  row.method = method_name;
  row.report = evaluate_sets(manifests, predict, workers);
  row.has_spikes = true;
  row.mean_neural = static_cast<double>(neural.load()) / static_cast<double>(count.load());
  row.mean_synaptic =
      static_cast<double>(synaptic.load()) / static_cast<double>(count.load());
  return row;
}

int cmd_compare(const CompareOpts& o, const std::vector<std::string>& args) {
  RunContext ctx{"compare", args, o.out, {}, {}, {}};
  std::vector<fs::path> manifests;
  for (const auto& t : o.test_sets) {
    manifests.push_back(resolve_manifest_path(t));
    add_input(ctx, manifests.back());
  }

  std::vector<CompareRow> rows;
  {
    CompareRow com;
    com.method = "com";
    com.report = evaluate_com(manifests, o.com_window, o.workers);
    rows.push_back(std::move(com));
  }
  if (!o.checkpoint.empty()) {
    add_input(ctx, o.checkpoint);
    const NetworkParams net = to_spiking_mode(load_checkpoint(o.checkpoint));
    rows.push_back(snn_compare_row("snn_" + o.combiner, manifests, net,
                                   combiner_from_string(o.combiner), o.workers));
    if (o.adder) {
      rows.push_back(snn_compare_row("snn_adder_async", manifests, net,
                                     Combiner::adder_async, o.workers));
    }
  } else {
    std::cout << "no checkpoint given: SNN rows omitted\n";
  }

  const auto presets = energy_presets();
  fs::create_directories(o.out);
  std::ofstream csv(fs::path(o.out) / "compare.csv");
  csv.precision(10);
  csv << "# compare/v1\n";
  csv << "method,mae_m,mae_std_m,frac_within_15cm,mean_neural_spikes,mean_synaptic_spikes";
  for (const auto& p : presets) csv << ",energy_" << p.name;
  csv << ",power_" << o.fps << "fps_" << presets.front().name << '\n';
  for (const auto& row : rows) {
    csv << row.method << ',' << row.report.mae_m << ',' << row.report.mae_std_m << ','
        << row.report.frac_within_15cm;
    std::cout << row.method << ": MAE " << row.report.mae_m << " m (std "
              << row.report.mae_std_m << "), " << row.report.frac_within_15cm * 100.0
              << "% within 0.15 m";
    if (row.has_spikes) {
      csv << ',' << row.mean_neural << ',' << row.mean_synaptic;
      SpikeCounters mean{static_cast<std::uint64_t>(std::llround(row.mean_neural)),
                         static_cast<std::uint64_t>(std::llround(row.mean_synaptic))};
      for (const auto& p : presets) {
        csv << ',' << format_energy_zj(estimate_energy(mean, p).total_zj);
      }
      const EnergyBreakdown first = estimate_energy(mean, presets.front());
      csv << ',' << format_power_w(power_at_fps(first.total_j(), o.fps));
      std::cout << ", mean spikes " << row.mean_neural << "/" << row.mean_synaptic;
    } else {
      csv << ",,";
      for (std::size_t i = 0; i < presets.size(); ++i) csv << ',';
      csv << ',';
    }
    csv << '\n';
    std::cout << "\n";
  }
  csv.close();

  // per-method scatter files for depth-vs-prediction plots
  for (const auto& row : rows) {
    write_eval_report(fs::path(o.out) / (row.method + "_eval.csv"),
                      fs::path(o.out) / (row.method + "_scatter.csv"), row.report);
  }

  ctx.extra["workers"] = o.workers;
  write_run_manifest(ctx);
  return 0;
}

// ---------------------------------------------------------------------------
// hist

struct HistOpts {
  std::string data;
  std::size_t index = 0;
  std::string out;
  std::size_t com_window = default_com_window_halfwidth;
};

int cmd_hist(const HistOpts& o, const std::vector<std::string>& args) {
  RunContext ctx{"hist", args, o.out, {}, {}, {}};
  const fs::path manifest_path = resolve_manifest_path(o.data);
  const DatasetManifest manifest = load_manifest(manifest_path);
  add_input(ctx, manifest_path);
  if (o.index >= manifest.entries.size()) {
    throw DataError("hist: index out of range");
  }
  const ExposureRecord rec = load_exposure(manifest, manifest_path.parent_path(), o.index);
  const Histogram hist = accumulate_histogram(rec, rec.sensor);

  fs::create_directories(o.out);
  {
    std::ofstream csv(fs::path(o.out) / "histogram.csv");
    csv << "bin,t_lo_ps,count\n";
    for (std::size_t b = 0; b < hist.bins.size(); ++b) {
      csv << b << ',' << static_cast<Ps>(b) * hist.bin_width_ps << ',' << hist.bins[b]
          << '\n';
    }
  }
  std::ofstream csv(fs::path(o.out) / "com.csv");
  csv.precision(10);
  csv << "tof_estimate_ps,depth_estimate_m,peak_bin,background_level,truth_m\n";
  try {
    const ComResult com = com_depth(hist, o.com_window);
    csv << com.tof_estimate_ps << ',' << com.depth_estimate_m << ',' << com.peak_bin << ','
        << com.background_level << ',' << rec.scene.depth_m << '\n';
    std::cout << "com: " << com.depth_estimate_m << " m (truth " << rec.scene.depth_m
              << " m)\n";
  } catch (const DataError& e) {
    csv << ",,,," << rec.scene.depth_m << '\n';
    std::cout << "com: no estimate (" << e.what() << ")\n";
  }
  csv.close();
  write_run_manifest(ctx);
  return 0;
}

// ---------------------------------------------------------------------------
// rerun

struct RerunOpts {
  std::string manifest;
  std::string out;
};

int cmd_rerun(const RerunOpts& o) {
  std::ifstream in(o.manifest);
  if (!in) throw DataError("rerun: cannot open " + o.manifest);
  json j = json::parse(in);
  std::vector<std::string> args = j["args"].get<std::vector<std::string>>();

  bool replaced = false;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out" && i + 1 < args.size()) {
      args[i + 1] = o.out;
      replaced = true;
      break;
    }
    if (args[i].rfind("--out=", 0) == 0) {
      args[i] = "--out=" + o.out;
      replaced = true;
      break;
    }
  }
  if (!replaced) throw DataError("rerun: stored args have no --out to redirect");

  std::cout << "replaying:";
  for (const auto& a : args) std::cout << ' ' << a;
  std::cout << "\n";
  const int rc = dispatch(args);
  if (rc != 0) {
    std::cout << "rerun: replay exited with code " << rc << "\n";
    return rc;
  }

  std::ifstream nin(fs::path(o.out) / "run_manifest.json");
  if (!nin) throw DataError("rerun: replay produced no run manifest");
  json nj = json::parse(nin);
  const json& a = j["outputs"];
  const json& b = nj["outputs"];
  bool ok = true;
  for (auto it = a.begin(); it != a.end(); ++it) {
    if (!b.contains(it.key())) {
      std::cout << "  MISSING " << it.key() << "\n";
      ok = false;
    } else if (b[it.key()] != it.value()) {
      std::cout << "  DIFFERS " << it.key() << "\n";
      ok = false;
    } else {
      std::cout << "  identical " << it.key() << "\n";
    }
  }
  for (auto it = b.begin(); it != b.end(); ++it) {
    if (!a.contains(it.key())) {
      std::cout << "  EXTRA " << it.key() << "\n";
      ok = false;
    }
  }
  std::cout << (ok ? "rerun: byte-identical outputs\n" : "rerun: outputs differ\n");
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

void add_config_flags(CLI::App* app, std::string& config_file,
                      std::vector<std::string>& overrides) {
  app->add_option("--config", config_file, "flat key=value config file");
  app->add_option("--set", overrides, "config override key=value (repeatable, wins over file)");
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"TDC-less dToF depth sensing: SPAD event simulation, LMU-SNN, CoM baseline"};
  app.require_subcommand(1);

  GenOpts g;
  auto* gen = app.add_subcommand("gen", "generate a synthetic exposure dataset");
  gen->add_option("--out", g.out, "output directory")->required();
  gen->add_option("--mode", g.mode, "train|test")->check(CLI::IsMember({"train", "test"}));
  gen->add_option("--count", g.count, "train: total exposures; test: exposures per depth");
  gen->add_option("--seed", g.seed, "master seed");
  add_config_flags(gen, g.config_file, g.overrides);
  gen->add_option("--reflectivity", g.reflectivity, "test-set reflectivity");
  gen->add_option("--ambient", g.ambient, "test-set ambient (kLux)");
  gen->add_option("--depth-min", g.depth_min, "depth range low (m)");
  gen->add_option("--depth-max", g.depth_max, "depth range high (m)");
  gen->add_option("--depth-step", g.depth_step, "test grid step (m)");
  gen->add_option("--refl-min", g.refl_min, "train reflectivity low");
  gen->add_option("--refl-max", g.refl_max, "train reflectivity high");
  gen->add_option("--ambient-min", g.ambient_min, "train ambient low (kLux)");
  gen->add_option("--ambient-max", g.ambient_max, "train ambient high (kLux)");
  gen->add_option("--workers", g.workers, "simulation threads");

  TrainOpts t;
  auto* tr = app.add_subcommand("train", "train the network on a generated dataset");
  tr->add_option("--data", t.data, "dataset directory or manifest.json")->required();
  tr->add_option("--out", t.out, "output directory")->required();
  tr->add_option("--epochs", t.tc.epochs, "training epochs");
  tr->add_option("--lr", t.tc.learning_rate, "Adam learning rate");
  tr->add_option("--batch", t.tc.batch_size, "batch size");
  tr->add_option("--beta1", t.tc.beta1, "Adam beta1");
  tr->add_option("--beta2", t.tc.beta2, "Adam beta2");
  tr->add_option("--truncation", t.tc.bptt_truncation, "BPTT window (steps; 0 = full)");
  tr->add_option("--seed", t.tc.seed, "shuffle seed");
  tr->add_option("--net-seed", t.net_seed, "weight init seed");
  tr->add_option("--n-train", t.tc.n_train, "training exposures (default: all minus val)");
  auto* nval_opt =
      tr->add_option("--n-val", t.tc.n_val, "validation exposures (default: 1/6 of dataset)");
  tr->parse_complete_callback([&t, nval_opt] { t.n_val_given = nval_opt->count() > 0; });
  tr->add_option("--workers", t.tc.workers, "gradient threads");
  tr->add_option("--combiner", t.combiner, "level_sst|edge_sst|adder_async");
  tr->add_option("--init-checkpoint", t.init_checkpoint, "warm-start weights");
  tr->add_option("--theta", t.theta, "LMU window (steps; 0 = full exposure)");
  tr->add_option("--tau-dec", t.tau_dec, "readout synapse (steps)");
  tr->add_option("--tau-h", t.tau_h, "recurrent synapse (steps)");
  tr->add_option("--tau-in-sst", t.tau_in_sst, "input filter, photon channel (steps)");
  tr->add_option("--tau-in-trig", t.tau_in_trig, "input filter, trigger channel (steps)");
  tr->add_option("--soft-sigma", t.soft_sigma, "training surrogate smoothing");
  tr->add_option("--enc-per-channel", t.enc_per_channel, "encoder neurons per channel");
  tr->add_option("--n-hidden", t.n_hidden, "hidden neurons");
  tr->add_option("--memory-order", t.memory_order, "LMU order d");

  EvalOpts e;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint or the CoM baseline");
  ev->add_option("--checkpoint", e.checkpoint, "trained checkpoint (.sncp)");
  ev->add_option("--test-set", e.test_sets, "test dataset directory (repeatable)")->required();
  ev->add_option("--out", e.out, "output directory")->required();
  ev->add_option("--mode", e.mode, "spiking|rate")->check(CLI::IsMember({"spiking", "rate"}));
  ev->add_option("--method", e.method, "snn|com")->check(CLI::IsMember({"snn", "com"}));
  ev->add_option("--combiner", e.combiner, "level_sst|edge_sst|adder_async");
  ev->add_option("--com-window", e.com_window, "CoM peak window halfwidth (bins)");
  ev->add_option("--workers", e.workers, "evaluation threads");

  InferOpts i;
  auto* inf = app.add_subcommand("infer", "run one exposure through SNN and CoM");
  inf->add_option("--checkpoint", i.checkpoint, "trained checkpoint")->required();
  inf->add_option("--data", i.data, "dataset directory or manifest.json")->required();
  inf->add_option("--index", i.index, "exposure index");
  inf->add_option("--out", i.out, "optional output directory");
  inf->add_option("--mode", i.mode, "spiking|rate")->check(CLI::IsMember({"spiking", "rate"}));
  inf->add_option("--combiner", i.combiner, "level_sst|edge_sst|adder_async");
  inf->add_option("--com-window", i.com_window, "CoM peak window halfwidth (bins)");

  EnergyOpts en;
  auto* ener = app.add_subcommand("energy", "per-exposure energy from spike counts");
  ener->add_option("--neural", en.neural, "neural spike count")->required();
  ener->add_option("--synaptic", en.synaptic, "synaptic event count")->required();
  ener->add_option("--fps", en.fps, "frame rate for power scaling");
  ener->add_option("--profile", en.profile, "preset name or 'all'");
  ener->add_option("--out", en.out, "optional output directory");

  IngestOpts ing;
  auto* ig = app.add_subcommand("ingest", "reformat real timestamp frames into depth maps");
  ig->add_option("--frames", ing.frames, "frame set file")->required();
  ig->add_flag("--packed", ing.packed, "frames file is the packed binary form");
  ig->add_option("--out", ing.out, "output directory")->required();
  add_config_flags(ig, ing.config_file, ing.overrides);
  ig->add_option("--frames-per-exposure", ing.ro.frames_per_exposure, "frames pooled per exposure");
  ig->add_option("--group", ing.ro.group, "macropixel edge length");
  ig->add_option("--time-scale", ing.ro.time_scale, "timestamp stretch factor");
  ig->add_flag("--scale-after-shift", ing.ro.scale_after_shift,
               "apply the stretch after the cycle shift");
  ig->add_option("--method", ing.method, "com|snn|both")
      ->check(CLI::IsMember({"com", "snn", "both"}));
  ig->add_option("--checkpoint", ing.checkpoint, "checkpoint for snn maps");
  ig->add_option("--combiner", ing.combiner, "level_sst|edge_sst|adder_async");
  ig->add_option("--com-window", ing.com_window, "CoM peak window halfwidth (bins)");
  ig->add_option("--workers", ing.workers, "per-macropixel threads");

  CompareOpts c;
  auto* cmp = app.add_subcommand("compare", "SNN vs CoM table on shared test sets");
  cmp->add_option("--test-set", c.test_sets, "test dataset directory (repeatable)")->required();
  cmp->add_option("--checkpoint", c.checkpoint, "trained checkpoint (optional)");
  cmp->add_option("--out", c.out, "output directory")->required();
  cmp->add_option("--combiner", c.combiner, "SNN input combiner");
  cmp->add_flag("--adder", c.adder, "also evaluate the adder-tree input variant");
  cmp->add_option("--fps", c.fps, "frame rate for the power column");
  cmp->add_option("--com-window", c.com_window, "CoM peak window halfwidth (bins)");
  cmp->add_option("--workers", c.workers, "evaluation threads");

  HistOpts h;
  auto* hi = app.add_subcommand("hist", "dump one exposure's histogram and CoM estimate");
  hi->add_option("--data", h.data, "dataset directory or manifest.json")->required();
  hi->add_option("--index", h.index, "exposure index");
  hi->add_option("--out", h.out, "output directory")->required();
  hi->add_option("--com-window", h.com_window, "CoM peak window halfwidth (bins)");

  RerunOpts r;
  auto* re = app.add_subcommand("rerun", "replay a run manifest and compare digests");
  re->add_option("--manifest", r.manifest, "run_manifest.json of the original run")->required();
  re->add_option("--out", r.out, "directory for the replayed outputs")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex);
  }

  if (gen->parsed()) return cmd_gen(g, args);
  if (tr->parsed()) return cmd_train(t, args);
  if (ev->parsed()) return cmd_eval(e, args);
  if (inf->parsed()) return cmd_infer(i, args);
  if (ener->parsed()) return cmd_energy(en, args);
  if (ig->parsed()) return cmd_ingest(ing, args);
  if (cmp->parsed()) return cmd_compare(c, args);
  if (hi->parsed()) return cmd_hist(h, args);
  if (re->parsed()) return cmd_rerun(r);
  return 1;
}

} // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return dispatch(args);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
