#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "dtof/energy.hpp"
#include "dtof/histogram.hpp"
#include "dtof/ingest.hpp"
#include "dtof/network.hpp"
#include "dtof/units.hpp"

using namespace dtof;

namespace {

std::filesystem::path temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() / (std::string("dtof_tools_") + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& f) {
  std::ifstream in(f, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Reference exposure counts used by the per-frame energy reports.
constexpr std::uint64_t kNeural = 15000;
constexpr std::uint64_t kSynaptic = 916000;

} // namespace

TEST_CASE("energy presets") {
  const auto presets = energy_presets();
  REQUIRE(presets.size() == 5);
  for (const auto& p : presets) {
    CHECK_NOTHROW(p.validate());
    // synaptic = neural / 10 everywhere except graphene's published 30 fJ
    if (p.name == "graphene-lif") {
      CHECK(p.e_s_zj == 30'000'000);
    } else {
      CHECK(p.e_s_zj * 10 == p.e_n_zj);
    }
  }
  CHECK(energy_preset("btbt-lif").e_n_zj == 1'900'000);
  CHECK(energy_preset("graphene-lif").e_n_zj == 400'000'000);
  CHECK(energy_preset("cmos-benchmark-lif").e_n_zj == 2'180'000'000);
  CHECK(energy_preset("bimos-lif").e_n_zj == 180'000'000);
  CHECK(energy_preset("tfet-lif").e_n_zj == 1'500);
  CHECK_THROWS_AS(energy_preset("memristor"), DomainError);

  NeuronEnergyProfile bad{"x", 0, 10, ""};
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("energy estimate is exact integer arithmetic") {
  const SpikeCounters counters{kNeural, kSynaptic};
  for (const auto& p : energy_presets()) {
    const EnergyBreakdown b = estimate_energy(counters, p);
    // independent 128-bit recomputation
    const auto wide_n = static_cast<unsigned __int128>(p.e_n_zj) * kNeural;
    const auto wide_s = static_cast<unsigned __int128>(p.e_s_zj) * kSynaptic;
    CHECK(static_cast<unsigned __int128>(b.neural_zj) == wide_n);
    CHECK(static_cast<unsigned __int128>(b.synaptic_zj) == wide_s);
    CHECK(static_cast<unsigned __int128>(b.total_zj) == wide_n + wide_s);
  }

  // spot values for the cheapest and the reference profile
  const EnergyBreakdown btbt = estimate_energy(counters, energy_preset("btbt-lif"));
  CHECK(btbt.neural_zj == 28'500'000'000);
  CHECK(btbt.synaptic_zj == 174'040'000'000);
  CHECK(btbt.total_zj == 202'540'000'000);
  const EnergyBreakdown tfet = estimate_energy(counters, energy_preset("tfet-lif"));
  CHECK(tfet.neural_zj == 22'500'000);
  CHECK(tfet.synaptic_zj == 137'400'000);
  CHECK(tfet.total_zj == 159'900'000);

  SUBCASE("bilinear in the counters") {
    const SpikeCounters a{101, 999}, b{57, 13};
    const auto& p = energy_preset("bimos-lif");
    const EnergyBreakdown ea = estimate_energy(a, p);
    const EnergyBreakdown eb = estimate_energy(b, p);
    const EnergyBreakdown es = estimate_energy({a.neural + b.neural, a.synaptic + b.synaptic}, p);
    CHECK(es.neural_zj == ea.neural_zj + eb.neural_zj);
    CHECK(es.synaptic_zj == ea.synaptic_zj + eb.synaptic_zj);
    CHECK(es.total_zj == ea.total_zj + eb.total_zj);
  }
  SUBCASE("overflow aborts loudly") {
    const SpikeCounters huge{std::uint64_t(1) << 62, 1};
    CHECK_THROWS_AS(estimate_energy(huge, energy_preset("cmos-benchmark-lif")), NumericError);
  }
}

TEST_CASE("energy and power formatting") {
  CHECK(format_energy_zj(0) == "0 zJ");
  CHECK(format_energy_zj(999) == "999 zJ");
  CHECK(format_energy_zj(1000) == "1 aJ");
  CHECK(format_energy_zj(1'500) == "2 aJ"); // half away from zero
  CHECK(format_energy_zj(22'500'000) == "23 fJ");
  CHECK(format_energy_zj(137'400'000) == "137 fJ");
  CHECK(format_energy_zj(159'900'000) == "160 fJ");
  CHECK(format_energy_zj(28'500'000'000) == "29 pJ");
  CHECK(format_energy_zj(174'040'000'000) == "174 pJ");
  CHECK(format_energy_zj(202'540'000'000) == "203 pJ");
  CHECK(format_energy_zj(-22'500'000) == "-23 fJ");
  CHECK(format_energy_zj(2'000'000'000'000'000'000) == "2 mJ");

  CHECK(format_power_w(6.12e-9) == "6.12 nW");
  CHECK(format_power_w(0.0) == "0 W");
  CHECK(format_power_w(0.5) == "500 mW");
  CHECK(format_power_w(2.5e-6) == "2.5 uW");
  CHECK(format_power_w(1.0) == "1 W");

  SUBCASE("power scaling") {
    CHECK(power_at_fps(204e-12, 30.0) == doctest::Approx(6.12e-9).epsilon(1e-15));
    CHECK(format_power_w(power_at_fps(204e-12, 30.0)) == "6.12 nW");
    CHECK(power_at_fps(1.0, 2.0) == 2.0);
    CHECK_THROWS_AS(power_at_fps(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(power_at_fps(-1.0, 30.0), DomainError);
  }
  SUBCASE("synaptic derivation") {
    CHECK(derive_synaptic_energy(1'900'000, 10.0) == 190'000);
    CHECK(derive_synaptic_energy(1'000'003, 3.0) == 333'334);
    CHECK_THROWS_AS(derive_synaptic_energy(0, 10.0), DomainError);
    CHECK_THROWS_AS(derive_synaptic_energy(100, 0.0), DomainError);
  }
  SUBCASE("csv report") {
    const auto dir = temp_dir("energy");
    const auto f = dir / "energy.csv";
    write_energy_report(f, {kNeural, kSynaptic}, energy_presets(), 30.0);
    const std::string text = slurp(f);
    CHECK(text.find("profile,e_n,e_s,") == 0);
    CHECK(text.find("btbt-lif") != std::string::npos);
    CHECK(text.find("203 pJ") != std::string::npos);
    CHECK(text.find("160 fJ") != std::string::npos);
    // header + five preset rows
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("real frame sets load, validate and round trip") {
  RealFrameSet set;
  set.width = 8;
  set.height = 4;
  set.n_frames = 90;
  set.code_to_ps = 2.5;
  set.records = {{0, 0, 0, 100}, {1, 7, 3, 220}, {89, 3, 2, 0}};

  CHECK_NOTHROW(set.validate());
  SUBCASE("bad coordinates and frames rejected") {
    RealFrameSet bad = set;
    bad.records.push_back({0, 8, 0, 1});
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = set;
    bad.records.push_back({90, 0, 0, 1});
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = set;
    bad.code_to_ps = 0.0;
    CHECK_THROWS_AS(bad.validate(), DataError);
  }
  SUBCASE("text form round trips") {
    const auto dir = temp_dir("text");
    const auto f = dir / "frames.txt";
    save_real_frames_text(f, set);
    const RealFrameSet back = load_real_frames_text(f);
    CHECK(back.width == set.width);
    CHECK(back.height == set.height);
    CHECK(back.n_frames == set.n_frames);
    CHECK(back.code_to_ps == set.code_to_ps);
    REQUIRE(back.records.size() == 3);
    CHECK(back.records[1].code == 220);
    CHECK(back.records[1].x == 7);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("text parser errors carry line context") {
    const auto dir = temp_dir("badtext");
    const auto f = dir / "frames.txt";
    std::ofstream(f) << "width 8\nheight 4\nn_frames 90\ncode_to_ps 2.5\nrecords\n1,2\n";
    CHECK_THROWS_AS(load_real_frames_text(f), DataError);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("packed form is byte stable") {
    const auto dir = temp_dir("packed");
    const auto f1 = dir / "a.rfs";
    const auto f2 = dir / "b.rfs";
    save_real_frames_packed(f1, set);
    const RealFrameSet back = load_real_frames_packed(f1);
    save_real_frames_packed(f2, back);
    CHECK(slurp(f1) == slurp(f2));
    CHECK(back.records.size() == set.records.size());
    std::ofstream(f1, std::ios::binary) << "JUNKJUNK";
    CHECK_THROWS_AS(load_real_frames_packed(f1), DataError);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("reformatting stacks frames into the cycle structure") {
  ToolConfig cfg; // default sensor: 86,000 ps cycles, 4,300 ps dead time
  RealFrameSet set;
  set.width = 4;
  set.height = 4;
  set.n_frames = 90;
  set.code_to_ps = 1.0;

  ReformatOptions opts; // 45 frames per exposure, group 4, x3 stretch

  SUBCASE("timestamp transform: shift by whole cycles, scale the code") {
    set.records = {{2, 1, 2, 10000}};
    const ReformatResult r = reformat_frames(set, cfg, opts);
    REQUIRE(r.exposures.size() == 2);
    CHECK(r.map_width == 1);
    CHECK(r.map_height == 1);
    const ExposureRecord& rec = r.exposures[0][0];
    const std::uint32_t lane = (2 % 4) * 4 + (1 % 4);
    REQUIRE(rec.events.per_spad.size() == 16);
    REQUIRE(rec.events.per_spad[lane].size() == 1);
    CHECK(rec.events.per_spad[lane][0] == 2 * 86000 + 30000); // 202,000 ps
    CHECK(r.dropped == 0);
    CHECK(r.dead_filtered == 0);

    // exposure skeleton
    CHECK(rec.ground_truth_tof_ps == -1);
    CHECK(rec.sensor.spads_per_pixel == 16);
    CHECK(rec.optical.laser_cycles == 45);
    REQUIRE(rec.trigger_times.size() == 45);
    CHECK(rec.trigger_times[3] == 3 * 86000);
  }
  SUBCASE("alternate transform order scales the shifted time") {
    set.records = {{2, 1, 2, 10000}};
    ReformatOptions alt = opts;
    alt.scale_after_shift = true;
    const ReformatResult r = reformat_frames(set, cfg, alt);
    CHECK(r.exposures[0][0].events.per_spad[(2 % 4) * 4 + 1][0] ==
          static_cast<Ps>(std::llround(3.0 * (2.0 * 86000.0 + 10000.0))));
  }
  SUBCASE("records land in the right exposure and excess time is dropped") {
    set.records = {
        {0, 0, 0, 100},   // exposure 0
        {44, 0, 0, 100},  // exposure 0, cycle 44
        {45, 0, 0, 100},  // exposure 1
        {89, 0, 0, 100},  // exposure 1
        {10, 0, 0, 0},    // exposure 0
        {0, 0, 0, 2000000}, // scaled far past one cycle but within the window
    };
    const ReformatResult r = reformat_frames(set, cfg, opts);
    std::size_t placed = 0;
    for (const auto& grid : r.exposures) {
      for (const auto& rec : grid) {
        for (const auto& lane : rec.events.per_spad) placed += lane.size();
      }
    }
    CHECK(placed + r.dropped + r.dead_filtered == set.records.size());
    CHECK(r.exposures[0][0].events.total_events() +
              r.exposures[1][0].events.total_events() ==
          placed);
    // 0 + 3x2,000,000 = 6,000,000 > 45 * 86,000 = 3,870,000 -> dropped
    CHECK(r.dropped == 1);
  }
  SUBCASE("pooled codes violating the dead time are filtered") {
    set.records = {{0, 0, 0, 1000}, {0, 0, 0, 1400}}; // 3,000 vs 4,200: gap 1,200 < 4,300
    const ReformatResult r = reformat_frames(set, cfg, opts);
    CHECK(r.dead_filtered == 1);
    CHECK(r.exposures[0][0].events.per_spad[0].size() == 1);
    CHECK(r.exposures[0][0].events.per_spad[0][0] == 3000);
  }
  SUBCASE("structural errors") {
    RealFrameSet bad = set;
    bad.width = 6; // not divisible by 4
    CHECK_THROWS_AS(reformat_frames(bad, cfg, opts), DataError);
    ReformatOptions o2 = opts;
    o2.frames_per_exposure = 100; // more than n_frames
    CHECK_THROWS_AS(reformat_frames(set, cfg, o2), DataError);
    o2 = opts;
    o2.time_scale = 0.0;
    CHECK_THROWS_AS(reformat_frames(set, cfg, o2), DomainError);
  }
}

TEST_CASE("depth maps from macropixel grids") {
  ToolConfig cfg;
  // one clean return per cycle at the 3 m round-trip time on every lane
  const Ps tof = static_cast<Ps>(std::llround(depth_to_tof_ps(3.0)));

  auto make_rec = [&](bool with_events) {
    ExposureRecord rec;
    rec.optical = cfg.optical;
    rec.sensor = cfg.sensor;
    rec.ground_truth_tof_ps = -1;
    rec.trigger_times.resize(45);
    for (int k = 0; k < 45; ++k) rec.trigger_times[k] = static_cast<Ps>(k) * 86000;
    rec.events.per_spad.assign(16, {});
    if (with_events) {
      for (int k = 0; k < 45; ++k) {
        rec.events.per_spad[k % 16].push_back(static_cast<Ps>(k) * 86000 + tof);
      }
    }
    return rec;
  };

  SUBCASE("flat wall: every macropixel reads the same depth") {
    const std::vector<ExposureRecord> grid = {make_rec(true), make_rec(true),
                                              make_rec(true), make_rec(false)};
    const DepthMap map = render_depth_map_com(grid, 2, 2, default_com_window_halfwidth, 1);
    CHECK(map.width == 2);
    CHECK(map.height == 2);
    CHECK(map.at(0, 0) == doctest::Approx(3.0).epsilon(0.08 / 3.0));
    CHECK(map.at(1, 0) == map.at(0, 0));
    CHECK(map.at(0, 1) == map.at(0, 0));
    CHECK(std::isnan(map.at(1, 1))); // empty macropixel -> sentinel

    SUBCASE("csv writer emits the full grid") {
      const auto dir = temp_dir("map");
      write_depth_csv(dir / "m.csv", map);
      const std::string text = slurp(dir / "m.csv");
      CHECK(std::count(text.begin(), text.end(), '\n') == 2);
      CHECK(std::count(text.begin(), text.end(), ',') == 2);
      CHECK(text.find("nan") != std::string::npos);
      std::filesystem::remove_all(dir);
    }
    SUBCASE("pgm writer quantizes to millimetres with a sentinel") {
      const auto dir = temp_dir("pgm");
      write_depth_pgm(dir / "m.pgm", map);
      const std::string bytes = slurp(dir / "m.pgm");
      const std::string header = "P5\n2 2\n65535\n";
      REQUIRE(bytes.size() == header.size() + 8);
      CHECK(bytes.compare(0, header.size(), header) == 0);
      const auto px = [&](int i) {
        const std::size_t o = header.size() + 2 * static_cast<std::size_t>(i);
        return (static_cast<unsigned>(static_cast<unsigned char>(bytes[o])) << 8) |
               static_cast<unsigned>(static_cast<unsigned char>(bytes[o + 1]));
      };
      CHECK(px(0) == static_cast<unsigned>(std::llround(map.at(0, 0) * 1000.0)));
      CHECK(px(3) == 65535u);
      std::filesystem::remove_all(dir);
    }
  }
  SUBCASE("snn map: silent spiking macropixels become sentinels") {
    NetworkConfig ncfg;
    ncfg.enc_per_channel = 3;
    ncfg.n_hidden = 2;
    ncfg.memory_order = 4;
    ncfg.theta_steps = 100.0;
    const NetworkParams net = to_spiking_mode(init_network(ncfg, cfg.sensor, 5));
    ExposureRecord quiet = make_rec(false);
    quiet.trigger_times.clear();
    quiet.optical.laser_cycles = 2;
    quiet.trigger_times = {0, 86000};
    const std::vector<ExposureRecord> grid = {quiet};
    const DepthMap map = render_depth_map_snn(grid, 1, 1, net, Combiner::level_sst, 1);
    CHECK(map.width == 1);
    // zero input with zero-bias spiking start-up: either silent (sentinel) or
    // a finite readout; both must be stable across calls
    const DepthMap again = render_depth_map_snn(grid, 1, 1, net, Combiner::level_sst, 1);
    if (std::isnan(map.at(0, 0))) {
      CHECK(std::isnan(again.at(0, 0)));
    } else {
      CHECK(map.at(0, 0) == again.at(0, 0));
    }
  }
  SUBCASE("grid size must match the map dimensions") {
    const std::vector<ExposureRecord> grid = {make_rec(true)};
    CHECK_THROWS_AS(render_depth_map_com(grid, 2, 2, 8, 1), ContractViolation);
  }
}
