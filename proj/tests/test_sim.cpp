#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dtof/dataset.hpp"
#include "dtof/event_sim.hpp"
#include "dtof/exposure_io.hpp"
#include "dtof/histogram.hpp"
#include "dtof/link_budget.hpp"
#include "dtof/rng.hpp"
#include "dtof/sha256.hpp"
#include "dtof/units.hpp"

using namespace dtof;

namespace {

std::filesystem::path temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() / (std::string("dtof_sim_") + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Upper chi-square quantile via the Wilson-Hilferty cube approximation.
double chi2_critical(double df, double z) {
  const double a = 2.0 / (9.0 * df);
  const double c = 1.0 - a + z * std::sqrt(a);
  return df * c * c * c;
}

// Two-sample chi-square statistic over count histograms with equal totals,
// pooling the tail so every pooled expected count is >= 5.
double two_sample_chi2(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                       std::size_t& df_out) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] = static_cast<double>(a[i]);
  for (std::size_t i = 0; i < b.size(); ++i) pb[i] = static_cast<double>(b[i]);

  std::vector<std::pair<double, double>> cats;
  double ca = 0, cb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ca += pa[i];
    cb += pb[i];
    if (ca + cb >= 10.0) { // pooled cell large enough
      cats.emplace_back(ca, cb);
      ca = cb = 0;
    }
  }
  if (ca + cb > 0) {
    if (cats.empty()) cats.emplace_back(ca, cb);
    else {
      cats.back().first += ca;
      cats.back().second += cb;
    }
  }
  double stat = 0.0;
  for (const auto& [x, y] : cats) stat += (x - y) * (x - y) / (x + y);
  df_out = cats.size() - 1;
  return stat;
}

} // namespace

TEST_CASE("trigger times follow the cycle grid") {
  OpticalConfig opt;
  SensorConfig sen;
  Rng rng(3);
  const auto t = sample_trigger_times(opt, sen, rng);
  REQUIRE(t.size() == opt.laser_cycles);
  const double sigma = fwhm_to_sigma(opt.trigger_jitter_fwhm_ps);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double nominal = static_cast<double>(k) * 86000.0;
    CHECK(std::abs(static_cast<double>(t[k]) - nominal) <= 5.0 * sigma + 1.0);
  }

  SUBCASE("zero jitter is the exact grid") {
    OpticalConfig o2 = opt;
    o2.trigger_jitter_fwhm_ps = 0.0;
    Rng r2(3);
    const auto t2 = sample_trigger_times(o2, sen, r2);
    for (std::size_t k = 0; k < t2.size(); ++k) {
      CHECK(t2[k] == static_cast<Ps>(k) * 86000);
    }
  }
  SUBCASE("same seed, same stream") {
    Rng r1(5), r2(5);
    CHECK(sample_trigger_times(opt, sen, r1) == sample_trigger_times(opt, sen, r2));
  }
}

TEST_CASE("ambient sampling is Poisson") {
  const Ps len = 100000;
  const double lambda = 5.0;
  const double rate = lambda / static_cast<double>(len);
  Rng rng(21);

  const int reps = 10000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < reps; ++i) {
    const auto ev = sample_ambient(rate, len, rng);
    CHECK(std::is_sorted(ev.begin(), ev.end()));
    if (!ev.empty()) {
      CHECK(ev.front() >= 0);
      CHECK(ev.back() < len);
    }
    const double n = static_cast<double>(ev.size());
    sum += n;
    sum2 += n * n;
  }
  const double mean = sum / reps;
  const double var = sum2 / reps - mean * mean;
  // 3 sigma on the mean of 10^4 Poisson(5) draws is ~0.067
  CHECK(mean == doctest::Approx(lambda).epsilon(0.07 / lambda));
  CHECK(var == doctest::Approx(lambda).epsilon(0.10));

  CHECK(sample_ambient(0.0, len, rng).empty());
}

TEST_CASE("signal sampling: count and temporal shape") {
  OpticalConfig opt;
  SensorConfig sen;
  const RateBudget budget = rate_override(2.0, 0.0);
  const SceneInstance scene{5.0, 0.7, 0.0};
  const PulseProfile profile = pulse_profile_for(opt, scene);

  std::vector<Ps> triggers(opt.laser_cycles);
  for (std::size_t k = 0; k < triggers.size(); ++k) triggers[k] = static_cast<Ps>(k) * 86000;
  const Ps len = sen.exposure_length_ps(opt.laser_cycles);

  Rng rng(77);
  const int reps = 10000;
  double total = 0.0;
  double s = 0.0, s2 = 0.0;
  std::uint64_t nrel = 0;
  for (int i = 0; i < reps; ++i) {
    const auto ev = sample_signal(budget, profile, triggers, len, rng);
    CHECK(std::is_sorted(ev.begin(), ev.end()));
    total += static_cast<double>(ev.size());
    if (nrel < 200000) {
      for (const Ps t : ev) {
        const Ps k = t / 86000;
        const double rel = static_cast<double>(t - triggers[static_cast<std::size_t>(k)]);
        s += rel;
        s2 += rel * rel;
        ++nrel;
      }
    }
  }
  // expected 2 per cycle * 45 cycles = 90; 3 sigma over 10^4 reps ~ 0.28
  CHECK(total / reps == doctest::Approx(90.0).epsilon(0.3 / 90.0));

  // arrival times are Gaussian around the pulse centre
  const double mean = s / static_cast<double>(nrel);
  const double sd = std::sqrt(s2 / static_cast<double>(nrel) - mean * mean);
  CHECK(nrel >= 100000);
  CHECK(mean == doctest::Approx(profile.mu_ps).epsilon(0.005));
  CHECK(sd == doctest::Approx(profile.sigma_ps).epsilon(0.05));
}

TEST_CASE("merge keeps order and assigns spads uniformly") {
  Rng rng(9);
  std::vector<Ps> sig = {100, 500, 900};
  std::vector<Ps> amb = {200, 500, 1500};
  const auto merged = merge_arrivals(sig, amb, 16, rng);
  REQUIRE(merged.size() == 6);
  for (std::size_t i = 1; i < merged.size(); ++i) {
    CHECK(merged[i - 1].time_ps <= merged[i].time_ps);
  }
  int nsig = 0;
  for (const auto& a : merged) {
    CHECK(a.spad_index < 16);
    if (a.origin == PhotonOrigin::signal) ++nsig;
  }
  CHECK(nsig == 3);

  // uniformity over many assignments
  std::vector<int> hits(16, 0);
  std::vector<Ps> many(160000);
  for (std::size_t i = 0; i < many.size(); ++i) many[i] = static_cast<Ps>(i);
  const auto big = merge_arrivals(many, {}, 16, rng);
  for (const auto& a : big) ++hits[a.spad_index];
  for (int h : hits) {
    CHECK(h > 9000);
    CHECK(h < 11000);
  }
}

TEST_CASE("spad front end: jitter, dead time, saturation") {
  SensorConfig sen;
  sen.spad_jitter_fwhm_ps = 0.0; // exact arithmetic below

  auto arrivals_on_spad0 = [](std::vector<Ps> ts) {
    std::vector<PhotonArrival> a;
    for (const Ps t : ts) a.push_back({t, PhotonOrigin::ambient, 0});
    return a;
  };

  Rng rng(1);
  SUBCASE("second hit inside the dead window is lost") {
    const auto ev = apply_spad(arrivals_on_spad0({1000, 3000}), sen, 86000, rng);
    CHECK(ev.per_spad[0] == std::vector<Ps>{1000});
  }
  SUBCASE("hit after recovery is kept") {
    const auto ev = apply_spad(arrivals_on_spad0({1000, 6000}), sen, 86000, rng);
    CHECK(ev.per_spad[0] == std::vector<Ps>{1000, 6000});
  }
  SUBCASE("different spads do not interact") {
    std::vector<PhotonArrival> a = {{1000, PhotonOrigin::ambient, 0},
                                    {1500, PhotonOrigin::ambient, 1}};
    const auto ev = apply_spad(a, sen, 86000, rng);
    CHECK(ev.per_spad[0] == std::vector<Ps>{1000});
    CHECK(ev.per_spad[1] == std::vector<Ps>{1500});
  }
  SUBCASE("non-paralyzable saturation: one detection per dead time") {
    const Ps len = 86000;
    std::vector<Ps> every;
    for (Ps t = 0; t < len; ++t) every.push_back(t);
    const auto ev = apply_spad(arrivals_on_spad0(every), sen, len, rng);
    // detections at 0, 4300, 8600, ...
    const auto expect = static_cast<std::size_t>((len - 1) / sen.dead_time_ps) + 1;
    CHECK(ev.per_spad[0].size() == expect);
    for (std::size_t i = 1; i < ev.per_spad[0].size(); ++i) {
      CHECK(ev.per_spad[0][i] - ev.per_spad[0][i - 1] == sen.dead_time_ps);
    }
  }
  SUBCASE("paralyzable saturation: constant light blinds the spad") {
    SensorConfig par = sen;
    par.paralyzable_dead_time = true;
    const Ps len = 86000;
    std::vector<Ps> every;
    for (Ps t = 0; t < len; ++t) every.push_back(t);
    const auto ev = apply_spad(arrivals_on_spad0(every), par, len, rng);
    CHECK(ev.per_spad[0].size() == 1);
    CHECK(ev.per_spad[0][0] == 0);
  }
  SUBCASE("jitter keeps events in window and honors dead time") {
    SensorConfig j = sen;
    j.spad_jitter_fwhm_ps = 100.0;
    std::vector<PhotonArrival> a;
    Rng gen(12);
    for (int i = 0; i < 5000; ++i) {
      a.push_back({static_cast<Ps>(gen.uniform_below(86000)), PhotonOrigin::ambient,
                   static_cast<std::uint32_t>(gen.uniform_below(16))});
    }
    std::sort(a.begin(), a.end(), [](const auto& x, const auto& y) { return x.time_ps < y.time_ps; });
    const auto ev = apply_spad(a, j, 86000, rng);
    for (const auto& s : ev.per_spad) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s[i] >= 0);
        CHECK(s[i] < 86000);
        if (i > 0) CHECK(s[i] - s[i - 1] >= j.dead_time_ps);
      }
    }
  }
}

TEST_CASE("dead-time invariant holds over a million arrivals") {
  OpticalConfig opt;
  SensorConfig sen;
  const Ps len = sen.exposure_length_ps(opt.laser_cycles); // 3.87e6 ps
  Rng rng(404);

  const auto ambient = sample_ambient(0.3, len, rng); // ~1.16e6 arrivals
  REQUIRE(ambient.size() > 1000000);
  const auto merged = merge_arrivals(ambient, {}, sen.spads_per_pixel, rng);
  const auto ev = apply_spad(merged, sen, len, rng);

  std::size_t kept = 0;
  for (const auto& s : ev.per_spad) {
    CHECK(std::is_sorted(s.begin(), s.end()));
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i > 0 && s[i] - s[i - 1] < sen.dead_time_ps) {
        FAIL("dead-time violation: gap " << (s[i] - s[i - 1]));
      }
      CHECK(s[i] >= 0);
      CHECK(s[i] < len);
    }
    kept += s.size();
  }
  // saturated regime: every spad fires roughly once per dead time
  const double per_spad = static_cast<double>(kept) / sen.spads_per_pixel;
  const double sat = static_cast<double>(len) / static_cast<double>(sen.dead_time_ps);
  CHECK(per_spad > 0.8 * sat);
  CHECK(per_spad <= sat + 1);

  // paralyzable filtering keeps strictly fewer events under this load
  SensorConfig par = sen;
  par.paralyzable_dead_time = true;
  Rng rng2(404);
  const auto evp = apply_spad(merged, par, len, rng2);
  CHECK(evp.total_events() < ev.total_events());
}

TEST_CASE("event counts match a per-picosecond Bernoulli reference") {
  // T = 100 ns window, lambda T = 3 expected events, 10^4 exposures per method
  const Ps len = 100000;
  const double rate = 3.0 / static_cast<double>(len);
  const int reps = 10000;

  std::vector<std::uint64_t> ha, hb;
  Rng ra(515);
  for (int i = 0; i < reps; ++i) {
    const std::size_t n = sample_ambient(rate, len, ra).size();
    if (n >= ha.size()) ha.resize(n + 1, 0);
    ++ha[n];
  }
  Rng rb(616);
  for (int i = 0; i < reps; ++i) {
    std::size_t n = 0;
    for (Ps t = 0; t < len; ++t) {
      if (rb.uniform() < rate) ++n;
    }
    if (n >= hb.size()) hb.resize(n + 1, 0);
    ++hb[n];
  }

  std::size_t df = 0;
  const double stat = two_sample_chi2(ha, hb, df);
  REQUIRE(df >= 1);
  const double crit = chi2_critical(static_cast<double>(df), 3.0902); // alpha = 0.001
  CHECK(stat < crit);
}

TEST_CASE("exposure simulation is deterministic and physically placed") {
  OpticalConfig opt;
  SensorConfig sen;
  const SceneInstance scene{5.0, 0.7, 1.0};

  const ExposureRecord a = simulate_exposure(opt, sen, scene, 42);
  const ExposureRecord b = simulate_exposure(opt, sen, scene, 42);
  CHECK(serialize_exposure(a) == serialize_exposure(b));
  const ExposureRecord c = simulate_exposure(opt, sen, scene, 43);
  CHECK(serialize_exposure(a) != serialize_exposure(c));
  CHECK(a.ground_truth_tof_ps == std::llround(depth_to_tof_ps(5.0)));
  CHECK(a.trigger_times.size() == opt.laser_cycles);

  SUBCASE("histogram peaks at the round-trip bin") {
    SceneInstance far{10.0, 1.0, 0.0};
    std::vector<std::uint64_t> acc(sen.histogram_bins, 0);
    for (int s = 0; s < 10; ++s) {
      const auto rec = simulate_exposure(opt, sen, far, 100 + s);
      const auto h = accumulate_histogram(rec, sen);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += h.bins[i];
    }
    const auto peak = static_cast<std::size_t>(
        std::max_element(acc.begin(), acc.end()) - acc.begin());
    const auto expect = static_cast<std::size_t>(depth_to_tof_ps(10.0) / 500.0);
    CHECK(peak >= expect - 2);
    CHECK(peak <= expect + 2);
  }
  SUBCASE("noiseless com lands within 4 cm") {
    OpticalConfig o2 = opt;
    o2.trigger_jitter_fwhm_ps = 0.0;
    SensorConfig s2 = sen;
    s2.spad_jitter_fwhm_ps = 0.0;
    const SceneInstance clean{5.0, 1.0, 0.0};
    double err_sum = 0.0;
    for (int s = 0; s < 10; ++s) {
      const auto rec = simulate_exposure(o2, s2, clean, 200 + s);
      const auto h = accumulate_histogram(rec, s2);
      err_sum += com_depth(h, default_com_window_halfwidth).depth_estimate_m - 5.0;
    }
    CHECK(std::abs(err_sum / 10.0) < 0.04);
  }
  SUBCASE("a scene with no photons yields no events") {
    OpticalConfig o2 = opt;
    o2.pulse_energy_nj = 1e-12; // effectively dark
    o2.trigger_jitter_fwhm_ps = 0.0;
    const SceneInstance dark{9.5, 0.25, 0.0};
    const auto rec = simulate_exposure(o2, sen, dark, 7);
    CHECK(rec.events.total_events() == 0);
    const auto h = accumulate_histogram(rec, sen);
    CHECK_THROWS_AS(com_depth(h, 8), DataError);
  }
}

TEST_CASE("dataset generation is reproducible byte for byte") {
  ToolConfig cfg;
  DatasetSpec spec;
  spec.mode = DatasetSpec::Mode::train;
  spec.count = 6;

  const auto d1 = temp_dir("gen1");
  const auto d2 = temp_dir("gen2");
  const auto d3 = temp_dir("gen3");
  const auto m1 = generate_dataset(cfg, spec, 5, d1, 1);
  const auto m2 = generate_dataset(cfg, spec, 5, d2, 3);
  const auto m3 = generate_dataset(cfg, spec, 6, d3, 1);

  CHECK(sha256_file_hex(d1 / "exposures.pack") == sha256_file_hex(d2 / "exposures.pack"));
  CHECK(sha256_file_hex(d1 / "manifest.json") == sha256_file_hex(d2 / "manifest.json"));
  CHECK(sha256_file_hex(d1 / "exposures.pack") != sha256_file_hex(d3 / "exposures.pack"));

  REQUIRE(m1.entries.size() == 6);
  CHECK(m1.rng_algorithm == "mt19937_64/splitmix64-derive/v1");
  CHECK(m1.master_seed == 5);
  CHECK(m2.entries.size() == m1.entries.size());

  SUBCASE("manifest round trips through json") {
    const DatasetManifest back = load_manifest(d1 / "manifest.json");
    REQUIRE(back.entries.size() == m1.entries.size());
    for (std::size_t i = 0; i < back.entries.size(); ++i) {
      CHECK(back.entries[i].sha256 == m1.entries[i].sha256);
      CHECK(back.entries[i].offset == m1.entries[i].offset);
      CHECK(back.entries[i].length == m1.entries[i].length);
      CHECK(back.entries[i].scene.depth_m == m1.entries[i].scene.depth_m);
      CHECK(back.entries[i].sim_seed == m1.entries[i].sim_seed);
    }
    CHECK(back.spec.count == 6);
    CHECK(back.config.sensor.spads_per_pixel == cfg.sensor.spads_per_pixel);
  }
  SUBCASE("entries reload and verify against their digests") {
    const DatasetManifest m = load_manifest(d1 / "manifest.json");
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      const ExposureRecord rec = load_exposure(m, d1, i);
      CHECK(rec.scene.depth_m == m.entries[i].scene.depth_m);
      CHECK(rec.seed == m.entries[i].sim_seed);
      CHECK(rec.seed == exposure_sim_seed(5, i));
    }
    const auto all = load_all_exposures(m, d1);
    REQUIRE(all.size() == 6);
    CHECK(serialize_exposure(all[2]) == serialize_exposure(load_exposure(m, d1, 2)));
  }
  SUBCASE("tampering with the pack is caught") {
    const DatasetManifest m = load_manifest(d1 / "manifest.json");
    std::fstream f(d1 / "exposures.pack",
                   std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(m.entries[0].offset + 60));
    f.put('\xaa');
    f.close();
    CHECK_THROWS_AS(load_exposure(m, d1, 0), DataError);
  }

  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
  std::filesystem::remove_all(d3);
}

TEST_CASE("test-mode dataset walks the depth grid") {
  ToolConfig cfg;
  cfg.optical.laser_cycles = 2; // keep the simulation cheap
  DatasetSpec spec;
  spec.mode = DatasetSpec::Mode::test;
  spec.count = 1;
  spec.test_ambient_klux = 0.0;

  const auto dir = temp_dir("gentest");
  const auto m = generate_dataset(cfg, spec, 11, dir, 1);
  REQUIRE(m.entries.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(m.entries[i].scene.depth_m == doctest::Approx(0.5 + 0.5 * i).epsilon(1e-12));
    CHECK(m.entries[i].scene.reflectivity == 0.4);
  }
  std::filesystem::remove_all(dir);
}
