#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "shaft/dsp.hpp"
#include "shaft/error.hpp"
#include "shaft/rigsim.hpp"

using namespace shaft;

namespace {

SimConfig steady(double rpm, double factor, double seconds = 4.0) {
  SimConfig cfg;
  cfg.unbalance = UnbalanceSpec::from_factor(factor);
  cfg.profile.steps = {{(rpm - 209.0) / 212.0, seconds}};
  cfg.profile.repetitions = 1;
  cfg.base_noise_sigma = 0.0;
  cfg.rpm_noise_sigma = 0.0;
  cfg.rpm_time_constant_s = 0.0;
  cfg.seed = 99;
  return cfg;
}

double peak_at(const Recording& r, std::size_t bin, std::size_t window_index = 1) {
  const auto ws = window(r);
  return dsp::rfft_magnitudes(ws.at(window_index).values).magnitudes.at(bin);
}

}  // namespace

TEST_CASE("speed map") {
  CHECK(rpm_from_voltage(2.0) == doctest::Approx(633.0));
  CHECK(rpm_from_voltage(10.0) == doctest::Approx(2329.0));
  CHECK(rpm_from_voltage(6.0) == doctest::Approx(1481.0));
  CHECK(rpm_from_voltage(10.05) == doctest::Approx(2339.6));
  CHECK_THROWS_AS(rpm_from_voltage(1.99), Error);
  CHECK_THROWS_AS(rpm_from_voltage(10.1), Error);
}

TEST_CASE("voltage profiles") {
  const auto dev = make_profile(Role::Development);
  CHECK(dev.steps.size() == 162);
  CHECK(dev.repetitions == 2);
  CHECK(dev.steps.front().volts == 2.0);
  CHECK(dev.steps.back().volts == doctest::Approx(10.05).epsilon(1e-12));
  CHECK(dev.steps.front().seconds == 20.0);
  CHECK(dev.duration_s() == doctest::Approx(6480.0));
  for (std::size_t i = 1; i < dev.steps.size(); ++i)
    CHECK(dev.steps[i].volts - dev.steps[i - 1].volts == doctest::Approx(0.05));

  const auto ev = make_profile(Role::Evaluation);
  CHECK(ev.steps.size() == 42);
  CHECK(ev.steps.front().volts == 4.0);
  CHECK(ev.steps.back().volts == doctest::Approx(8.1).epsilon(1e-12));
  CHECK(ev.repetitions == 2);
  CHECK(ev.duration_s() == doctest::Approx(1680.0));

  CHECK(make_profile(Role::Development, 2.0).duration_s() == doctest::Approx(648.0));
  CHECK_THROWS_AS(make_profile(Role::Development, 0.0), Error);
}

TEST_CASE("centrifugal force and unbalance factor") {
  CHECK(centrifugal_force(0.003281, 0.023, 0.0) == 0.0);
  const double w = rpm_to_rad_s(2330.0);
  CHECK(w == doctest::Approx(244.0).epsilon(1e-3));
  CHECK(centrifugal_force(0.003281, 0.023, w) == doctest::Approx(4.49).epsilon(2e-3));
  CHECK(centrifugal_force(2 * 0.003281, 0.023, w) == doctest::Approx(2 * centrifugal_force(0.003281, 0.023, w)));

  CHECK(unbalance_factor(3.281, 14.0) == doctest::Approx(45.93).epsilon(1e-4));
  CHECK(unbalance_factor(6.614, 23.0) == doctest::Approx(152.1).epsilon(1e-3));
  CHECK(unbalance_factor(0.0, 23.0) == 0.0);

  const double published[] = {0.0, 45.9, 60.7, 75.5, 152.1};
  for (int k = 0; k <= 4; ++k) {
    const auto u = table1_unbalance(k);
    CHECK(std::abs(u.factor() - published[k]) < 0.05);
    CHECK((u.factor() == 0.0) == (u.mass_g == 0.0));
  }
  CHECK(table1_unbalance(1).factor_uncertainty == 1.4);
  CHECK(table1_unbalance(4).mass_tol_g == 0.007);
  CHECK(UnbalanceSpec::from_factor(60.7).factor() == doctest::Approx(60.7).epsilon(1e-12));
  CHECK_THROWS_AS(table1_unbalance(5), Error);
}

TEST_CASE("resonance gain") {
  const SimConfig cfg;
  CHECK(resonance_gain(cfg, 1150.0) == doctest::Approx(3.0));
  CHECK(resonance_gain(cfg, 1550.0) == doctest::Approx(3.0));
  CHECK(resonance_gain(cfg, 1300.0) == 1.0);
  CHECK(resonance_gain(cfg, 1200.0) == doctest::Approx(1.0));
  const double mid = resonance_gain(cfg, 1175.0);
  CHECK(mid > 1.0);
  CHECK(mid < 3.0);
}

TEST_CASE("zero unbalance and zero noise give silent channels") {
  auto cfg = steady(1500.0, 0.0);
  const auto r = simulate(cfg, {0, Role::Development});
  CHECK(r.size() == 4 * 4096);
  CHECK(std::all_of(r.vib1.begin(), r.vib1.end(), [](double v) { return v == 0.0; }));
  CHECK(std::all_of(r.vib3.begin(), r.vib3.end(), [](double v) { return v == 0.0; }));
  CHECK(r.measured_rpm[100] == doctest::Approx(1500.0));
}

TEST_CASE("simulation is deterministic") {
  auto cfg = default_sim_config({2, Role::Development}, 5, 0.5);
  const auto a = simulate(cfg, {2, Role::Development});
  const auto b = simulate(cfg, {2, Role::Development});
  CHECK(a.vib1 == b.vib1);
  CHECK(a.vib2 == b.vib2);
  CHECK(a.vib3 == b.vib3);
  CHECK(a.measured_rpm == b.measured_rpm);
  CHECK(std::get<Synthetic>(a.source).seed == cfg.seed);
  cfg.seed += 1;
  const auto c = simulate(cfg, {2, Role::Development});
  CHECK(c.vib1 != a.vib1);
  CHECK(default_sim_config({2, Role::Development}, 5).seed != default_sim_config({2, Role::Evaluation}, 5).seed);
}

TEST_CASE("synchronous peak sits at the rotation frequency and scales with factor and speed") {
  const auto strong = simulate(steady(1500.0, 152.1), {4, Role::Development});
  const auto weak = simulate(steady(1500.0, 45.9), {1, Role::Development});
  const auto spec = dsp::rfft_magnitudes(window(strong).at(1).values).magnitudes;
  const auto top = static_cast<std::size_t>(std::max_element(spec.begin(), spec.end()) - spec.begin());
  CHECK(top == 25);
  CHECK(peak_at(strong, 25) / peak_at(weak, 25) == doctest::Approx(152.1 / 45.9).epsilon(0.01));
  CHECK(peak_at(strong, 25) / peak_at(weak, 25) == doctest::Approx(3.314).epsilon(0.01));

  const auto faster = simulate(steady(1800.0, 152.1), {4, Role::Development});
  CHECK(peak_at(faster, 30) / peak_at(strong, 25) == doctest::Approx(std::pow(1800.0 / 1500.0, 2)).epsilon(0.01));

  // harmonics follow their configured gains
  CHECK(peak_at(strong, 50) / peak_at(strong, 25) == doctest::Approx(0.3).epsilon(0.01));
  CHECK(peak_at(strong, 75) / peak_at(strong, 25) == doctest::Approx(0.1).epsilon(0.01));

  // amplitude normalization: factor 152.1 at 2300 RPM gives amplitude 0.1 on sensor 1
  auto ref = steady(2300.0, 152.1);
  ref.harmonic_gains = {1.0};
  const auto r = simulate(ref, {4, Role::Development});
  const double peak = *std::max_element(r.vib1.begin(), r.vib1.end());
  CHECK(peak == doctest::Approx(0.1).epsilon(1e-3));
}

TEST_CASE("roles differ only through remount jitter") {
  auto cfg = default_sim_config({3, Role::Development}, 11, 0.5);
  cfg.remount_jitter = 0.0;
  const auto d = simulate(cfg, {3, Role::Development});
  const auto e = simulate(cfg, {3, Role::Evaluation});
  CHECK(d.vib1 == e.vib1);
  CHECK(d.vib2 == e.vib2);
  CHECK(d.measured_rpm == e.measured_rpm);
  cfg.remount_jitter = 0.05;
  const auto d2 = simulate(cfg, {3, Role::Development});
  const auto e2 = simulate(cfg, {3, Role::Evaluation});
  CHECK(d2.vib1 == d.vib1);
  CHECK(e2.vib1 != d2.vib1);
  CHECK(e2.measured_rpm == d2.measured_rpm);
}

TEST_CASE("measured rpm follows the lagged set point") {
  auto cfg = default_sim_config({0, Role::Development}, 3, 10.0);
  const auto r = simulate(cfg, {0, Role::Development});
  CHECK(r.measured_rpm.front() < 50.0);  // starts from rest
  // end of the first step: settled on 633 RPM
  double m = 0.0;
  const std::size_t end = 10 * 4096;
  for (std::size_t i = end - 4096; i < end; ++i) m += r.measured_rpm[i];
  CHECK(m / 4096.0 == doctest::Approx(633.0).epsilon(1e-3));
  CHECK(r.v_in[end - 1] == 2.0);
  CHECK(r.v_in[end] == doctest::Approx(2.05));
  CHECK(std::all_of(r.measured_rpm.begin(), r.measured_rpm.end(), [](double v) { return v >= 0.0; }));
}

TEST_CASE("config validation") {
  SimConfig cfg = steady(1500.0, 10.0);
  cfg.base_noise_sigma = -1.0;
  CHECK_THROWS_AS(simulate(cfg, {1, Role::Development}), Error);
  cfg = steady(1500.0, 10.0);
  cfg.resonance_bands = {{1000.0, 0.0, 2.0}};
  CHECK_THROWS_AS(simulate(cfg, {1, Role::Development}), Error);
  cfg = steady(1500.0, 10.0);
  cfg.profile.steps = {{11.0, 1.0}};
  try {
    simulate(cfg, {1, Role::Development});
    FAIL("expected OutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRange);
  }
}

TEST_CASE("full-length development recording yields the expected window count") {
  const auto cfg = default_sim_config({0, Role::Development}, 1);
  const auto r = simulate(cfg, {0, Role::Development});
  CHECK(r.size() == 6480u * 4096u);
  const std::size_t windows = window_count(r.size() - kWarmupSamples);
  CHECK(std::abs(static_cast<long>(windows) - (2 * 162 * 20 - 12)) <= 2);
}
