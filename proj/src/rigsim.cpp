#include "shaft/rigsim.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "shaft/error.hpp"
#include "shaft/rng.hpp"

namespace shaft {

UnbalanceSpec UnbalanceSpec::from_factor(double factor) {
  if (!(factor >= 0.0)) fail(ErrorCode::BadParams, "unbalance factor must be >= 0");
  UnbalanceSpec u;
  u.radius_mm = 23.0;
  u.mass_g = factor / u.radius_mm;
  return u;
}

UnbalanceSpec table1_unbalance(int strength) {
  switch (strength) {
    case 0: return {0.0, 0.0, 0.0, 0.0, 0.0};
    case 1: return {3.281, 0.003, 14.0, 0.1, 1.4};
    case 2: return {3.281, 0.003, 18.5, 0.1, 1.9};
    case 3: return {3.281, 0.003, 23.0, 0.1, 2.3};
    case 4: return {6.614, 0.007, 23.0, 0.1, 2.3};
    default: fail(ErrorCode::BadId, "unbalance strength must be 0..4");
  }
}

double VoltageProfile::duration_s() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.seconds;
  return total * repetitions;
}

void VoltageProfile::validate() const {
  if (steps.empty() || repetitions < 1) fail(ErrorCode::BadParams, "voltage profile is empty");
  for (const auto& s : steps) {
    if (s.volts < kMinVoltage - 1e-9 || s.volts > kMaxVoltage + 1e-9)
      fail(ErrorCode::OutOfRange, "profile voltage " + std::to_string(s.volts) + " outside [2.0, 10.05] V");
    if (!(s.seconds > 0.0)) fail(ErrorCode::BadParams, "profile step durations must be > 0");
  }
}

double rpm_from_voltage(double volts) {
  if (!(volts >= kMinVoltage - 1e-9 && volts <= kMaxVoltage + 1e-9))
    fail(ErrorCode::OutOfRange, "voltage " + std::to_string(volts) + " outside [2.0, 10.05] V");
  return 212.0 * volts + 209.0;
}

VoltageProfile make_profile(Role role, double step_seconds) {
  if (!(step_seconds > 0.0)) fail(ErrorCode::BadParams, "step duration must be > 0");
  // centivolts keep the grid exact
  const int start = role == Role::Development ? 200 : 400;
  const int stop = role == Role::Development ? 1005 : 810;
  const int delta = role == Role::Development ? 5 : 10;
  VoltageProfile p;
  p.repetitions = 2;
  for (int cv = start; cv <= stop; cv += delta) p.steps.push_back({cv / 100.0, step_seconds});
  return p;
}

void SimConfig::validate() const {
  profile.validate();
  if (!(base_noise_sigma >= 0.0)) fail(ErrorCode::BadParams, "noise sigma must be >= 0");
  if (!(noise_cutoff_hz > 0.0)) fail(ErrorCode::BadParams, "noise cutoff must be > 0");
  for (double g : harmonic_gains)
    if (!(g >= 0.0)) fail(ErrorCode::BadParams, "harmonic gains must be >= 0");
  for (double g : channel_gains)
    if (!(g >= 0.0)) fail(ErrorCode::BadParams, "channel gains must be >= 0");
  for (const auto& b : resonance_bands)
    if (!(b.width_rpm > 0.0) || !(b.gain >= 0.0)) fail(ErrorCode::BadParams, "bad resonance band");
  if (!(remount_jitter >= 0.0)) fail(ErrorCode::BadParams, "remount jitter must be >= 0");
  if (!(rpm_time_constant_s >= 0.0) || !(rpm_noise_sigma >= 0.0))
    fail(ErrorCode::BadParams, "bad RPM dynamics");
  if (!(reference_factor > 0.0) || !(reference_rpm > 0.0)) fail(ErrorCode::BadParams, "bad normalization");
}

SimConfig default_sim_config(DatasetId id, std::uint64_t base_seed, double step_seconds) {
  SimConfig cfg;
  cfg.unbalance = table1_unbalance(id.strength);
  cfg.profile = make_profile(id.role, step_seconds);
  cfg.seed = derive_seed(base_seed, id.str());
  return cfg;
}

double resonance_gain(const SimConfig& cfg, double rpm) {
  double g = 1.0;
  for (const auto& b : cfg.resonance_bands) {
    const double d = std::abs(rpm - b.center_rpm);
    if (d < 0.5 * b.width_rpm)
      g *= 1.0 + (b.gain - 1.0) * 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * d / b.width_rpm));
  }
  return g;
}

Recording simulate(const SimConfig& cfg, DatasetId id) {
  cfg.validate();
  constexpr double dt = 1.0 / kSampleRate;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  // voltage set point and lagged rotor speed; the motor starts at rest
  std::size_t n = 0;
  for (int rep = 0; rep < cfg.profile.repetitions; ++rep)
    for (const auto& s : cfg.profile.steps) n += static_cast<std::size_t>(std::llround(s.seconds * kSampleRate));

  Recording r;
  r.unbalance_id = id.strength;
  r.role = id.role;
  r.source = Synthetic{cfg.seed};
  r.v_in.resize(n);
  r.measured_rpm.resize(n);
  r.vib1.assign(n, 0.0);
  r.vib2.assign(n, 0.0);
  r.vib3.assign(n, 0.0);

  std::vector<double> true_rpm(n);
  {
    const double alpha = cfg.rpm_time_constant_s > 0.0 ? 1.0 - std::exp(-dt / cfg.rpm_time_constant_s) : 1.0;
    double rpm = 0.0;
    std::size_t i = 0;
    for (int rep = 0; rep < cfg.profile.repetitions; ++rep) {
      for (const auto& s : cfg.profile.steps) {
        const double target = rpm_from_voltage(s.volts);
        const auto len = static_cast<std::size_t>(std::llround(s.seconds * kSampleRate));
        for (std::size_t k = 0; k < len; ++k, ++i) {
          rpm += alpha * (target - rpm);
          true_rpm[i] = rpm;
          r.v_in[i] = s.volts;
        }
      }
    }
  }

  {
    Engine eng(derive_seed(cfg.seed, "measured_rpm"));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = cfg.rpm_noise_sigma > 0.0 ? cfg.rpm_noise_sigma * noise(eng) : 0.0;
      r.measured_rpm[i] = std::max(0.0, true_rpm[i] + e);
    }
  }

  // Rotor phase is shared by all sensors.
  std::vector<double> phase(n);
  {
    double phi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      phi += rpm_to_rad_s(true_rpm[i]) * dt;
      if (phi >= two_pi) phi -= two_pi;
      phase[i] = phi;
    }
  }

  const double omega_ref = rpm_to_rad_s(cfg.reference_rpm);
  const double g1 = cfg.reference_amplitude / (cfg.reference_factor * omega_ref * omega_ref);
  const double factor = cfg.unbalance.factor();
  const double ar = std::exp(-two_pi * cfg.noise_cutoff_hz / kSampleRate);
  const double innovation = std::sqrt(1.0 - ar * ar);
  const std::size_t n_harm = cfg.harmonic_gains.size();

  std::array<std::vector<double>*, 3> out = {&r.vib1, &r.vib2, &r.vib3};

#pragma omp parallel for schedule(static)
  for (int c = 0; c < 3; ++c) {
    // Phases and gains are drawn identically for both roles; only the
    // Evaluation role applies the remount perturbation on top.
    Engine mount(derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(c)));
    Engine remount(derive_seed(cfg.seed, 200 + static_cast<std::uint64_t>(c)));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<double> gains(n_harm), offsets(n_harm);
    for (std::size_t k = 0; k < n_harm; ++k) {
      offsets[k] = std::numbers::pi * unit(mount);
      const double gain_jit = unit(remount);
      const double phase_jit = unit(remount);
      gains[k] = cfg.channel_gains[static_cast<std::size_t>(c)] * cfg.harmonic_gains[k];
      if (id.role == Role::Evaluation) {
        gains[k] *= 1.0 + cfg.remount_jitter * gain_jit;
        offsets[k] += std::numbers::pi * cfg.remount_jitter * phase_jit;
      }
    }

    Engine noise_eng(derive_seed(cfg.seed, 300 + static_cast<std::uint64_t>(c)));
    std::normal_distribution<double> noise(0.0, 1.0);
    const double sigma = cfg.base_noise_sigma * cfg.channel_gains[static_cast<std::size_t>(c)];
    double state = 0.0;
    auto& x = *out[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < n; ++i) {
      const double omega = rpm_to_rad_s(true_rpm[i]);
      const double amp = g1 * factor * omega * omega;
      double v = 0.0;
      if (amp != 0.0)
        for (std::size_t k = 0; k < n_harm; ++k)
          v += gains[k] * amp * std::sin(static_cast<double>(k + 1) * phase[i] + offsets[k]);
      if (sigma > 0.0) {
        state = ar * state + innovation * noise(noise_eng);
        v += resonance_gain(cfg, true_rpm[i]) * sigma * state;
      }
      x[i] = v;
    }
  }
  return r;
}

}  // namespace shaft
