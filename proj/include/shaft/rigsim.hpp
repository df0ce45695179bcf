#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "shaft/data.hpp"

namespace shaft {

/// Attached unbalance weight. Tolerances and the published factor uncertainty
/// are stored as given; they are not propagated.
struct UnbalanceSpec {
  double mass_g = 0.0;
  double mass_tol_g = 0.0;
  double radius_mm = 0.0;
  double radius_tol_mm = 0.0;
  double factor_uncertainty = 0.0;  // mm*g, as published

  [[nodiscard]] double factor() const noexcept { return mass_g * radius_mm; }

  /// Weight at 23 mm radius giving `factor` mm*g.
  static UnbalanceSpec from_factor(double factor);
};

/// The five unbalance settings used for datasets 0..4.
UnbalanceSpec table1_unbalance(int strength);

struct VoltageStep {
  double volts = 0.0;
  double seconds = 0.0;
};

struct VoltageProfile {
  std::vector<VoltageStep> steps;
  int repetitions = 1;

  [[nodiscard]] double duration_s() const;
  void validate() const;
};

inline constexpr double kMinVoltage = 2.0;
inline constexpr double kMaxVoltage = 10.05;

/// Speed set point of the motor controller: 212 RPM/V * v + 209 RPM.
double rpm_from_voltage(double volts);

inline constexpr double kStepSeconds = 20.0;

/// Development: 2.0 V -> 10.05 V in 0.05 V steps; Evaluation: 4.0 V -> 8.1 V in
/// 0.1 V steps. Every step holds for `step_seconds`, the ramp runs twice.
/// Shorter steps give a desk-scale version of the same profile.
VoltageProfile make_profile(Role role, double step_seconds = kStepSeconds);

/// |F| = m r omega^2 in SI units.
constexpr double centrifugal_force(double mass_kg, double radius_m, double omega_rad_s) noexcept {
  return mass_kg * radius_m * omega_rad_s * omega_rad_s;
}

constexpr double unbalance_factor(double mass_g, double radius_mm) noexcept { return mass_g * radius_mm; }

constexpr double rpm_to_rad_s(double rpm) noexcept { return rpm * 2.0 * 3.14159265358979323846 / 60.0; }

struct ResonanceBand {
  double center_rpm = 0.0;
  double width_rpm = 1.0;
  double gain = 1.0;
};

struct SimConfig {
  UnbalanceSpec unbalance;
  VoltageProfile profile;
  double base_noise_sigma = 0.01;
  double noise_cutoff_hz = 1000.0;
  std::vector<double> harmonic_gains = {1.0, 0.3, 0.1};
  std::vector<ResonanceBand> resonance_bands = {{1150.0, 100.0, 3.0}, {1550.0, 100.0, 3.0}};
  /// Relative gain and phase perturbation drawn once per recording for the
  /// Evaluation role (the unbalance was dismantled and re-mounted).
  double remount_jitter = 0.05;
  std::array<double, 3> channel_gains = {1.0, 0.7, 0.5};
  double rpm_time_constant_s = 1.0;
  double rpm_noise_sigma = 2.0;
  /// Synchronous amplitude reached at `reference_rpm` by `reference_factor`.
  double reference_amplitude = 0.1;
  double reference_factor = 152.1;
  double reference_rpm = 2300.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Table 1 unbalance, role-specific profile and a per-dataset seed derived
/// from `base_seed`.
SimConfig default_sim_config(DatasetId id, std::uint64_t base_seed, double step_seconds = kStepSeconds);

/// Multiplier applied to the noise floor at a given speed.
double resonance_gain(const SimConfig& cfg, double rpm);

Recording simulate(const SimConfig& cfg, DatasetId id);

}  // namespace shaft
