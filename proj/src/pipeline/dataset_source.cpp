#include <set>

#include "shaft/error.hpp"
#include "shaft/pipeline.hpp"

namespace shaft::pipeline {

Recording DirectorySource::load(DatasetId id) const {
  const auto path = dir_ / id.filename();
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingDataset, "dataset " + id.str() + " not found at " + path.string());
  return load_recording(path, id);
}

json DirectorySource::describe() const { return {{"kind", "directory"}, {"path", dir_.string()}}; }

SimConfig SyntheticPlan::config_for(DatasetId id) const {
  SimConfig cfg = physics;
  const SimConfig base = default_sim_config(id, seed, step_seconds);
  cfg.unbalance = base.unbalance;
  cfg.profile = base.profile;
  cfg.seed = base.seed;
  if (auto it = factor_overrides.find(id.strength); it != factor_overrides.end())
    cfg.unbalance = UnbalanceSpec::from_factor(it->second);
  return cfg;
}

Recording SyntheticSource::load(DatasetId id) const { return simulate(plan_.config_for(id), id); }

json SyntheticSource::describe() const {
  json j = encode(plan_);
  j["kind"] = "synthetic";
  return j;
}

json encode(const SimConfig& c) {
  json bands = json::array();
  for (const auto& b : c.resonance_bands)
    bands.push_back({{"center_rpm", b.center_rpm}, {"width_rpm", b.width_rpm}, {"gain", b.gain}});
  return {{"base_noise_sigma", c.base_noise_sigma},
          {"noise_cutoff_hz", c.noise_cutoff_hz},
          {"harmonic_gains", c.harmonic_gains},
          {"resonance_bands", bands},
          {"remount_jitter", c.remount_jitter},
          {"channel_gains", c.channel_gains},
          {"rpm_time_constant_s", c.rpm_time_constant_s},
          {"rpm_noise_sigma", c.rpm_noise_sigma},
          {"reference_amplitude", c.reference_amplitude},
          {"reference_factor", c.reference_factor},
          {"reference_rpm", c.reference_rpm}};
}

SimConfig decode_sim_physics(const json& j) {
  if (!j.is_object()) fail(ErrorCode::BadParams, "simulator physics must be a JSON object");
  static const std::set<std::string> known = {
      "base_noise_sigma", "noise_cutoff_hz",   "harmonic_gains",      "resonance_bands",
      "remount_jitter",   "channel_gains",     "rpm_time_constant_s", "rpm_noise_sigma",
      "reference_amplitude", "reference_factor", "reference_rpm"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) fail(ErrorCode::BadParams, "unknown simulator parameter '" + k + "'");
  SimConfig c;
  try {
    auto get = [&](const char* key, auto& into) {
      if (j.contains(key)) j.at(key).get_to(into);
    };
    get("base_noise_sigma", c.base_noise_sigma);
    get("noise_cutoff_hz", c.noise_cutoff_hz);
    get("harmonic_gains", c.harmonic_gains);
    get("remount_jitter", c.remount_jitter);
    get("channel_gains", c.channel_gains);
    get("rpm_time_constant_s", c.rpm_time_constant_s);
    get("rpm_noise_sigma", c.rpm_noise_sigma);
    get("reference_amplitude", c.reference_amplitude);
    get("reference_factor", c.reference_factor);
    get("reference_rpm", c.reference_rpm);
    if (j.contains("resonance_bands")) {
      c.resonance_bands.clear();
      for (const auto& b : j.at("resonance_bands"))
        c.resonance_bands.push_back(
            {b.at("center_rpm").get<double>(), b.at("width_rpm").get<double>(), b.at("gain").get<double>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::BadParams, std::string("bad simulator parameter: ") + e.what());
  }
  return c;
}

json encode(const SyntheticPlan& p) {
  json factors = json::object();
  for (const auto& [k, f] : p.factor_overrides) factors[std::to_string(k)] = f;
  return {{"seed", p.seed}, {"step_seconds", p.step_seconds}, {"factors", factors}, {"physics", encode(p.physics)}};
}

SyntheticPlan decode_synthetic_plan(const json& j) {
  if (!j.is_object()) fail(ErrorCode::BadParams, "simulation plan must be a JSON object");
  SyntheticPlan p;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "seed") {
        p.seed = v.get<std::uint64_t>();
      } else if (k == "step_seconds") {
        p.step_seconds = v.get<double>();
      } else if (k == "factors") {
        for (const auto& [sk, f] : v.items()) {
          const int strength = parse_dataset_id(sk + "D").strength;
          const double factor = f.get<double>();
          if (!(factor >= 0.0)) fail(ErrorCode::BadParams, "unbalance factor must be >= 0");
          p.factor_overrides[strength] = factor;
        }
      } else if (k == "physics") {
        p.physics = decode_sim_physics(v);
      } else if (k != "kind") {
        fail(ErrorCode::BadParams, "unknown simulation plan key '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::BadParams, std::string("bad simulation plan: ") + e.what());
  }
  if (!(p.step_seconds > 0.0)) fail(ErrorCode::BadParams, "step_seconds must be > 0");
  return p;
}

}  // namespace shaft::pipeline
