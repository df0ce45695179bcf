#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "shaft/data.hpp"
#include "shaft/dsp.hpp"
#include "shaft/models/cnn1d.hpp"
#include "shaft/models/hmm.hpp"
#include "shaft/models/mlp.hpp"
#include "shaft/models/random_forest.hpp"
#include "shaft/rigsim.hpp"
#include "shaft/rng.hpp"

namespace shaft::pipeline {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Splits

struct DevSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Uniform random partition of 0..n-1; train gets round(frac * n) indices.
/// Both halves are returned in ascending order. Throws TooFew for n < 10.
DevSplit split_dev(std::size_t n, double frac = 0.9, std::uint64_t seed = kDefaultSeed);
/// Same, but applied within each group separately so every group keeps its
/// share on both sides.
DevSplit split_dev(std::span<const int> groups, double frac = 0.9, std::uint64_t seed = kDefaultSeed);

/// Random partition into three parts with the given proportions.
std::array<std::vector<std::size_t>, 3> split_three(std::size_t n, std::array<double, 3> fractions,
                                                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Metrics

double accuracy(std::span<const int> pred, std::span<const int> truth);

/// Mean recall over the classes present in `truth`. Throws MissingClass when
/// fewer than two classes are present.
double balanced_accuracy(std::span<const int> pred, std::span<const int> truth);

struct GroupAccuracy {
  double acc = 0.0;
  std::size_t n = 0;
};

/// Accuracy of binary predictions grouped by unbalance strength.
std::map<int, GroupAccuracy> per_class_accuracy(std::span<const int> pred, std::span<const int> truth,
                                                std::span<const int> strength);

struct RpmBin {
  double center = 0.0;
  double acc = 0.0;
  std::size_t n = 0;
};

/// Bins [k*w, (k+1)*w) on each sample's mean RPM; only non-empty bins are
/// returned, in ascending order.
std::vector<RpmBin> rpm_binned_accuracy(std::span<const int> pred, std::span<const int> truth,
                                        std::span<const double> rpm, double bin_width = 100.0);

// ---------------------------------------------------------------------------
// Data sources

class DatasetSource {
 public:
  virtual ~DatasetSource() = default;
  /// Raw recording, before warm-up trimming. Throws MissingDataset.
  [[nodiscard]] virtual Recording load(DatasetId id) const = 0;
  [[nodiscard]] virtual json describe() const = 0;
};

class DirectorySource final : public DatasetSource {
 public:
  explicit DirectorySource(std::filesystem::path dir) : dir_(std::move(dir)) {}
  [[nodiscard]] Recording load(DatasetId id) const override;
  [[nodiscard]] json describe() const override;
  [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

/// Rig-simulator output. `physics` supplies every signal-model parameter;
/// the unbalance, voltage profile and seed are filled in per dataset.
struct SyntheticPlan {
  std::uint64_t seed = kDefaultSeed;
  double step_seconds = kStepSeconds;
  std::map<int, double> factor_overrides;  // strength -> unbalance factor in mm*g
  SimConfig physics;

  [[nodiscard]] SimConfig config_for(DatasetId id) const;
};

json encode(const SimConfig& physics);
/// Missing keys keep their defaults; unknown keys raise BadParams.
SimConfig decode_sim_physics(const json& j);
json encode(const SyntheticPlan& plan);
SyntheticPlan decode_synthetic_plan(const json& j);

class SyntheticSource final : public DatasetSource {
 public:
  explicit SyntheticSource(SyntheticPlan plan) : plan_(std::move(plan)) {}
  [[nodiscard]] Recording load(DatasetId id) const override;
  [[nodiscard]] json describe() const override;
  [[nodiscard]] const SyntheticPlan& plan() const noexcept { return plan_; }

 private:
  SyntheticPlan plan_;
};

// ---------------------------------------------------------------------------
// Experiments

enum class Approach { CnnRaw, FftMlp, RfMinimal3, RfMinimal7, HmmMfcc };

std::string to_string(Approach a);
/// Accepts cnn, fft-mlp, rf3, rf7, hmm. Throws BadParams otherwise.
Approach parse_approach(std::string_view s);

struct Mode {
  int strength = 0;  // 0 means all strengths, 1..4 pairwise against strength 0

  static Mode pairwise(int k);
  static Mode all() { return Mode{}; }
  [[nodiscard]] bool is_all() const noexcept { return strength == 0; }
  [[nodiscard]] std::vector<int> strengths() const;
  [[nodiscard]] std::string str() const;
};

/// Accepts "all" or "pairwise:K".
Mode parse_mode(std::string_view s);

struct HmmGrid {
  std::vector<std::size_t> n_mfcc = {8, 13, 20};
  std::vector<std::size_t> n_states = {1, 2, 3, 5};
  std::vector<std::size_t> snippet_len = {256, 512, 1024};
  bool half_overlap = true;  // also try overlap = len/2 next to 0

  [[nodiscard]] std::vector<std::pair<dsp::MfccConfig, std::size_t>> points() const;
};

struct RpmInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// 100 RPM intervals covering 630..2330 RPM.
std::vector<RpmInterval> default_hmm_intervals(double width = 100.0, double lo = 630.0, double hi = 2330.0);

struct HmmOptions {
  std::vector<RpmInterval> intervals = default_hmm_intervals();
  HmmGrid grid;
  std::array<double, 3> split = {0.4, 0.4, 0.2};
  int normal_strength = 0;
  int fault_strength = 3;
  models::HmmFitOptions fit;
  double head_reg = 1e-6;
};

struct ExperimentSpec {
  Approach approach = Approach::FftMlp;
  Mode mode;
  std::size_t depth = 2;  // hidden layers or conv blocks
  std::uint64_t seed = kDefaultSeed;
  double dev_fraction = 0.9;
  double rpm_bin_width = 100.0;
  Channel channel = Channel::Vib1;
  models::NetTrainOptions train;
  std::size_t hidden_width = 64;
  models::CnnArch cnn;
  models::RfOptions forest;
  HmmOptions hmm;
};

json encode(const ExperimentSpec& spec);
ExperimentSpec decode_experiment_spec(const json& j);

struct HmmIntervalResult {
  RpmInterval interval;
  dsp::MfccConfig mfcc;
  std::size_t n_states = 0;
  double selection_balanced_accuracy = 0.0;
  double eval_balanced_accuracy = 0.0;  // NaN when the interval saw no eval windows of both classes
  std::size_t eval_n = 0;
};

struct EvalReport {
  json spec;
  double overall_accuracy = 0.0;
  double balanced_accuracy = 0.0;
  std::map<int, GroupAccuracy> per_class;
  std::vector<RpmBin> rpm_bins;
  std::uint64_t seed = 0;
  std::string version = SHAFT_VERSION;
  std::vector<HmmIntervalResult> hmm_intervals;
};

/// Container for every approach. Holds exactly what inference needs plus
/// the spec that produced it.
struct TrainedModel {
  ExperimentSpec spec;
  std::optional<dsp::RobustScaler> scaler;
  std::variant<std::monostate, models::MlpModel, models::Cnn1dModel, models::RandomForest,
               std::vector<models::HmmDetector>>
      model;
  models::TrainLog log;
  std::vector<HmmIntervalResult> selection;  // HMM only: chosen grid point per interval
};

inline constexpr int kModelFormatVersion = 1;

ordered_json encode(const TrainedModel& m);
/// Throws VersionMismatch when the container format differs, BadModel when
/// it is malformed.
TrainedModel decode_trained_model(const json& j);
void save_model(const TrainedModel& m, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// Windows or features of one recording, in the layout an approach consumes.
dsp::FeatureMatrix extract_features(const ExperimentSpec& spec, const Recording& trimmed, DatasetId id);

/// Pools `extract_features` over several datasets of one role.
dsp::FeatureMatrix load_features(const ExperimentSpec& spec, const DatasetSource& source,
                                 std::span<const int> strengths, Role role);

struct Predictions {
  std::vector<int> pred;
  std::vector<int> truth;
  std::vector<int> strength;
  std::vector<double> rpm;
};

/// Class predictions for every row of an approach's feature matrix.
Predictions predict(const TrainedModel& model, const dsp::FeatureMatrix& features);

EvalReport make_report(const ExperimentSpec& spec, const Predictions& p);

/// Trains on the development datasets of the spec's mode. Never touches
/// evaluation data.
TrainedModel train(const ExperimentSpec& spec, const DatasetSource& source);

/// Scores a trained model on the evaluation datasets of its mode.
EvalReport evaluate(const TrainedModel& model, const DatasetSource& source);

struct ExperimentResult {
  TrainedModel model;
  EvalReport report;
};

ExperimentResult run_experiment(const ExperimentSpec& spec, const DatasetSource& source);

struct HmmExperimentResult {
  std::vector<models::HmmDetector> detectors;
  EvalReport report;
};

/// Per-interval detectors from the normal and fault development sets, grid
/// selection on the third split, final scoring on the evaluation sets.
HmmExperimentResult run_hmm_experiment(const DatasetSource& source, const HmmOptions& opts, std::uint64_t seed,
                                       const ExperimentSpec* spec_echo = nullptr);

/// Trains only the detectors of `run_hmm_experiment`.
std::vector<models::HmmDetector> train_hmm_detectors(const DatasetSource& source, const HmmOptions& opts,
                                                     std::uint64_t seed,
                                                     std::vector<HmmIntervalResult>* selection = nullptr);

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Json, Csv };
ReportFormat parse_report_format(std::string_view s);

ordered_json report_json(const EvalReport& r);
void write_report(const EvalReport& r, const std::filesystem::path& path, ReportFormat format);

}  // namespace shaft::pipeline
