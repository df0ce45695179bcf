// shaft: simulate, featurize, train and evaluate unbalance detectors.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shaft/data.hpp"
#include "shaft/dsp.hpp"
#include "shaft/error.hpp"
#include "shaft/pipeline.hpp"
#include "shaft/rigsim.hpp"

namespace fs = std::filesystem;
using namespace shaft;
using json = nlohmann::json;

namespace {

bool g_quiet = false;

void info(const std::string& msg) {
  if (!g_quiet) std::cerr << msg << '\n';
}

fs::path resolve_data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SHAFT_DATA_DIR"); env && *env) return env;
  fail(ErrorCode::Usage, "no data directory: pass --data or set SHAFT_DATA_DIR");
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::BadParams, path.string() + " is not valid JSON: " + e.what());
  }
}

std::vector<DatasetId> all_ids() {
  std::vector<DatasetId> ids;
  for (int k = 0; k <= 4; ++k)
    for (auto role : {Role::Development, Role::Evaluation}) ids.push_back({k, role});
  return ids;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string out;
  std::string spec;
  std::optional<std::uint64_t> seed;
  std::optional<double> step_seconds;
  std::vector<std::string> factors;
};

int cmd_simulate(const SimulateArgs& a) {
  pipeline::SyntheticPlan plan;
  if (!a.spec.empty()) plan = pipeline::decode_synthetic_plan(read_json_file(a.spec));
  if (a.seed) plan.seed = *a.seed;
  if (a.step_seconds) plan.step_seconds = *a.step_seconds;
  for (const auto& f : a.factors) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Usage, "--factor expects K=VALUE, got '" + f + "'");
    const int k = parse_dataset_id(f.substr(0, eq) + "D").strength;
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(f.substr(eq + 1), &used);
      if (used != f.size() - eq - 1) throw std::invalid_argument(f);
    } catch (const std::logic_error&) {
      fail(ErrorCode::Usage, "--factor value is not a number: '" + f + "'");
    }
    if (!(v >= 0.0)) fail(ErrorCode::Usage, "--factor value must be >= 0");
    plan.factor_overrides[k] = v;
  }

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + a.out + ": " + ec.message());
  const pipeline::SyntheticSource source(plan);
  for (const auto& id : all_ids()) {
    const auto path = fs::path(a.out) / id.filename();
    info("simulating " + id.str() + " -> " + path.string());
    write_recording(source.load(id), path);
  }
  std::ofstream manifest(fs::path(a.out) / "simulation.json", std::ios::binary | std::ios::trunc);
  if (!manifest) fail(ErrorCode::Io, "cannot write the simulation manifest");
  manifest << pipeline::encode(plan).dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct FeaturesArgs {
  std::string in;
  std::string variant;
  std::string out;
  std::size_t n_mfcc = 13;
  std::size_t snippet_len = 512;
  std::size_t overlap = 256;
};

dsp::FeatureMatrix mfcc_rows(const Recording& trimmed, const std::string& name, const dsp::MfccConfig& cfg) {
  const auto windows = window(trimmed, Channel::Vib1);
  const dsp::MfccExtractor ex(cfg);
  dsp::FeatureMatrix fm;
  char buf[16];
  for (std::size_t c = 0; c < cfg.n_mfcc; ++c) {
    std::snprintf(buf, sizeof buf, "mfcc_%02zu", c);
    fm.names.emplace_back(buf);
  }
  const std::size_t per = dsp::snippet_count(kWindowSize, cfg.snippet_len, cfg.overlap);
  fm.values = Matrix(windows.size() * per, cfg.n_mfcc);
  const auto base = dsp::window_meta(windows, name);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const Matrix seq = ex.sequence(windows[w].values);
    for (std::size_t t = 0; t < seq.rows; ++t) {
      std::copy(seq.row(t).begin(), seq.row(t).end(), fm.values.row(w * per + t).begin());
      auto m = base[w];
      m.frame_index = static_cast<long>(t);
      fm.meta.push_back(m);
    }
  }
  fm.recipe = std::string("mfcc ") + dsp::kRecipeVersion + "; n_mfcc=" + std::to_string(cfg.n_mfcc) +
              "; n_mels=" + std::to_string(cfg.n_mels) + "; snippet_len=" + std::to_string(cfg.snippet_len) +
              "; overlap=" + std::to_string(cfg.overlap) + "; taper=hann; channel=Vibration_1";
  return fm;
}

int cmd_features(const FeaturesArgs& a) {
  pipeline::ExperimentSpec spec;
  if (a.variant == "three") spec.approach = pipeline::Approach::RfMinimal3;
  if (a.variant == "seven") spec.approach = pipeline::Approach::RfMinimal7;
  if (a.variant == "fft") spec.approach = pipeline::Approach::FftMlp;
  dsp::MfccConfig cfg;
  cfg.n_mfcc = a.n_mfcc;
  cfg.snippet_len = a.snippet_len;
  cfg.overlap = a.overlap;
  if (a.variant == "mfcc") cfg.validate();

  dsp::FeatureMatrix pooled;
  std::size_t found = 0;
  for (const auto& id : all_ids()) {
    const auto path = fs::path(a.in) / id.filename();
    if (!fs::exists(path)) continue;
    ++found;
    info("extracting " + a.variant + " features from " + path.string());
    const auto trimmed = trim_warmup(load_recording(path, id));
    dsp::append_rows(pooled, a.variant == "mfcc" ? mfcc_rows(trimmed, id.str(), cfg)
                                                 : pipeline::extract_features(spec, trimmed, id));
  }
  if (found == 0) fail(ErrorCode::MissingDataset, "no dataset files (0D.csv ... 4E.csv) in " + a.in);
  dsp::write_feature_csv(pooled, a.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string approach;
  std::string mode = "all";
  std::size_t depth = 2;
  std::uint64_t seed = kDefaultSeed;
  std::string data;
  std::string out;
  std::string log;
  int max_epochs = 100;
  int patience = 0;
  std::size_t hidden_width = 64;
  std::size_t trees = 100;
};

void write_train_log(const pipeline::TrainedModel& m, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  const auto& log = m.log;
  out << "# approach=" << pipeline::to_string(m.spec.approach) << " mode=" << m.spec.mode.str()
      << " depth=" << m.spec.depth << " seed=" << m.spec.seed << '\n';
  out << "# best_epoch=" << log.best_epoch << " best_test_loss=" << json(log.best_test_loss).dump() << '\n';
  if (!m.selection.empty()) {
    out << "rpm_lo,rpm_hi,n_mfcc,n_states,snippet_len,overlap,selection_balanced_accuracy\n";
    for (const auto& r : m.selection)
      out << json(r.interval.lo).dump() << ',' << json(r.interval.hi).dump() << ',' << r.mfcc.n_mfcc << ','
          << r.n_states << ',' << r.mfcc.snippet_len << ',' << r.mfcc.overlap << ','
          << json(r.selection_balanced_accuracy).dump() << '\n';
  } else {
    out << "epoch,train_loss,test_loss\n";
    for (std::size_t e = 0; e < log.test_loss.size(); ++e)
      out << e << ',' << (e < log.train_loss.size() ? json(log.train_loss[e]).dump() : std::string()) << ','
          << json(log.test_loss[e]).dump() << '\n';
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

int cmd_train(const TrainArgs& a) {
  pipeline::ExperimentSpec spec;
  spec.approach = pipeline::parse_approach(a.approach);
  spec.mode = pipeline::parse_mode(a.mode);
  spec.depth = a.depth;
  spec.seed = a.seed;
  spec.train.max_epochs = a.max_epochs;
  spec.train.patience = a.patience;
  spec.hidden_width = a.hidden_width;
  spec.forest.n_trees = a.trees;
  const pipeline::DirectorySource source(resolve_data_dir(a.data));
  info("training " + a.approach + " (" + spec.mode.str() + ", depth " + std::to_string(a.depth) + ") on " +
       source.dir().string());
  const auto model = pipeline::train(spec, source);
  pipeline::save_model(model, a.out);
  const fs::path log_path = a.log.empty() ? fs::path(a.out + ".log") : fs::path(a.log);
  write_train_log(model, log_path);
  if (model.selection.empty())
    info("best epoch " + std::to_string(model.log.best_epoch) + ", test loss " + json(model.log.best_test_loss).dump());
  info("model written to " + a.out + ", log to " + log_path.string());
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string model;
  std::string data;
  std::string report;
  std::string format = "json";
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto model = pipeline::load_model(a.model);
  const pipeline::DirectorySource source(resolve_data_dir(a.data));
  auto report = pipeline::evaluate(model, source);
  report.spec["data"] = source.describe();
  pipeline::write_report(report, a.report, pipeline::parse_report_format(a.format));
  info("overall accuracy " + json(report.overall_accuracy).dump() + ", balanced " +
       json(report.balanced_accuracy).dump());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unbalance detection on rotating-shaft vibration data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(SHAFT_VERSION));
  app.add_flag("--quiet", g_quiet, "Suppress progress messages");
  app.fallthrough();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Write synthetic 0D..4E recordings");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--spec", sim.spec, "Simulation plan (JSON)")->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim.seed, "Root seed (default " + std::to_string(kDefaultSeed) + ")");
  simulate->add_option("--step-seconds", sim.step_seconds, "Seconds per voltage step (default 20)")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--factor", sim.factors, "Override an unbalance factor, K=MMG (repeatable)");

  FeaturesArgs feat;
  auto* features = app.add_subcommand("features", "Write a feature matrix CSV");
  features->add_option("--in", feat.in, "Directory with dataset CSV files")->required()->check(CLI::ExistingDirectory);
  features->add_option("--variant", feat.variant, "three, seven, fft or mfcc")
      ->required()
      ->check(CLI::IsMember({"three", "seven", "fft", "mfcc"}));
  features->add_option("--out", feat.out, "Output CSV")->required();
  features->add_option("--n-mfcc", feat.n_mfcc, "MFCC coefficients (mfcc variant)")->capture_default_str();
  features->add_option("--snippet-len", feat.snippet_len, "Snippet length (mfcc variant)")->capture_default_str();
  features->add_option("--overlap", feat.overlap, "Snippet overlap (mfcc variant)")->capture_default_str();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a detector on the development datasets");
  train->add_option("--approach", tr.approach, "cnn, fft-mlp, rf3, rf7 or hmm")
      ->required()
      ->check(CLI::IsMember({"cnn", "fft-mlp", "rf3", "rf7", "hmm"}));
  train->add_option("--mode", tr.mode, "all or pairwise:K")
      ->capture_default_str()
      ->check(CLI::Validator(
          [](std::string& s) -> std::string {
            try {
              pipeline::parse_mode(s);
            } catch (const Error& e) {
              return e.what();
            }
            return {};
          },
          "MODE"));
  train->add_option("--depth", tr.depth, "Hidden layers (fft-mlp) or conv blocks (cnn)")->capture_default_str();
  train->add_option("--seed", tr.seed, "Seed")->capture_default_str();
  train->add_option("--data", tr.data, "Data directory (default $SHAFT_DATA_DIR)");
  train->add_option("--out", tr.out, "Model file")->required();
  train->add_option("--log", tr.log, "Training log (default <out>.log)");
  train->add_option("--max-epochs", tr.max_epochs, "Epoch limit for networks")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--patience", tr.patience, "Early-stop patience in epochs, 0 = off")->capture_default_str()->check(CLI::NonNegativeNumber);
  train->add_option("--hidden-width", tr.hidden_width, "Width of hidden layers")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--trees", tr.trees, "Random forest size")->capture_default_str()->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on the evaluation datasets");
  evaluate->add_option("--model", ev.model, "Model file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--data", ev.data, "Data directory (default $SHAFT_DATA_DIR)");
  evaluate->add_option("--report", ev.report, "Report file")->required();
  evaluate->add_option("--format", ev.format, "json or csv")->capture_default_str()->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorCode::Usage);
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*features) return cmd_features(feat);
    if (*train) return cmd_train(tr);
    if (*evaluate) return cmd_evaluate(ev);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error [IoError]: " << e.what() << '\n';
    return static_cast<int>(ErrorCode::Io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return static_cast<int>(ErrorCode::Usage);
}
