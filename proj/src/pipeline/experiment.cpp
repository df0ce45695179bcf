#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "shaft/error.hpp"
#include "shaft/models/serialize.hpp"
#include "shaft/pipeline.hpp"

namespace shaft::pipeline {

namespace {

std::vector<int> labels_of(const dsp::FeatureMatrix& fm, std::span<const std::size_t> rows) {
  std::vector<int> y;
  y.reserve(rows.size());
  for (auto r : rows) y.push_back(fm.meta[r].label);
  return y;
}

std::string channel_name(Channel c) { return channel_column(c); }

Channel parse_channel(const std::string& s) {
  for (auto c : {Channel::Vib1, Channel::Vib2, Channel::Vib3})
    if (channel_column(c) == s) return c;
  fail(ErrorCode::BadParams, "unknown channel '" + s + "'");
}

dsp::FeatureMatrix raw_windows(const Recording& r, Channel channel, const std::string& dataset) {
  const auto windows = window(r, channel);
  dsp::FeatureMatrix fm;
  fm.names.reserve(kWindowSize);
  char buf[16];
  for (std::size_t i = 0; i < kWindowSize; ++i) {
    std::snprintf(buf, sizeof buf, "raw_%04zu", i);
    fm.names.emplace_back(buf);
  }
  fm.values = Matrix(windows.size(), kWindowSize);
  for (std::size_t i = 0; i < windows.size(); ++i)
    std::copy(windows[i].values.begin(), windows[i].values.end(), fm.values.row(i).begin());
  fm.meta = dsp::window_meta(windows, dataset);
  fm.recipe = std::string("raw ") + dsp::kRecipeVersion + "; channel=" + channel_column(channel);
  return fm;
}

json train_log_json(const models::TrainLog& log) {
  return {{"train_loss", log.train_loss},
          {"test_loss", log.test_loss},
          {"best_epoch", log.best_epoch},
          {"best_test_loss", log.best_test_loss}};
}

models::TrainLog decode_train_log(const json& j) {
  models::TrainLog log;
  log.train_loss = j.at("train_loss").get<std::vector<double>>();
  log.test_loss = j.at("test_loss").get<std::vector<double>>();
  log.best_epoch = j.at("best_epoch").get<int>();
  log.best_test_loss = j.at("best_test_loss").get<double>();
  return log;
}

json interval_result_json(const HmmIntervalResult& r) {
  return {{"rpm_lo", r.interval.lo},
          {"rpm_hi", r.interval.hi},
          {"n_mfcc", r.mfcc.n_mfcc},
          {"n_states", r.n_states},
          {"snippet_len", r.mfcc.snippet_len},
          {"overlap", r.mfcc.overlap},
          {"selection_balanced_accuracy", r.selection_balanced_accuracy},
          {"eval_balanced_accuracy", std::isfinite(r.eval_balanced_accuracy) ? json(r.eval_balanced_accuracy) : json()},
          {"eval_n", r.eval_n}};
}

HmmIntervalResult decode_interval_result(const json& j) {
  HmmIntervalResult r;
  r.interval = {j.at("rpm_lo").get<double>(), j.at("rpm_hi").get<double>()};
  r.mfcc.n_mfcc = j.at("n_mfcc").get<std::size_t>();
  r.n_states = j.at("n_states").get<std::size_t>();
  r.mfcc.snippet_len = j.at("snippet_len").get<std::size_t>();
  r.mfcc.overlap = j.at("overlap").get<std::size_t>();
  r.selection_balanced_accuracy = j.at("selection_balanced_accuracy").get<double>();
  const auto& e = j.at("eval_balanced_accuracy");
  r.eval_balanced_accuracy = e.is_null() ? std::numeric_limits<double>::quiet_NaN() : e.get<double>();
  r.eval_n = j.at("eval_n").get<std::size_t>();
  return r;
}

std::vector<int> threshold(std::span<const double> logits) {
  std::vector<int> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] >= 0.0 ? 1 : 0;
  return out;
}

}  // namespace

std::string to_string(Approach a) {
  switch (a) {
    case Approach::CnnRaw: return "cnn";
    case Approach::FftMlp: return "fft-mlp";
    case Approach::RfMinimal3: return "rf3";
    case Approach::RfMinimal7: return "rf7";
    case Approach::HmmMfcc: return "hmm";
  }
  return "?";
}

Approach parse_approach(std::string_view s) {
  for (auto a : {Approach::CnnRaw, Approach::FftMlp, Approach::RfMinimal3, Approach::RfMinimal7, Approach::HmmMfcc})
    if (to_string(a) == s) return a;
  fail(ErrorCode::BadParams, "unknown approach '" + std::string(s) + "' (expected cnn, fft-mlp, rf3, rf7, hmm)");
}

Mode Mode::pairwise(int k) {
  if (k < 1 || k > 4) fail(ErrorCode::BadParams, "pairwise strength must be 1..4");
  return Mode{k};
}

std::vector<int> Mode::strengths() const {
  if (is_all()) return {0, 1, 2, 3, 4};
  return {0, strength};
}

std::string Mode::str() const { return is_all() ? "all" : "pairwise:" + std::to_string(strength); }

Mode parse_mode(std::string_view s) {
  if (s == "all") return Mode::all();
  constexpr std::string_view prefix = "pairwise:";
  if (s.starts_with(prefix)) {
    const auto digits = s.substr(prefix.size());
    int k = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc{} && p == digits.data() + digits.size() && !digits.empty()) return Mode::pairwise(k);
  }
  fail(ErrorCode::BadParams, "unknown mode '" + std::string(s) + "' (expected all or pairwise:K)");
}

std::vector<std::pair<dsp::MfccConfig, std::size_t>> HmmGrid::points() const {
  std::vector<std::pair<dsp::MfccConfig, std::size_t>> out;
  for (auto len : snippet_len)
    for (std::size_t ov : half_overlap ? std::vector<std::size_t>{0, len / 2} : std::vector<std::size_t>{0})
      for (auto nm : n_mfcc)
        for (auto ns : n_states) {
          dsp::MfccConfig c;
          c.n_mfcc = nm;
          c.snippet_len = len;
          c.overlap = ov;
          c.validate();
          out.emplace_back(c, ns);
        }
  if (out.empty()) fail(ErrorCode::BadParams, "empty hyperparameter grid");
  return out;
}

std::vector<RpmInterval> default_hmm_intervals(double width, double lo, double hi) {
  if (!(width > 0.0) || !(hi > lo)) fail(ErrorCode::BadParams, "bad interval layout");
  std::vector<RpmInterval> out;
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9));
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({lo + width * static_cast<double>(i), std::min(hi, lo + width * static_cast<double>(i + 1))});
  return out;
}

json encode(const ExperimentSpec& s) {
  json intervals = json::array();
  for (const auto& iv : s.hmm.intervals) intervals.push_back({iv.lo, iv.hi});
  return {{"approach", to_string(s.approach)},
          {"mode", s.mode.str()},
          {"depth", s.depth},
          {"seed", s.seed},
          {"dev_fraction", s.dev_fraction},
          {"rpm_bin_width", s.rpm_bin_width},
          {"channel", channel_name(s.channel)},
          {"train",
           {{"batch_size", s.train.batch_size},
            {"learning_rate", s.train.learning_rate},
            {"max_epochs", s.train.max_epochs},
            {"patience", s.train.patience}}},
          {"hidden_width", s.hidden_width},
          {"cnn",
           {{"kernel", s.cnn.kernel},
            {"base_channels", s.cnn.base_channels},
            {"pool", s.cnn.pool},
            {"fc_width", s.cnn.fc_width},
            {"negative_slope", s.cnn.negative_slope}}},
          {"forest",
           {{"n_trees", s.forest.n_trees},
            {"max_depth", s.forest.max_depth},
            {"features_per_split", s.forest.features_per_split},
            {"bootstrap", s.forest.bootstrap},
            {"min_samples_split", s.forest.min_samples_split}}},
          {"hmm",
           {{"intervals", intervals},
            {"grid",
             {{"n_mfcc", s.hmm.grid.n_mfcc},
              {"n_states", s.hmm.grid.n_states},
              {"snippet_len", s.hmm.grid.snippet_len},
              {"half_overlap", s.hmm.grid.half_overlap}}},
            {"split", s.hmm.split},
            {"normal_strength", s.hmm.normal_strength},
            {"fault_strength", s.hmm.fault_strength},
            {"max_iter", s.hmm.fit.max_iter},
            {"tol", s.hmm.fit.tol},
            {"variance_floor_fraction", s.hmm.fit.variance_floor_fraction},
            {"head_reg", s.hmm.head_reg}}}};
}

ExperimentSpec decode_experiment_spec(const json& j) {
  ExperimentSpec s;
  try {
    s.approach = parse_approach(j.at("approach").get<std::string>());
    s.mode = parse_mode(j.at("mode").get<std::string>());
    s.depth = j.at("depth").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.dev_fraction = j.at("dev_fraction").get<double>();
    s.rpm_bin_width = j.at("rpm_bin_width").get<double>();
    s.channel = parse_channel(j.at("channel").get<std::string>());
    const auto& t = j.at("train");
    s.train.batch_size = t.at("batch_size").get<std::size_t>();
    s.train.learning_rate = t.at("learning_rate").get<double>();
    s.train.max_epochs = t.at("max_epochs").get<int>();
    s.train.patience = t.at("patience").get<int>();
    s.hidden_width = j.at("hidden_width").get<std::size_t>();
    const auto& c = j.at("cnn");
    s.cnn.kernel = c.at("kernel").get<std::size_t>();
    s.cnn.base_channels = c.at("base_channels").get<std::size_t>();
    s.cnn.pool = c.at("pool").get<std::size_t>();
    s.cnn.fc_width = c.at("fc_width").get<std::size_t>();
    s.cnn.negative_slope = c.at("negative_slope").get<double>();
    const auto& f = j.at("forest");
    s.forest.n_trees = f.at("n_trees").get<std::size_t>();
    s.forest.max_depth = f.at("max_depth").get<std::size_t>();
    s.forest.features_per_split = f.at("features_per_split").get<std::size_t>();
    s.forest.bootstrap = f.at("bootstrap").get<bool>();
    s.forest.min_samples_split = f.at("min_samples_split").get<std::size_t>();
    const auto& h = j.at("hmm");
    s.hmm.intervals.clear();
    for (const auto& iv : h.at("intervals")) s.hmm.intervals.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    const auto& g = h.at("grid");
    s.hmm.grid.n_mfcc = g.at("n_mfcc").get<std::vector<std::size_t>>();
    s.hmm.grid.n_states = g.at("n_states").get<std::vector<std::size_t>>();
    s.hmm.grid.snippet_len = g.at("snippet_len").get<std::vector<std::size_t>>();
    s.hmm.grid.half_overlap = g.at("half_overlap").get<bool>();
    s.hmm.split = h.at("split").get<std::array<double, 3>>();
    s.hmm.normal_strength = h.at("normal_strength").get<int>();
    s.hmm.fault_strength = h.at("fault_strength").get<int>();
    s.hmm.fit.max_iter = h.at("max_iter").get<int>();
    s.hmm.fit.tol = h.at("tol").get<double>();
    s.hmm.fit.variance_floor_fraction = h.at("variance_floor_fraction").get<double>();
    s.hmm.head_reg = h.at("head_reg").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::BadModel, std::string("malformed experiment spec: ") + e.what());
  }
  return s;
}

ordered_json encode(const TrainedModel& m) {
  ordered_json j;
  j["format"] = "shaft-model";
  j["format_version"] = kModelFormatVersion;
  j["version"] = SHAFT_VERSION;
  j["kind"] = to_string(m.spec.approach);
  j["seed"] = m.spec.seed;
  j["spec"] = encode(m.spec);
  j["scaler"] = m.scaler ? models::encode(*m.scaler) : json();
  j["model"] = std::visit(
      [](const auto& mdl) -> json {
        using T = std::decay_t<decltype(mdl)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          fail(ErrorCode::BadModel, "cannot save an empty model");
        } else if constexpr (std::is_same_v<T, std::vector<models::HmmDetector>>) {
          json arr = json::array();
          for (const auto& d : mdl) arr.push_back(models::encode(d));
          return arr;
        } else {
          return models::encode(mdl);
        }
      },
      m.model);
  j["training"] = train_log_json(m.log);
  json sel = json::array();
  for (const auto& r : m.selection) sel.push_back(interval_result_json(r));
  j["selection"] = sel;
  return j;
}

TrainedModel decode_trained_model(const json& j) {
  if (!j.is_object() || j.value("format", "") != "shaft-model") fail(ErrorCode::BadModel, "not a model container");
  if (!j.contains("format_version") || !j.at("format_version").is_number_integer() ||
      j.at("format_version").get<int>() != kModelFormatVersion)
    fail(ErrorCode::VersionMismatch, "model container format " + j.value("format_version", json()).dump() +
                                         " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
  TrainedModel m;
  m.spec = decode_experiment_spec(j.at("spec"));
  try {
    if (!j.at("scaler").is_null()) m.scaler = models::decode_robust_scaler(j.at("scaler"));
    const auto& mj = j.at("model");
    switch (m.spec.approach) {
      case Approach::FftMlp: m.model = models::decode_mlp(mj); break;
      case Approach::CnnRaw: m.model = models::decode_cnn(mj); break;
      case Approach::RfMinimal3:
      case Approach::RfMinimal7: m.model = models::decode_random_forest(mj); break;
      case Approach::HmmMfcc: {
        std::vector<models::HmmDetector> dets;
        for (const auto& d : mj) dets.push_back(models::decode_hmm_detector(d));
        m.model = std::move(dets);
        break;
      }
    }
    m.log = decode_train_log(j.at("training"));
    for (const auto& r : j.at("selection")) m.selection.push_back(decode_interval_result(r));
  } catch (const json::exception& e) {
    fail(ErrorCode::BadModel, std::string("malformed model container: ") + e.what());
  }
  return m;
}

void save_model(const TrainedModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << encode(m).dump() << '\n';
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::BadModel, path.string() + " is not valid JSON: " + e.what());
  }
  return decode_trained_model(j);
}

dsp::FeatureMatrix extract_features(const ExperimentSpec& spec, const Recording& trimmed, DatasetId id) {
  const std::string name = id.str();
  dsp::FeatureMatrix fm;
  switch (spec.approach) {
    case Approach::FftMlp:
      fm = dsp::fft_features(window(trimmed, spec.channel));
      for (auto& m : fm.meta) m.dataset = name;
      return fm;
    case Approach::RfMinimal3:
    case Approach::RfMinimal7: {
      auto per_sensor = window_all_channels(trimmed);
      if (spec.approach == Approach::RfMinimal3) per_sensor.resize(1);
      fm = dsp::stat_features(per_sensor, spec.approach == Approach::RfMinimal3 ? dsp::StatVariant::ThreeFeature
                                                                                  : dsp::StatVariant::SevenFeature);
      for (auto& m : fm.meta) m.dataset = name;
      return fm;
    }
    case Approach::CnnRaw:
    case Approach::HmmMfcc: return raw_windows(trimmed, spec.channel, name);
  }
  return fm;
}

dsp::FeatureMatrix load_features(const ExperimentSpec& spec, const DatasetSource& source,
                                 std::span<const int> strengths, Role role) {
  dsp::FeatureMatrix pooled;
  for (int k : strengths) {
    const DatasetId id{k, role};
    // one recording in memory at a time
    const auto fm = extract_features(spec, trim_warmup(source.load(id)), id);
    dsp::append_rows(pooled, fm);
  }
  return pooled;
}

Predictions predict(const TrainedModel& model, const dsp::FeatureMatrix& features) {
  Predictions p;
  const auto& X = features.values;
  std::vector<char> keep(X.rows, 1);
  std::vector<int> pred(X.rows, 0);

  std::visit(
      [&](const auto& mdl) {
        using T = std::decay_t<decltype(mdl)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          fail(ErrorCode::BadModel, "model container holds no model");
        } else if constexpr (std::is_same_v<T, models::MlpModel>) {
          if (!model.scaler) fail(ErrorCode::BadModel, "FFT model is missing its scaler");
          Matrix scaled = X;
          model.scaler->apply_inplace(scaled);
          pred = threshold(mdl.logits(scaled));
        } else if constexpr (std::is_same_v<T, models::Cnn1dModel>) {
          pred = threshold(mdl.logits(X));
        } else if constexpr (std::is_same_v<T, models::RandomForest>) {
          if (X.cols != mdl.n_features) fail(ErrorCode::ShapeMismatch, "feature width does not match the forest");
          const auto n = static_cast<long>(X.rows);
#pragma omp parallel for schedule(static)
          for (long i = 0; i < n; ++i) pred[static_cast<std::size_t>(i)] = mdl.predict(X.row(static_cast<std::size_t>(i)));
        } else {
          if (X.cols != kWindowSize) fail(ErrorCode::ShapeMismatch, "HMM detectors expect raw windows");
          std::vector<int> owner(X.rows, -1);
          for (std::size_t i = 0; i < X.rows; ++i)
            for (std::size_t d = 0; d < mdl.size(); ++d)
              if (mdl[d].covers(features.meta[i].mean_rpm)) {
                owner[i] = static_cast<int>(d);
                break;
              }
          std::vector<dsp::MfccExtractor> extractors;
          extractors.reserve(mdl.size());
          for (const auto& d : mdl) extractors.emplace_back(d.mfcc);
          const auto n = static_cast<long>(X.rows);
#pragma omp parallel for schedule(dynamic, 8)
          for (long i = 0; i < n; ++i) {
            const auto r = static_cast<std::size_t>(i);
            if (owner[r] < 0) {
              keep[r] = 0;
              continue;
            }
            const auto d = static_cast<std::size_t>(owner[r]);
            pred[r] = mdl[d].predict_proba(extractors[d], X.row(r)) >= 0.5 ? 1 : 0;
          }
        }
      },
      model.model);

  for (std::size_t i = 0; i < X.rows; ++i) {
    if (!keep[i]) continue;
    p.pred.push_back(pred[i]);
    p.truth.push_back(features.meta[i].label);
    p.strength.push_back(features.meta[i].unbalance_id);
    p.rpm.push_back(features.meta[i].mean_rpm);
  }
  return p;
}

EvalReport make_report(const ExperimentSpec& spec, const Predictions& p) {
  EvalReport r;
  r.spec = encode(spec);
  r.seed = spec.seed;
  r.overall_accuracy = accuracy(p.pred, p.truth);
  const bool both = std::find(p.truth.begin(), p.truth.end(), 0) != p.truth.end() &&
                    std::find(p.truth.begin(), p.truth.end(), 1) != p.truth.end();
  r.balanced_accuracy = both ? balanced_accuracy(p.pred, p.truth) : r.overall_accuracy;
  r.per_class = per_class_accuracy(p.pred, p.truth, p.strength);
  r.rpm_bins = rpm_binned_accuracy(p.pred, p.truth, p.rpm, spec.rpm_bin_width);
  return r;
}

TrainedModel train(const ExperimentSpec& spec, const DatasetSource& source) {
  TrainedModel out;
  out.spec = spec;
  if (spec.approach == Approach::HmmMfcc) {
    out.model = train_hmm_detectors(source, spec.hmm, spec.seed, &out.selection);
    return out;
  }

  const auto strengths = spec.mode.strengths();
  dsp::FeatureMatrix dev = load_features(spec, source, strengths, Role::Development);
  std::vector<int> groups(dev.meta.size());
  for (std::size_t i = 0; i < groups.size(); ++i) groups[i] = dev.meta[i].unbalance_id;
  const DevSplit split = split_dev(groups, spec.dev_fraction, spec.seed);
  Matrix train_x = take_rows(dev.values, split.train);
  Matrix test_x = take_rows(dev.values, split.test);
  const auto train_y = labels_of(dev, split.train);
  const auto test_y = labels_of(dev, split.test);
  dev = {};

  switch (spec.approach) {
    case Approach::FftMlp: {
      if (spec.depth > 4) fail(ErrorCode::BadParams, "FFT network depth must be 0..4");
      out.scaler = dsp::fit_robust_scaler(train_x);
      out.scaler->apply_inplace(train_x);
      out.scaler->apply_inplace(test_x);
      models::MlpOptions opts;
      opts.hidden_width = spec.hidden_width;
      opts.train = spec.train;
      out.model = models::mlp_train(train_x, train_y, test_x, test_y, spec.depth, derive_seed(spec.seed, "fft-mlp"),
                                    opts, &out.log);
      break;
    }
    case Approach::CnnRaw: {
      if (spec.depth < 1) fail(ErrorCode::BadParams, "CNN needs at least one conv block");
      models::CnnOptions opts;
      opts.arch = spec.cnn;
      opts.arch.input_length = kWindowSize;
      opts.train = spec.train;
      out.model = models::cnn_train(train_x, train_y, test_x, test_y, spec.depth, derive_seed(spec.seed, "cnn"), opts,
                                    &out.log);
      break;
    }
    case Approach::RfMinimal3:
    case Approach::RfMinimal7: {
      out.model = models::rf_train(train_x, train_y, spec.forest, derive_seed(spec.seed, "forest"));
      // hold-out accuracy stands in for a test loss
      const auto& forest = std::get<models::RandomForest>(out.model);
      std::vector<int> pred(test_x.rows);
      for (std::size_t i = 0; i < test_x.rows; ++i) pred[i] = forest.predict(test_x.row(i));
      const double acc = test_x.rows ? accuracy(pred, test_y) : 0.0;
      out.log.test_loss = {1.0 - acc};
      out.log.best_epoch = 0;
      out.log.best_test_loss = 1.0 - acc;
      break;
    }
    case Approach::HmmMfcc: break;
  }
  return out;
}

EvalReport evaluate(const TrainedModel& model, const DatasetSource& source) {
  const auto& spec = model.spec;
  std::vector<int> strengths = spec.approach == Approach::HmmMfcc
                                   ? std::vector<int>{spec.hmm.normal_strength, spec.hmm.fault_strength}
                                   : spec.mode.strengths();
  const auto features = load_features(spec, source, strengths, Role::Evaluation);
  const auto p = predict(model, features);
  if (p.pred.empty()) fail(ErrorCode::EmptyInput, "no evaluation window falls inside the model's speed intervals");
  EvalReport r = make_report(spec, p);

  if (spec.approach == Approach::HmmMfcc) {
    r.hmm_intervals = model.selection;
    for (auto& iv : r.hmm_intervals) {
      std::vector<int> pi, ti;
      for (std::size_t i = 0; i < p.pred.size(); ++i)
        if (p.rpm[i] >= iv.interval.lo && p.rpm[i] < iv.interval.hi) {
          pi.push_back(p.pred[i]);
          ti.push_back(p.truth[i]);
        }
      iv.eval_n = pi.size();
      const bool both = std::find(ti.begin(), ti.end(), 0) != ti.end() && std::find(ti.begin(), ti.end(), 1) != ti.end();
      iv.eval_balanced_accuracy = both ? balanced_accuracy(pi, ti) : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return r;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const DatasetSource& source) {
  ExperimentResult res;
  res.model = train(spec, source);
  res.report = evaluate(res.model, source);
  res.report.spec["data"] = source.describe();
  return res;
}

}  // namespace shaft::pipeline
