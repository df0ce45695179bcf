#include "shaft/models/serialize.hpp"

#include "shaft/error.hpp"

namespace shaft::models {

namespace {

json encode_matrix(const Matrix& m) { return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}}; }

Matrix decode_matrix(const json& j) {
  Matrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != m.rows * m.cols) fail(ErrorCode::BadModel, "matrix payload has the wrong size");
  return m;
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::BadModel, std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

json encode(const dsp::RobustScaler& s) { return {{"median", s.median}, {"iqr", s.iqr}, {"epsilon", s.epsilon}}; }

json encode(const dsp::StandardScaler& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"epsilon", s.epsilon}};
}

json encode(const dsp::MfccConfig& c) {
  return {{"n_mfcc", c.n_mfcc},     {"n_mels", c.n_mels},
          {"snippet_len", c.snippet_len}, {"overlap", c.overlap},
          {"frame_window", c.frame_window == dsp::Taper::Hann ? "hann" : "rectangular"},
          {"log_floor", c.log_floor}};
}

json encode(const LogRegModel& m) { return {{"weights", m.weights}, {"bias", m.bias}, {"reg", m.reg}}; }

json encode(const MlpModel& m) {
  return {{"layer_sizes", m.layer_sizes},
          {"weights", m.weights},
          {"biases", m.biases},
          {"negative_slope", m.negative_slope}};
}

json encode(const Cnn1dModel& m) {
  json blocks = json::array();
  for (const auto& b : m.blocks)
    blocks.push_back({{"c_in", b.c_in},
                      {"c_out", b.c_out},
                      {"length", b.length},
                      {"weight", b.weight},
                      {"gamma", b.gamma},
                      {"beta", b.beta},
                      {"running_mean", b.running_mean},
                      {"running_var", b.running_var}});
  const auto& a = m.arch;
  return {{"arch",
           {{"input_length", a.input_length},
            {"n_conv", a.n_conv},
            {"kernel", a.kernel},
            {"base_channels", a.base_channels},
            {"pool", a.pool},
            {"fc_width", a.fc_width},
            {"negative_slope", a.negative_slope}}},
          {"blocks", blocks},
          {"fc_w", m.fc_w},
          {"fc_b", m.fc_b},
          {"out_w", m.out_w},
          {"out_b", m.out_b},
          {"bn_eps", m.bn_eps},
          {"bn_momentum", m.bn_momentum}};
}

json encode(const RandomForest& f) {
  json trees = json::array();
  for (const auto& t : f.trees) {
    // columnar node layout keeps files compact
    std::vector<int> feature, left, right;
    std::vector<double> threshold;
    std::vector<std::vector<int>> counts;
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      counts.push_back(n.counts);
    }
    trees.push_back(
        {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"counts", counts}});
  }
  return {{"n_features", f.n_features},
          {"n_classes", f.n_classes},
          {"n_trees", f.options.n_trees},
          {"max_depth", f.options.max_depth},
          {"features_per_split", f.options.features_per_split},
          {"bootstrap", f.options.bootstrap},
          {"min_samples_split", f.options.min_samples_split},
          {"seed", f.seed},
          {"trees", trees}};
}

json encode(const GaussianHmm& h) {
  return {{"n_states", h.n_states},
          {"dim", h.dim},
          {"initial", h.initial},
          {"transition", encode_matrix(h.transition)},
          {"means", encode_matrix(h.means)},
          {"variances", encode_matrix(h.variances)},
          {"variance_floor", h.variance_floor},
          {"variance_clamped", h.variance_clamped}};
}

json encode(const HmmDetector& d) {
  return {{"rpm_lo", d.rpm_lo},          {"rpm_hi", d.rpm_hi},         {"mfcc", encode(d.mfcc)},
          {"scaler1", encode(d.scaler1)}, {"hmm", encode(d.hmm)},       {"scaler2", encode(d.scaler2)},
          {"head", encode(d.head)}};
}

dsp::RobustScaler decode_robust_scaler(const json& j) {
  return guarded("robust scaler", [&] {
    dsp::RobustScaler s;
    s.median = j.at("median").get<std::vector<double>>();
    s.iqr = j.at("iqr").get<std::vector<double>>();
    s.epsilon = j.at("epsilon").get<double>();
    return s;
  });
}

dsp::StandardScaler decode_standard_scaler(const json& j) {
  return guarded("standard scaler", [&] {
    dsp::StandardScaler s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    s.epsilon = j.at("epsilon").get<double>();
    return s;
  });
}

dsp::MfccConfig decode_mfcc_config(const json& j) {
  return guarded("MFCC config", [&] {
    dsp::MfccConfig c;
    c.n_mfcc = j.at("n_mfcc").get<std::size_t>();
    c.n_mels = j.at("n_mels").get<std::size_t>();
    c.snippet_len = j.at("snippet_len").get<std::size_t>();
    c.overlap = j.at("overlap").get<std::size_t>();
    c.frame_window = j.at("frame_window").get<std::string>() == "hann" ? dsp::Taper::Hann : dsp::Taper::Rectangular;
    c.log_floor = j.at("log_floor").get<double>();
    return c;
  });
}

LogRegModel decode_logreg(const json& j) {
  return guarded("logistic regression", [&] {
    LogRegModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.reg = j.at("reg").get<double>();
    return m;
  });
}

MlpModel decode_mlp(const json& j) {
  return guarded("MLP", [&] {
    MlpModel m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    m.negative_slope = j.at("negative_slope").get<double>();
    if (m.layer_sizes.size() < 2 || m.weights.size() != m.layer_sizes.size() - 1 || m.biases.size() != m.weights.size())
      fail(ErrorCode::BadModel, "MLP layer arrays are inconsistent");
    for (std::size_t l = 0; l < m.weights.size(); ++l)
      if (m.weights[l].size() != m.layer_sizes[l] * m.layer_sizes[l + 1] || m.biases[l].size() != m.layer_sizes[l + 1])
        fail(ErrorCode::BadModel, "MLP layer " + std::to_string(l) + " has the wrong size");
    return m;
  });
}

Cnn1dModel decode_cnn(const json& j) {
  return guarded("CNN", [&] {
    Cnn1dModel m;
    const auto& a = j.at("arch");
    m.arch.input_length = a.at("input_length").get<std::size_t>();
    m.arch.n_conv = a.at("n_conv").get<std::size_t>();
    m.arch.kernel = a.at("kernel").get<std::size_t>();
    m.arch.base_channels = a.at("base_channels").get<std::size_t>();
    m.arch.pool = a.at("pool").get<std::size_t>();
    m.arch.fc_width = a.at("fc_width").get<std::size_t>();
    m.arch.negative_slope = a.at("negative_slope").get<double>();
    for (const auto& b : j.at("blocks")) {
      ConvBlock blk;
      blk.c_in = b.at("c_in").get<std::size_t>();
      blk.c_out = b.at("c_out").get<std::size_t>();
      blk.length = b.at("length").get<std::size_t>();
      blk.weight = b.at("weight").get<std::vector<double>>();
      blk.gamma = b.at("gamma").get<std::vector<double>>();
      blk.beta = b.at("beta").get<std::vector<double>>();
      blk.running_mean = b.at("running_mean").get<std::vector<double>>();
      blk.running_var = b.at("running_var").get<std::vector<double>>();
      m.blocks.push_back(std::move(blk));
    }
    m.fc_w = j.at("fc_w").get<std::vector<double>>();
    m.fc_b = j.at("fc_b").get<std::vector<double>>();
    m.out_w = j.at("out_w").get<std::vector<double>>();
    m.out_b = j.at("out_b").get<std::vector<double>>();
    m.bn_eps = j.at("bn_eps").get<double>();
    m.bn_momentum = j.at("bn_momentum").get<double>();
    if (m.blocks.size() != m.arch.n_conv || m.fc_w.size() != m.flat_size() * m.arch.fc_width)
      fail(ErrorCode::BadModel, "CNN arrays are inconsistent");
    return m;
  });
}

RandomForest decode_random_forest(const json& j) {
  return guarded("random forest", [&] {
    RandomForest f;
    f.n_features = j.at("n_features").get<std::size_t>();
    f.n_classes = j.at("n_classes").get<int>();
    f.options.n_trees = j.at("n_trees").get<std::size_t>();
    f.options.max_depth = j.at("max_depth").get<std::size_t>();
    f.options.features_per_split = j.at("features_per_split").get<std::size_t>();
    f.options.bootstrap = j.at("bootstrap").get<bool>();
    f.options.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    f.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("trees")) {
      const auto feature = t.at("feature").get<std::vector<int>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<int>>();
      const auto right = t.at("right").get<std::vector<int>>();
      const auto counts = t.at("counts").get<std::vector<std::vector<int>>>();
      DecisionTree tree;
      for (std::size_t i = 0; i < feature.size(); ++i)
        tree.nodes.push_back({feature[i], threshold.at(i), left.at(i), right.at(i), counts.at(i)});
      f.trees.push_back(std::move(tree));
    }
    return f;
  });
}

GaussianHmm decode_hmm(const json& j) {
  return guarded("HMM", [&] {
    GaussianHmm h;
    h.n_states = j.at("n_states").get<std::size_t>();
    h.dim = j.at("dim").get<std::size_t>();
    h.initial = j.at("initial").get<std::vector<double>>();
    h.transition = decode_matrix(j.at("transition"));
    h.means = decode_matrix(j.at("means"));
    h.variances = decode_matrix(j.at("variances"));
    h.variance_floor = j.at("variance_floor").get<std::vector<double>>();
    h.variance_clamped = j.at("variance_clamped").get<bool>();
    return h;
  });
}

HmmDetector decode_hmm_detector(const json& j) {
  return guarded("HMM detector", [&] {
    HmmDetector d;
    d.rpm_lo = j.at("rpm_lo").get<double>();
    d.rpm_hi = j.at("rpm_hi").get<double>();
    d.mfcc = decode_mfcc_config(j.at("mfcc"));
    d.scaler1 = decode_standard_scaler(j.at("scaler1"));
    d.hmm = decode_hmm(j.at("hmm"));
    d.scaler2 = decode_standard_scaler(j.at("scaler2"));
    d.head = decode_logreg(j.at("head"));
    return d;
  });
}

}  // namespace shaft::models
