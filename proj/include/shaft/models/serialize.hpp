#pragma once

#include <json.hpp>

#include "shaft/dsp.hpp"
#include "shaft/models/cnn1d.hpp"
#include "shaft/models/hmm.hpp"
#include "shaft/models/logreg.hpp"
#include "shaft/models/mlp.hpp"
#include "shaft/models/random_forest.hpp"

// JSON encodings of every learner and scaler. Doubles are written with
// round-trip precision, so decode(encode(m)) reproduces m exactly.

namespace shaft::models {

using json = nlohmann::json;

json encode(const dsp::RobustScaler& s);
json encode(const dsp::StandardScaler& s);
json encode(const dsp::MfccConfig& c);
json encode(const LogRegModel& m);
json encode(const MlpModel& m);
json encode(const Cnn1dModel& m);
json encode(const RandomForest& f);
json encode(const GaussianHmm& h);
json encode(const HmmDetector& d);

dsp::RobustScaler decode_robust_scaler(const json& j);
dsp::StandardScaler decode_standard_scaler(const json& j);
dsp::MfccConfig decode_mfcc_config(const json& j);
LogRegModel decode_logreg(const json& j);
MlpModel decode_mlp(const json& j);
Cnn1dModel decode_cnn(const json& j);
RandomForest decode_random_forest(const json& j);
GaussianHmm decode_hmm(const json& j);
HmmDetector decode_hmm_detector(const json& j);

}  // namespace shaft::models
