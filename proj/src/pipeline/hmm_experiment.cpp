#include <algorithm>
#include <cmath>
#include <exception>
#include <map>

#include "shaft/error.hpp"
#include "shaft/models/logreg.hpp"
#include "shaft/pipeline.hpp"

namespace shaft::pipeline {

namespace {

struct IntervalData {
  std::vector<const double*> windows;
  std::vector<int> labels;
};

Matrix stack_frames(const std::vector<Matrix>& seqs) {
  std::size_t rows = 0;
  for (const auto& s : seqs) rows += s.rows;
  Matrix out(rows, seqs.empty() ? 0 : seqs.front().cols);
  std::size_t r = 0;
  for (const auto& s : seqs) {
    std::copy(s.data.begin(), s.data.end(), out.data.begin() + static_cast<long>(r * out.cols));
    r += s.rows;
  }
  return out;
}

Matrix first_columns(const Matrix& m, std::size_t n) {
  Matrix out(m.rows, n);
  for (std::size_t i = 0; i < m.rows; ++i)
    std::copy_n(m.row(i).begin(), n, out.row(i).begin());
  return out;
}

struct Candidate {
  models::HmmDetector detector;
  double score = -1.0;
};

double selection_score(std::span<const int> pred, std::span<const int> truth) {
  const bool both = std::find(truth.begin(), truth.end(), 0) != truth.end() &&
                    std::find(truth.begin(), truth.end(), 1) != truth.end();
  return both ? balanced_accuracy(pred, truth) : accuracy(pred, truth);
}

Candidate fit_candidate(const std::vector<Matrix>& mfcc_full, const std::array<std::vector<std::size_t>, 3>& sets,
                        std::span<const int> labels, const dsp::MfccConfig& cfg, std::size_t n_states,
                        const HmmOptions& opts, std::uint64_t seed) {
  auto seq = [&](std::size_t i) { return first_columns(mfcc_full[i], cfg.n_mfcc); };

  std::vector<Matrix> normal;
  for (auto i : sets[0])
    if (labels[i] == 0) normal.push_back(seq(i));
  if (normal.empty()) fail(ErrorCode::MissingClass, "no normal windows in the HMM fitting split");

  Candidate c;
  auto& d = c.detector;
  d.mfcc = cfg;
  d.scaler1 = dsp::fit_standard_scaler(stack_frames(normal));
  for (auto& s : normal)
    for (std::size_t t = 0; t < s.rows; ++t) d.scaler1.apply_inplace(s.row(t));
  d.hmm = models::hmm_fit(normal, n_states, seed, opts.fit).hmm;

  auto score_of = [&](std::size_t i) {
    Matrix s = seq(i);
    for (std::size_t t = 0; t < s.rows; ++t) d.scaler1.apply_inplace(s.row(t));
    return models::hmm_loglik(d.hmm, s);
  };

  Matrix z(sets[1].size(), 1);
  std::vector<int> y2;
  for (std::size_t k = 0; k < sets[1].size(); ++k) {
    z(k, 0) = score_of(sets[1][k]);
    y2.push_back(labels[sets[1][k]]);
  }
  d.scaler2 = dsp::fit_standard_scaler(z);
  for (std::size_t k = 0; k < z.rows; ++k) d.scaler2.apply_inplace(z.row(k));
  d.head = models::logreg_train(z, y2, opts.head_reg);

  std::vector<int> pred, truth;
  for (auto i : sets[2]) {
    std::vector<double> v{score_of(i)};
    d.scaler2.apply_inplace(v);
    pred.push_back(d.head.predict_proba(v) >= 0.5 ? 1 : 0);
    truth.push_back(labels[i]);
  }
  c.score = pred.empty() ? 0.0 : selection_score(pred, truth);
  return c;
}

}  // namespace

std::vector<models::HmmDetector> train_hmm_detectors(const DatasetSource& source, const HmmOptions& opts,
                                                     std::uint64_t seed, std::vector<HmmIntervalResult>* selection) {
  if (opts.intervals.empty()) fail(ErrorCode::BadParams, "no speed intervals given");
  ExperimentSpec raw;
  raw.approach = Approach::HmmMfcc;
  const std::vector<int> strengths{opts.normal_strength, opts.fault_strength};
  const auto dev = load_features(raw, source, strengths, Role::Development);

  const auto grid = opts.grid.points();
  // one MFCC cache per snippet layout, computed with the widest n_mfcc
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> layouts;
  std::size_t widest = 0;
  for (const auto& [cfg, ns] : grid) {
    layouts.emplace(std::make_pair(cfg.snippet_len, cfg.overlap), 0);
    widest = std::max(widest, cfg.n_mfcc);
  }

  std::vector<models::HmmDetector> detectors;
  if (selection) selection->clear();
  for (std::size_t iv = 0; iv < opts.intervals.size(); ++iv) {
    const auto interval = opts.intervals[iv];
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < dev.values.rows; ++i)
      if (dev.meta[i].mean_rpm >= interval.lo && dev.meta[i].mean_rpm < interval.hi) rows.push_back(i);
    if (rows.empty())
      fail(ErrorCode::EmptyInterval, "no development windows between " + std::to_string(interval.lo) + " and " +
                                         std::to_string(interval.hi) + " RPM");
    std::vector<int> labels;
    for (auto r : rows) labels.push_back(dev.meta[r].label);
    const std::uint64_t iv_seed = derive_seed(seed, static_cast<std::uint64_t>(iv));
    const auto sets = split_three(rows.size(), opts.split, iv_seed);

    std::map<std::pair<std::size_t, std::size_t>, std::vector<Matrix>> cache;
    for (const auto& [layout, unused] : layouts) {
      dsp::MfccConfig cfg;
      cfg.n_mfcc = widest;
      cfg.snippet_len = layout.first;
      cfg.overlap = layout.second;
      const dsp::MfccExtractor ex(cfg);
      auto& seqs = cache[layout];
      seqs.resize(rows.size());
      const auto n = static_cast<long>(rows.size());
#pragma omp parallel for schedule(dynamic, 4)
      for (long k = 0; k < n; ++k)
        seqs[static_cast<std::size_t>(k)] = ex.sequence(dev.values.row(rows[static_cast<std::size_t>(k)]));
    }

    std::vector<Candidate> cands(grid.size());
    std::vector<std::exception_ptr> errors(grid.size());
    const auto n_grid = static_cast<long>(grid.size());
#pragma omp parallel for schedule(dynamic)
    for (long g = 0; g < n_grid; ++g) {
      const auto gi = static_cast<std::size_t>(g);
      const auto& [cfg, ns] = grid[gi];
      try {
        cands[gi] = fit_candidate(cache.at({cfg.snippet_len, cfg.overlap}), sets, labels, cfg, ns, opts,
                                  derive_seed(iv_seed, static_cast<std::uint64_t>(g)));
      } catch (...) {
        errors[gi] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);

    std::size_t best = 0;
    for (std::size_t g = 1; g < cands.size(); ++g)
      if (cands[g].score > cands[best].score) best = g;
    auto det = std::move(cands[best].detector);
    det.rpm_lo = interval.lo;
    det.rpm_hi = interval.hi;
    if (selection) {
      HmmIntervalResult r;
      r.interval = interval;
      r.mfcc = det.mfcc;
      r.n_states = det.hmm.n_states;
      r.selection_balanced_accuracy = cands[best].score;
      r.eval_balanced_accuracy = std::numeric_limits<double>::quiet_NaN();
      selection->push_back(r);
    }
    detectors.push_back(std::move(det));
  }
  return detectors;
}

HmmExperimentResult run_hmm_experiment(const DatasetSource& source, const HmmOptions& opts, std::uint64_t seed,
                                       const ExperimentSpec* spec_echo) {
  TrainedModel model;
  if (spec_echo) model.spec = *spec_echo;
  model.spec.approach = Approach::HmmMfcc;
  model.spec.hmm = opts;
  model.spec.seed = seed;
  model.model = train_hmm_detectors(source, opts, seed, &model.selection);
  HmmExperimentResult res;
  res.report = evaluate(model, source);
  res.report.spec["data"] = source.describe();
  res.detectors = std::move(std::get<std::vector<models::HmmDetector>>(model.model));
  return res;
}

}  // namespace shaft::pipeline
