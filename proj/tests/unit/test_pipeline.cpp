#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "shaft/error.hpp"
#include "shaft/pipeline.hpp"

using namespace shaft;
using namespace shaft::pipeline;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Usage;
}

SyntheticPlan small_plan(std::uint64_t seed = 5) {
  SyntheticPlan plan;
  plan.seed = seed;
  plan.step_seconds = 0.25;
  return plan;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentSpec quick_fft(Mode mode) {
  ExperimentSpec spec;
  spec.approach = Approach::FftMlp;
  spec.mode = mode;
  spec.depth = 1;
  spec.hidden_width = 8;
  spec.train.max_epochs = 3;
  spec.seed = 3;
  return spec;
}

}  // namespace

TEST_CASE("development split") {
  const auto s = split_dev(1000, 0.9, 1);
  CHECK(s.train.size() == 900);
  CHECK(s.test.size() == 100);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 1000);
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  const auto again = split_dev(1000, 0.9, 1);
  CHECK(again.train == s.train);
  CHECK(split_dev(1000, 0.9, 2).train != s.train);

  // label proportions survive the grouped split
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (std::size_t n : {1000u, 1237u, 5000u}) {
      std::vector<int> labels(n);
      for (std::size_t i = 0; i < n; ++i) labels[i] = (i * 7) % 10 < 3;  // 30 % ones
      const auto sp = split_dev(labels, 0.9, seed);
      CHECK(sp.train.size() + sp.test.size() == n);
      for (const auto* part : {&sp.train, &sp.test}) {
        const auto ones = std::count_if(part->begin(), part->end(), [&](std::size_t i) { return labels[i] == 1; });
        CHECK(std::abs(static_cast<double>(ones) / static_cast<double>(part->size()) - 0.3) <= 0.05);
      }
      CHECK(split_dev(labels, 0.9, seed).test == sp.test);
    }
  CHECK(code_of([] { split_dev(9); }) == ErrorCode::TooFew);

  const auto three = split_three(100, {0.4, 0.4, 0.2}, 7);
  CHECK(three[0].size() == 40);
  CHECK(three[1].size() == 40);
  CHECK(three[2].size() == 20);
  std::set<std::size_t> u;
  for (const auto& part : three) u.insert(part.begin(), part.end());
  CHECK(u.size() == 100);
}

TEST_CASE("metrics") {
  const std::vector<int> truth{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  CHECK(accuracy(truth, truth) == 1.0);
  CHECK(balanced_accuracy(truth, truth) == 1.0);
  const std::vector<int> constant(10, 1);
  CHECK(balanced_accuracy(constant, truth) == 0.5);
  const std::vector<int> partial{1, 1, 1, 1, 1, 0, 0, 0, 1, 1};  // recalls 1.0 and 0.6
  CHECK(balanced_accuracy(partial, truth) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(accuracy(partial, truth) == doctest::Approx(0.8).epsilon(1e-15));

  const std::vector<int> one_class(4, 1);
  CHECK(code_of([&] { balanced_accuracy(one_class, one_class); }) == ErrorCode::MissingClass);
  CHECK(code_of([] { accuracy({}, {}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { accuracy(truth, one_class); }) == ErrorCode::ShapeMismatch);

  const std::vector<int> strength{4, 4, 2, 2, 1, 0, 0, 0, 0, 0};
  const auto pc = per_class_accuracy(partial, truth, strength);
  CHECK(pc.at(0).acc == 0.6);
  CHECK(pc.at(0).n == 5);
  CHECK(pc.at(4).acc == 1.0);

  const std::vector<double> rpm{640, 650, 760, 799.99, 800, 1210, 1299, 1250, 630, 2330};
  const auto bins = rpm_binned_accuracy(partial, truth, rpm);
  REQUIRE(bins.size() == 5);
  CHECK(bins[0].center == 650.0);
  CHECK(bins[0].n == 3);
  CHECK(bins[1].center == 750.0);
  CHECK(bins[1].n == 2);
  CHECK(bins[2].center == 850.0);
  CHECK(bins.back().center == 2350.0);
  CHECK(bins.back().acc == 0.0);
  std::size_t total = 0;
  for (const auto& b : bins) total += b.n;
  CHECK(total == 10);
}

TEST_CASE("report identities and formats") {
  Predictions p;
  for (int i = 0; i < 997; ++i) {
    const int s = i % 5;
    p.strength.push_back(s);
    p.truth.push_back(s > 0);
    p.pred.push_back((i * 7919) % 11 == 0 ? s == 0 : s > 0);
    p.rpm.push_back(630.0 + 1.7 * i);
  }
  ExperimentSpec spec;
  const auto r = make_report(spec, p);
  double bins = 0.0, classes = 0.0;
  std::size_t nb = 0, nc = 0;
  for (const auto& b : r.rpm_bins) {
    bins += b.acc * static_cast<double>(b.n);
    nb += b.n;
    CHECK(b.n > 0);
    CHECK(b.acc >= 0.0);
    CHECK(b.acc <= 1.0);
  }
  for (const auto& [k, g] : r.per_class) {
    classes += g.acc * static_cast<double>(g.n);
    nc += g.n;
  }
  CHECK(nb == 997);
  CHECK(nc == 997);
  CHECK(std::abs(bins / 997.0 - r.overall_accuracy) < 1e-12);
  CHECK(std::abs(classes / 997.0 - r.overall_accuracy) < 1e-12);

  const auto dir = fs::temp_directory_path() / "shaft_test_report";
  fs::create_directories(dir);
  write_report(r, dir / "r.json", ReportFormat::Json);
  write_report(r, dir / "r.csv", ReportFormat::Csv);
  const auto j = json::parse(slurp(dir / "r.json"));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  for (const char* k : {"spec", "overall_accuracy", "balanced_accuracy", "per_class", "rpm_bins", "seed", "version"})
    CHECK(j.contains(k));
  std::ifstream csv(dir / "r.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "center,acc,n");
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    std::stringstream ls(line);
    std::string c, a, n;
    std::getline(ls, c, ',');
    std::getline(ls, a, ',');
    std::getline(ls, n, ',');
    REQUIRE(row < j["rpm_bins"].size());
    CHECK(std::stod(c) == j["rpm_bins"][row]["center"].get<double>());
    CHECK(std::stod(a) == j["rpm_bins"][row]["acc"].get<double>());
    CHECK(std::stoul(n) == j["rpm_bins"][row]["n"].get<std::size_t>());
    ++row;
  }
  CHECK(row == j["rpm_bins"].size());
  // bit-reproducible
  write_report(r, dir / "r2.json", ReportFormat::Json);
  CHECK(slurp(dir / "r.json") == slurp(dir / "r2.json"));
  CHECK(code_of([] { parse_report_format("xml"); }) == ErrorCode::BadParams);
}

TEST_CASE("modes, approaches and spec encoding") {
  CHECK(parse_mode("all").is_all());
  CHECK(parse_mode("pairwise:3").strength == 3);
  CHECK(parse_mode("pairwise:3").strengths() == std::vector<int>{0, 3});
  CHECK(Mode::all().strengths() == std::vector<int>{0, 1, 2, 3, 4});
  for (const char* bad : {"pairwise:0", "pairwise:5", "pair", "pairwise:x", ""})
    CHECK(code_of([&] { parse_mode(bad); }) == ErrorCode::BadParams);
  for (auto a : {Approach::CnnRaw, Approach::FftMlp, Approach::RfMinimal3, Approach::RfMinimal7, Approach::HmmMfcc})
    CHECK(parse_approach(to_string(a)) == a);
  CHECK(code_of([] { parse_approach("svm"); }) == ErrorCode::BadParams);

  ExperimentSpec s;
  s.approach = Approach::RfMinimal7;
  s.mode = Mode::pairwise(2);
  s.seed = 77;
  s.forest.n_trees = 12;
  s.hmm.fault_strength = 4;
  const auto back = decode_experiment_spec(encode(s));
  CHECK(back.approach == s.approach);
  CHECK(back.mode.strength == 2);
  CHECK(back.seed == 77);
  CHECK(back.forest.n_trees == 12);
  CHECK(back.hmm.fault_strength == 4);
  CHECK(encode(back) == encode(s));

  const auto ivs = default_hmm_intervals();
  CHECK(ivs.size() == 17);
  CHECK(ivs.front().lo == 630.0);
  CHECK(ivs.back().hi == 2330.0);
  CHECK(HmmGrid{}.points().size() == 72);
}

TEST_CASE("synthetic plan round trip") {
  auto plan = small_plan(9);
  plan.factor_overrides[2] = 99.0;
  plan.physics.base_noise_sigma = 0.05;
  const auto back = decode_synthetic_plan(json::parse(encode(plan).dump()));
  CHECK(back.seed == 9);
  CHECK(back.step_seconds == 0.25);
  CHECK(back.factor_overrides.at(2) == 99.0);
  CHECK(back.physics.base_noise_sigma == 0.05);
  CHECK(back.config_for({2, Role::Development}).unbalance.factor() == doctest::Approx(99.0));
  json bad = encode(plan);
  bad["physics"]["warp_drive"] = 1;
  CHECK(code_of([&] { decode_synthetic_plan(bad); }) == ErrorCode::BadParams);
}

TEST_CASE("pairwise experiment uses only its two classes") {
  const SyntheticSource src(small_plan());
  const auto res = run_experiment(quick_fft(Mode::pairwise(4)), src);
  std::set<int> classes;
  for (const auto& [k, g] : res.report.per_class) classes.insert(k);
  CHECK(classes == std::set<int>{0, 4});
  CHECK(res.report.overall_accuracy >= 0.0);
  CHECK(res.report.spec["data"]["kind"] == "synthetic");

  const auto dir = fs::temp_directory_path() / "shaft_test_model";
  fs::create_directories(dir);
  save_model(res.model, dir / "m.json");
  const auto loaded = load_model(dir / "m.json");
  const auto again = evaluate(loaded, src);
  CHECK(again.overall_accuracy == res.report.overall_accuracy);
  CHECK(again.rpm_bins.size() == res.report.rpm_bins.size());

  auto j = json::parse(slurp(dir / "m.json"));
  j["format_version"] = 99;
  CHECK(code_of([&] { decode_trained_model(j); }) == ErrorCode::VersionMismatch);
  j = json::parse(slurp(dir / "m.json"));
  j["model"] = "nonsense";
  CHECK(code_of([&] { decode_trained_model(j); }) == ErrorCode::BadModel);
  {
    std::ofstream out(dir / "broken.json");
    out << "{not json";
  }
  CHECK(code_of([&] { load_model(dir / "broken.json"); }) == ErrorCode::BadModel);
}

TEST_CASE("training never reads evaluation data") {
  const auto dir = fs::temp_directory_path() / "shaft_test_leak";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const SyntheticSource syn(small_plan(11));
  for (int k : {0, 2})
    for (Role role : {Role::Development, Role::Evaluation}) {
      const DatasetId id{k, role};
      write_recording(syn.load(id), dir / id.filename());
    }
  const DirectorySource src(dir);
  for (Approach a : {Approach::FftMlp, Approach::RfMinimal3}) {
    auto spec = quick_fft(Mode::pairwise(2));
    spec.approach = a;
    spec.forest.n_trees = 10;
    save_model(train(spec, src), dir / "before.json");
    fs::rename(dir / "0E.csv", dir / "0E.bak");
    fs::rename(dir / "2E.csv", dir / "2E.bak");
    save_model(train(spec, src), dir / "after.json");
    CHECK(slurp(dir / "before.json") == slurp(dir / "after.json"));
    CHECK(code_of([&] { evaluate(load_model(dir / "after.json"), src); }) == ErrorCode::MissingDataset);
    fs::rename(dir / "0E.bak", dir / "0E.csv");
    fs::rename(dir / "2E.bak", dir / "2E.csv");
  }
}

TEST_CASE("feature extraction per approach") {
  const SyntheticSource src(small_plan());
  const auto rec = trim_warmup(src.load({1, Role::Development}));
  const auto n = window_count(rec.size());
  ExperimentSpec spec;
  spec.approach = Approach::RfMinimal3;
  auto fm = extract_features(spec, rec, {1, Role::Development});
  CHECK(fm.values.cols == 3);
  CHECK(fm.values.rows == n);
  CHECK(fm.meta.front().dataset == "1D");
  CHECK(fm.meta.front().label == 1);
  spec.approach = Approach::RfMinimal7;
  CHECK(extract_features(spec, rec, {1, Role::Development}).values.cols == 7);
  spec.approach = Approach::FftMlp;
  CHECK(extract_features(spec, rec, {1, Role::Development}).values.cols == 2048);
  spec.approach = Approach::CnnRaw;
  fm = extract_features(spec, rec, {1, Role::Development});
  CHECK(fm.values.cols == 4096);
  CHECK(fm.values(0, 5) == rec.vib1[5]);
}

TEST_CASE("HMM experiment on a single interval") {
  auto plan = small_plan(13);
  plan.step_seconds = 0.5;
  const SyntheticSource src(plan);
  HmmOptions opts;
  opts.intervals = {{630.0, 2330.0}};
  opts.grid.n_mfcc = {8};
  opts.grid.n_states = {2};
  opts.grid.snippet_len = {512};
  opts.grid.half_overlap = false;
  opts.fit.max_iter = 30;
  const auto res = run_hmm_experiment(src, opts, 4);
  REQUIRE(res.detectors.size() == 1);
  REQUIRE(res.report.hmm_intervals.size() == 1);
  const auto& iv = res.report.hmm_intervals[0];
  CHECK(iv.n_states == 2);
  CHECK(iv.mfcc.n_mfcc == 8);
  CHECK(iv.eval_balanced_accuracy >= 0.5);
  std::set<int> classes;
  for (const auto& [k, g] : res.report.per_class) classes.insert(k);
  CHECK(classes == std::set<int>{0, 3});

  // an interval with no windows at all
  opts.intervals = {{5000.0, 5100.0}};
  CHECK(code_of([&] { run_hmm_experiment(src, opts, 4); }) == ErrorCode::EmptyInterval);
}

TEST_CASE("missing datasets") {
  const DirectorySource src(fs::temp_directory_path() / "shaft_no_such_dir");
  CHECK(code_of([&] { (void)src.load({0, Role::Development}); }) == ErrorCode::MissingDataset);
  CHECK(code_of([&] { train(quick_fft(Mode::pairwise(1)), src); }) == ErrorCode::MissingDataset);
}
