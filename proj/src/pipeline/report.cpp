#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "shaft/error.hpp"
#include "shaft/pipeline.hpp"

namespace shaft::pipeline {

namespace {

std::string num(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

}  // namespace

ReportFormat parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  fail(ErrorCode::BadParams, "unknown report format '" + std::string(s) + "' (expected json or csv)");
}

ordered_json report_json(const EvalReport& r) {
  ordered_json j;
  j["spec"] = r.spec;
  j["overall_accuracy"] = r.overall_accuracy;
  j["balanced_accuracy"] = r.balanced_accuracy;
  ordered_json per_class = ordered_json::object();
  for (const auto& [k, g] : r.per_class) per_class[std::to_string(k)] = {{"acc", g.acc}, {"n", g.n}};
  j["per_class"] = per_class;
  ordered_json bins = ordered_json::array();
  for (const auto& b : r.rpm_bins) bins.push_back({{"center", b.center}, {"acc", b.acc}, {"n", b.n}});
  j["rpm_bins"] = bins;
  j["seed"] = r.seed;
  j["version"] = r.version;
  if (!r.hmm_intervals.empty()) {
    ordered_json ivs = ordered_json::array();
    for (const auto& iv : r.hmm_intervals)
      ivs.push_back({{"rpm_lo", iv.interval.lo},
                     {"rpm_hi", iv.interval.hi},
                     {"n_mfcc", iv.mfcc.n_mfcc},
                     {"n_states", iv.n_states},
                     {"snippet_len", iv.mfcc.snippet_len},
                     {"overlap", iv.mfcc.overlap},
                     {"selection_balanced_accuracy", iv.selection_balanced_accuracy},
                     {"balanced_accuracy",
                      std::isfinite(iv.eval_balanced_accuracy) ? ordered_json(iv.eval_balanced_accuracy) : ordered_json()},
                     {"n", iv.eval_n}});
    j["hmm_intervals"] = ivs;
  }
  return j;
}

void write_report(const EvalReport& r, const std::filesystem::path& path, ReportFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  if (format == ReportFormat::Json) {
    out << report_json(r).dump(2) << '\n';
  } else {
    out << "center,acc,n\n";
    for (const auto& b : r.rpm_bins) out << num(b.center) << ',' << num(b.acc) << ',' << b.n << '\n';
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace shaft::pipeline
