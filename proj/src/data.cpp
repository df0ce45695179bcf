#include "shaft/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string_view>

#include "shaft/error.hpp"

namespace shaft {

namespace {

constexpr std::array<std::string_view, 5> kColumns = {
    "V_in", "Measured_RPM", "Vibration_1", "Vibration_2", "Vibration_3"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <typename F>
void for_each_field(std::string_view line, F&& f) {
  std::size_t col = 0;
  while (true) {
    const auto comma = line.find(',');
    f(col++, line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
}

bool parse_real(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Usage: return "Usage";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::BadId: return "BadId";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::BadLength: return "BadLength";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::MissingDataset: return "MissingDataset";
    case ErrorCode::TooFew: return "TooFew";
    case ErrorCode::EmptyInterval: return "EmptyInterval";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::BadModel: return "BadModel";
  }
  return "Unknown";
}

std::string channel_column(Channel c) {
  switch (c) {
    case Channel::Vib1: return "Vibration_1";
    case Channel::Vib2: return "Vibration_2";
    case Channel::Vib3: return "Vibration_3";
  }
  return {};
}

std::string DatasetId::str() const {
  std::string s;
  s += static_cast<char>('0' + strength);
  s += role == Role::Development ? 'D' : 'E';
  return s;
}

DatasetId parse_dataset_id(std::string_view s) {
  if (s.size() != 2 || s[0] < '0' || s[0] > '4' || (s[1] != 'D' && s[1] != 'E'))
    fail(ErrorCode::BadId, "bad dataset id '" + std::string(s) + "' (expected [0-4][DE])");
  return DatasetId{s[0] - '0', s[1] == 'D' ? Role::Development : Role::Evaluation};
}

const std::vector<double>& Recording::channel(Channel c) const {
  switch (c) {
    case Channel::Vib1: return vib1;
    case Channel::Vib2: return vib2;
    case Channel::Vib3: return vib3;
  }
  return vib1;
}

void Recording::validate() const {
  const auto n = vib1.size();
  if (v_in.size() != n || measured_rpm.size() != n || vib2.size() != n || vib3.size() != n)
    fail(ErrorCode::BadParams, "recording channels differ in length");
  if (sample_rate != kSampleRate) fail(ErrorCode::BadParams, "sample rate must be 4096 Hz");
  for (double rpm : measured_rpm)
    if (!std::isfinite(rpm) || rpm < 0.0) fail(ErrorCode::BadParams, "Measured_RPM must be finite and >= 0");
}

Recording load_recording(const std::filesystem::path& path, DatasetId id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::vector<char> buffer(1 << 20);
  in.rdbuf()->pubsetbuf(buffer.data(), static_cast<std::streamsize>(buffer.size()));

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) fail(ErrorCode::EmptyFile, path.string() + " is empty");
  std::string_view header = line;
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);

  // column index of each required channel, in kColumns order
  std::array<std::size_t, 5> where{};
  where.fill(std::string::npos);
  std::size_t n_fields = 0;
  for_each_field(header, [&](std::size_t col, std::string_view name) {
    name = trim(name);
    for (std::size_t k = 0; k < kColumns.size(); ++k)
      if (name == kColumns[k]) where[k] = col;
    n_fields = col + 1;
  });
  for (std::size_t k = 0; k < kColumns.size(); ++k)
    if (where[k] == std::string::npos) fail(ErrorCode::MissingColumn, std::string(kColumns[k]));

  // map file column -> channel slot (or -1 for ignored extra columns)
  std::vector<int> slot(n_fields, -1);
  for (std::size_t k = 0; k < kColumns.size(); ++k) slot[where[k]] = static_cast<int>(k);

  Recording r;
  r.unbalance_id = id.strength;
  r.role = id.role;
  r.source = RealFile{path};
  std::array<std::vector<double>*, 5> dst = {&r.v_in, &r.measured_rpm, &r.vib1, &r.vib2, &r.vib3};

  std::size_t row = 0;
  while (std::getline(in, line)) {
    std::string_view sv = line;
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    if (sv.empty()) continue;
    ++row;
    std::size_t seen = 0;
    for_each_field(sv, [&](std::size_t col, std::string_view cell) {
      seen = col + 1;
      if (col >= n_fields || slot[col] < 0) return;
      double value = 0.0;
      if (!parse_real(cell, value))
        fail(ErrorCode::NonNumericCell, "row " + std::to_string(row) + ", column " +
                                            std::string(kColumns[static_cast<std::size_t>(slot[col])]) +
                                            ": '" + std::string(cell) + "'");
      dst[static_cast<std::size_t>(slot[col])]->push_back(value);
    });
    if (seen != n_fields)
      fail(ErrorCode::RaggedRow, "row " + std::to_string(row) + " has " + std::to_string(seen) +
                                     " fields, header has " + std::to_string(n_fields));
  }
  if (row == 0) fail(ErrorCode::EmptyFile, path.string() + " has no data rows");
  r.validate();
  return r;
}

void write_recording(const Recording& r, const std::filesystem::path& path) {
  r.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "V_in,Measured_RPM,Vibration_1,Vibration_2,Vibration_3\n";
  std::string buf;
  buf.reserve(1 << 20);
  std::array<char, 32> num{};
  const std::array<const std::vector<double>*, 5> src = {&r.v_in, &r.measured_rpm, &r.vib1, &r.vib2,
                                                         &r.vib3};
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t k = 0; k < src.size(); ++k) {
      const auto res = std::to_chars(num.data(), num.data() + num.size(), (*src[k])[i]);
      buf.append(num.data(), res.ptr);
      buf += k + 1 < src.size() ? ',' : '\n';
    }
    if (buf.size() > (1 << 20) - 256) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

Recording trim_warmup(const Recording& r, std::size_t n) {
  if (r.size() <= n)
    fail(ErrorCode::TooShort, "recording of " + std::to_string(r.size()) + " samples cannot drop " +
                                  std::to_string(n) + " warm-up samples");
  Recording out;
  out.sample_rate = r.sample_rate;
  out.unbalance_id = r.unbalance_id;
  out.role = r.role;
  out.source = r.source;
  const auto drop = static_cast<std::ptrdiff_t>(n);
  auto tail = [drop](const std::vector<double>& v) { return std::vector<double>(v.begin() + drop, v.end()); };
  out.v_in = tail(r.v_in);
  out.measured_rpm = tail(r.measured_rpm);
  out.vib1 = tail(r.vib1);
  out.vib2 = tail(r.vib2);
  out.vib3 = tail(r.vib3);
  return out;
}

std::vector<WindowSample> window(const Recording& r, Channel channel, std::size_t size, std::size_t hop) {
  if (size == 0 || hop == 0) fail(ErrorCode::BadParams, "window size and hop must be >= 1");
  const auto& src = r.channel(channel);
  const std::size_t count = window_count(r.size(), size, hop);
  std::vector<WindowSample> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto begin = static_cast<std::ptrdiff_t>(i * hop);
    const auto end = begin + static_cast<std::ptrdiff_t>(size);
    auto& w = out[i];
    w.values.assign(src.begin() + begin, src.begin() + end);
    w.mean_rpm = std::accumulate(r.measured_rpm.begin() + begin, r.measured_rpm.begin() + end, 0.0) /
                 static_cast<double>(size);
    w.unbalance_id = r.unbalance_id;
    w.label = r.unbalance_id != 0 ? 1 : 0;
    w.window_index = i;
  }
  return out;
}

std::vector<std::vector<WindowSample>> window_all_channels(const Recording& r, std::size_t size,
                                                           std::size_t hop) {
  return {window(r, Channel::Vib1, size, hop), window(r, Channel::Vib2, size, hop),
          window(r, Channel::Vib3, size, hop)};
}

}  // namespace shaft
