#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "shaft/data.hpp"
#include "shaft/error.hpp"
#include "shaft/rng.hpp"

using namespace shaft;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "shaft_test_data";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Usage;  // sentinel: nothing thrown
}

Recording ramp(std::size_t n, double rpm = 1500.0) {
  Recording r;
  r.v_in.assign(n, 6.0);
  r.measured_rpm.assign(n, rpm);
  r.vib1.resize(n);
  r.vib2.resize(n);
  r.vib3.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.vib1[i] = static_cast<double>(i);
    r.vib2[i] = -static_cast<double>(i);
    r.vib3[i] = 0.5 * static_cast<double>(i);
  }
  return r;
}

}  // namespace

TEST_CASE("dataset ids") {
  CHECK(parse_dataset_id("0D") == DatasetId{0, Role::Development});
  CHECK(parse_dataset_id("4E") == DatasetId{4, Role::Evaluation});
  CHECK(DatasetId{3, Role::Evaluation}.str() == "3E");
  CHECK(DatasetId{1, Role::Development}.filename() == "1D.csv");
  for (const char* bad : {"5D", "0d", "D0", "", "0DE", "-1D"})
    CHECK(code_of([&] { parse_dataset_id(bad); }) == ErrorCode::BadId);
}

TEST_CASE("all-zero file parses to the same length") {
  std::string text = "V_in,Measured_RPM,Vibration_1,Vibration_2,Vibration_3\n";
  for (int i = 0; i < 8192; ++i) text += "0,0,0,0,0\n";
  const auto p = scratch("zeros.csv");
  write_text(p, text);
  const auto r = load_recording(p, {0, Role::Development});
  CHECK(r.size() == 8192);
  CHECK(r.unbalance_id == 0);
  CHECK(std::holds_alternative<RealFile>(r.source));
}

TEST_CASE("header order, extra columns, BOM and CRLF") {
  const auto p = scratch("shuffled.csv");
  write_text(p,
             "\xEF\xBB\xBFVibration_3,extra,Vibration_1,V_in,Measured_RPM,Vibration_2\r\n"
             "3,x,1,2.5,+1e3,2\r\n"
             "6,y,4,2.5,1.0E3,5\r\n");
  const auto r = load_recording(p, {2, Role::Evaluation});
  REQUIRE(r.size() == 2);
  CHECK(r.vib1 == std::vector<double>{1, 4});
  CHECK(r.vib2 == std::vector<double>{2, 5});
  CHECK(r.vib3 == std::vector<double>{3, 6});
  CHECK(r.measured_rpm == std::vector<double>{1000, 1000});
  CHECK(r.role == Role::Evaluation);
}

TEST_CASE("loader errors") {
  SUBCASE("missing column names the column") {
    const auto p = scratch("missing.csv");
    write_text(p, "V_in,Measured_RPM,Vibration_1,Vibration_3\n1,2,3,4\n");
    try {
      load_recording(p, {0, Role::Development});
      FAIL("expected MissingColumn");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingColumn);
      CHECK(std::string(e.what()) == "Vibration_2");
    }
  }
  SUBCASE("non-numeric cell reports row and column") {
    const auto p = scratch("nonnum.csv");
    write_text(p, "V_in,Measured_RPM,Vibration_1,Vibration_2,Vibration_3\n1,2,3,4,5\n1,2,3,4,5\n1,2,abc,4,5\n");
    try {
      load_recording(p, {0, Role::Development});
      FAIL("expected NonNumericCell");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonNumericCell);
      const std::string msg = e.what();
      CHECK(msg.find("row 3") != std::string::npos);
      CHECK(msg.find("Vibration_1") != std::string::npos);
    }
  }
  SUBCASE("locale comma is not a decimal point") {
    const auto p = scratch("comma.csv");
    write_text(p, "V_in;Measured_RPM;Vibration_1;Vibration_2;Vibration_3\n1,5;2;3;4;5\n");
    CHECK(code_of([&] { load_recording(p, {0, Role::Development}); }) == ErrorCode::MissingColumn);
  }
  SUBCASE("empty file and header-only file") {
    const auto p = scratch("empty.csv");
    write_text(p, "");
    CHECK(code_of([&] { load_recording(p, {0, Role::Development}); }) == ErrorCode::EmptyFile);
    write_text(p, "V_in,Measured_RPM,Vibration_1,Vibration_2,Vibration_3\n");
    CHECK(code_of([&] { load_recording(p, {0, Role::Development}); }) == ErrorCode::EmptyFile);
  }
  SUBCASE("ragged row") {
    const auto p = scratch("ragged.csv");
    write_text(p, "V_in,Measured_RPM,Vibration_1,Vibration_2,Vibration_3\n1,2,3,4\n");
    CHECK(code_of([&] { load_recording(p, {0, Role::Development}); }) == ErrorCode::RaggedRow);
  }
  SUBCASE("non-finite and negative rpm") {
    const auto p = scratch("nan.csv");
    write_text(p, "V_in,Measured_RPM,Vibration_1,Vibration_2,Vibration_3\n1,2,nan,4,5\n");
    CHECK(code_of([&] { load_recording(p, {0, Role::Development}); }) == ErrorCode::NonNumericCell);
    write_text(p, "V_in,Measured_RPM,Vibration_1,Vibration_2,Vibration_3\n1,-2,1,4,5\n");
    CHECK(code_of([&] { load_recording(p, {0, Role::Development}); }) == ErrorCode::BadParams);
  }
  SUBCASE("missing file") {
    CHECK(code_of([&] { load_recording(scratch("nope.csv"), {0, Role::Development}); }) == ErrorCode::Io);
  }
}

TEST_CASE("CSV round trip is bit-identical") {
  Engine eng(7);
  std::normal_distribution<double> nd(0.0, 1.0);
  Recording r = ramp(3000);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.vib1[i] = nd(eng) * 1e-3;
    r.vib2[i] = nd(eng) * 1e7;
    r.vib3[i] = std::nextafter(nd(eng), 1.0);
    r.measured_rpm[i] = 600.0 + std::abs(nd(eng)) * 1000.0 / 3.0;
    r.v_in[i] = 2.0 + 0.05 * static_cast<double>(i % 162);
  }
  const auto p = scratch("roundtrip.csv");
  write_recording(r, p);
  const auto back = load_recording(p, {1, Role::Development});
  CHECK(back.v_in == r.v_in);
  CHECK(back.measured_rpm == r.measured_rpm);
  CHECK(back.vib1 == r.vib1);
  CHECK(back.vib2 == r.vib2);
  CHECK(back.vib3 == r.vib3);
}

TEST_CASE("warm-up trimming") {
  CHECK(trim_warmup(ramp(54096)).size() == 4096);
  CHECK(code_of([] { trim_warmup(ramp(50000)); }) == ErrorCode::TooShort);
  const auto t = trim_warmup(ramp(50010));
  CHECK(t.vib1.front() == 50000.0);
  CHECK(t.v_in.size() == 10);
  // published row count of 0D
  CHECK(window_count(26421248 - kWarmupSamples) == 6438);
}

TEST_CASE("windowing") {
  CHECK(window(ramp(12288)).size() == 3);
  CHECK(window(ramp(4095)).empty());
  CHECK(window_count(4095) == 0);
  CHECK(window_count(10000, 4096, 1000) == 6);

  const auto raw = ramp(50000 + 3 * 4096 + 17);
  const auto ws = window(trim_warmup(raw));
  REQUIRE(ws.size() == 3);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    CHECK(ws[i].window_index == i);
    CHECK(ws[i].values.size() == kWindowSize);
    CHECK(ws[i].values.front() == static_cast<double>(50000 + i * 4096));
    CHECK(ws[i].values.back() == static_cast<double>(50000 + (i + 1) * 4096 - 1));
    CHECK(ws[i].mean_rpm == 1500.0);
  }

  Recording r = ramp(8192);
  r.unbalance_id = 3;
  for (std::size_t i = 0; i < 8192; ++i) r.measured_rpm[i] = i < 4096 ? 1000.0 : 2000.0;
  const auto two = window(r, Channel::Vib2);
  CHECK(two[0].mean_rpm == 1000.0);
  CHECK(two[1].mean_rpm == 2000.0);
  CHECK(two[1].values[0] == -4096.0);
  CHECK(two[0].label == 1);
  CHECK(two[0].unbalance_id == 3);

  const auto overlapped = window(ramp(8192), Channel::Vib1, 4096, 2048);
  CHECK(overlapped.size() == 3);
  CHECK(overlapped[1].values[0] == 2048.0);
  CHECK(code_of([] { window(ramp(10), Channel::Vib1, 0, 1); }) == ErrorCode::BadParams);
  CHECK(code_of([] { window(ramp(10), Channel::Vib1, 1, 0); }) == ErrorCode::BadParams);

  const auto all = window_all_channels(ramp(8192));
  REQUIRE(all.size() == 3);
  CHECK(all[2][1].values[2] == 0.5 * 4098.0);
}
