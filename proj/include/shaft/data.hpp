#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace shaft {

inline constexpr double kSampleRate = 4096.0;
inline constexpr std::size_t kWindowSize = 4096;
inline constexpr std::size_t kWarmupSamples = 50000;

enum class Role { Development, Evaluation };

enum class Channel { Vib1, Vib2, Vib3 };

std::string channel_column(Channel c);

/// Dataset identifier such as "0D" or "4E".
struct DatasetId {
  int strength = 0;  // 0 = no unbalance ... 4 = strongest
  Role role = Role::Development;

  [[nodiscard]] std::string str() const;
  [[nodiscard]] std::string filename() const { return str() + ".csv"; }
  friend bool operator==(const DatasetId&, const DatasetId&) = default;
  friend auto operator<=>(const DatasetId& a, const DatasetId& b) {
    if (auto c = a.strength <=> b.strength; c != 0) return c;
    return static_cast<int>(a.role) <=> static_cast<int>(b.role);
  }
};

DatasetId parse_dataset_id(std::string_view s);

struct RealFile {
  std::filesystem::path path;
};
struct Synthetic {
  std::uint64_t seed = 0;
};

/// One continuous five-channel measurement at 4096 Hz.
struct Recording {
  std::vector<double> v_in;
  std::vector<double> measured_rpm;
  std::vector<double> vib1;
  std::vector<double> vib2;
  std::vector<double> vib3;
  double sample_rate = kSampleRate;
  int unbalance_id = 0;
  Role role = Role::Development;
  std::variant<RealFile, Synthetic> source = Synthetic{};

  [[nodiscard]] std::size_t size() const noexcept { return vib1.size(); }
  [[nodiscard]] const std::vector<double>& channel(Channel c) const;

  /// Throws BadParams when an invariant (equal lengths, rate, finite RPM >= 0)
  /// does not hold.
  void validate() const;
};

struct WindowSample {
  std::vector<double> values;
  double mean_rpm = 0.0;
  int unbalance_id = 0;
  int label = 0;
  std::size_t window_index = 0;
};

Recording load_recording(const std::filesystem::path& path, DatasetId id);

/// Writes the five-column CSV. Values are printed in shortest round-trip form
/// so reloading yields bit-identical channels.
void write_recording(const Recording& r, const std::filesystem::path& path);

Recording trim_warmup(const Recording& r, std::size_t n = kWarmupSamples);

std::vector<WindowSample> window(const Recording& r, Channel channel = Channel::Vib1,
                                 std::size_t size = kWindowSize, std::size_t hop = kWindowSize);

/// Number of windows `window` yields for a recording of `length` samples.
constexpr std::size_t window_count(std::size_t length, std::size_t size = kWindowSize,
                                   std::size_t hop = kWindowSize) noexcept {
  return length < size ? 0 : (length - size) / hop + 1;
}

/// Aligned windows of all three vibration channels; used by the 7-feature
/// recipe. Element [c][i] is window i of channel c.
std::vector<std::vector<WindowSample>> window_all_channels(const Recording& r,
                                                           std::size_t size = kWindowSize,
                                                           std::size_t hop = kWindowSize);

}  // namespace shaft
