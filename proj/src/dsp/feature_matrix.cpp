#include <array>
#include <charconv>
#include <fstream>

#include "shaft/dsp.hpp"
#include "shaft/error.hpp"

namespace shaft::dsp {

void write_feature_csv(const FeatureMatrix& fm, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << "# recipe: " << fm.recipe << '\n';
  for (const auto& name : fm.names) out << name << ',';
  const bool frames = !fm.meta.empty() && fm.meta.front().frame_index >= 0;
  out << "dataset,unbalance_id,label,window_index" << (frames ? ",frame_index" : "") << '\n';

  std::array<char, 32> num{};
  std::string line;
  for (std::size_t i = 0; i < fm.values.rows; ++i) {
    line.clear();
    for (double v : fm.values.row(i)) {
      const auto res = std::to_chars(num.data(), num.data() + num.size(), v);
      line.append(num.data(), res.ptr);
      line += ',';
    }
    const auto& m = fm.meta[i];
    line += m.dataset + ',' + std::to_string(m.unbalance_id) + ',' + std::to_string(m.label) + ',' +
            std::to_string(m.window_index);
    if (frames) line += ',' + std::to_string(m.frame_index);
    line += '\n';
    out << line;
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path);
}

}  // namespace shaft::dsp
