#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

namespace pascpr {

using cplx = std::complex<double>;
using BitVector = std::vector<std::uint8_t>;

inline constexpr int kPolarizations = 2;

/// Dual-polarization symbols in constellation units. `labels` holds one
/// bit label per symbol (empty for received frames); `amplitude_pmf` is the
/// per-dimension amplitude prior of the source that produced the frame.
struct DualPolSymbolFrame {
  std::array<std::vector<cplx>, kPolarizations> pol;
  std::array<std::vector<std::uint16_t>, kPolarizations> labels;
  std::vector<double> amplitude_pmf;

  std::size_t size() const { return pol[0].size(); }
  bool has_labels() const { return labels[0].size() == pol[0].size() && !pol[0].empty(); }
};

/// Complex baseband samples per polarization. `center_offset` is the carrier
/// frequency relative to the simulation band center.
struct SampledWaveform {
  std::array<std::vector<cplx>, kPolarizations> pol;
  double sample_rate = 0.0;
  double center_offset = 0.0;
  double time_origin = 0.0;

  std::size_t size() const { return pol[0].size(); }
  double mean_power() const;
};

inline double SampledWaveform::mean_power() const {
  double acc = 0.0;
  for (const auto& p : pol)
    for (const auto& s : p) acc += std::norm(s);
  return size() ? acc / static_cast<double>(size()) : 0.0;
}

}  // namespace pascpr
