#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "pascpr/constellation.hpp"
#include "pascpr/fiber.hpp"
#include "pascpr/rng.hpp"
#include "pascpr/types.hpp"

namespace pascpr {

/// Frequency-domain inverse of an accumulated dispersion beta2*L (s^2).
SampledWaveform edc(SampledWaveform waveform, double total_dispersion);

/// Per-span backward propagation of a channel-selected field through the
/// link, in reverse span order, with the link's step policy.
SampledWaveform dbp(SampledWaveform channel_waveform, const LinkConfig& link);

struct BpsConfig {
  int half_window = 24;
  int n_test_angles = 64;
  double angle_range = 1.5707963267948966;
  void validate() const;
  double test_angle(int b) const { return -0.5 * angle_range + b * angle_range / n_test_angles; }
};

struct PhaseTrack {
  std::array<std::vector<double>, kPolarizations> phase;
  std::size_t size() const { return phase[0].size(); }
};

struct BpsResult {
  DualPolSymbolFrame frame;
  PhaseTrack track;
};

/// Blind phase search per polarization, followed by quadrant unwrapping.
BpsResult bps(const DualPolSymbolFrame& frame, const QamConstellation& constellation, const BpsConfig& cfg);

/// Window stage of the phase search. `distances` holds n_angles rows of
/// n_symbols decision distances; returns per symbol the row minimizing the
/// (2*half_window+1)-symbol sum, truncated at the edges.
std::vector<int> bps_select(std::span<const double> distances, std::size_t n_symbols, int n_angles, int half_window);

/// Representative of `raw` modulo pi/2 closest to `previous`.
double unwrap_quadrant(double raw, double previous);

/// Data-aided mean phase per polarization.
std::array<double, kPolarizations> mean_phase(const DualPolSymbolFrame& rx, const DualPolSymbolFrame& tx);

/// Derotates each polarization by its mean phase against the transmitted frame.
DualPolSymbolFrame mpr(const DualPolSymbolFrame& rx, const DualPolSymbolFrame& tx);

/// Wiener phase walk with increment variance 2 pi * linewidth_times_t, same
/// track on both polarizations.
PhaseTrack wiener_phase(std::size_t n, double linewidth_times_t, RngStream& rng);

/// Rotates each symbol by exp(i phase).
DualPolSymbolFrame apply_phase(const DualPolSymbolFrame& frame, const PhaseTrack& track);

/// CSV with header symbol_index,phase_x,phase_y
void write_phase_track(const std::filesystem::path& path, const PhaseTrack& track);

}  // namespace pascpr
