#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "pascpr/types.hpp"

namespace pascpr {

/// Real, symmetric pulse with unit energy. `center` is the index of t = 0.
struct PulseShape {
  double rolloff = 0.1;
  int span_symbols = 64;
  int samples_per_symbol = 4;
  std::size_t center = 0;
  std::vector<double> taps;

  /// DFT of the taps wrapped cyclically onto `n` samples with t = 0 at index 0.
  std::vector<cplx> spectrum(std::size_t n) const;
};

/// Root-raised-cosine pulse truncated to `span_symbols` (even), unit energy.
PulseShape rrc_taps(double rolloff, int samples_per_symbol, int span_symbols);

/// Root-raised-cosine pulse made periodic over `n_symbols`: its DFT on that
/// record is the exact RRC spectrum, so matched filtering is ISI-free on
/// cyclic blocks.
PulseShape rrc_periodic(double rolloff, int samples_per_symbol, int n_symbols);

/// Raw RRC impulse response at t (in symbol periods), not normalized.
double rrc_value(double rolloff, double t);

/// WDM channel grid. Channels sit in slots symmetric around the band center.
struct GridPlan {
  double baud_rate = 41.67e9;
  double channel_spacing = 75e9;
  int n_channels = 12;
  int samples_per_symbol = 25;  // full-band simulation
  int channel_sps = 4;          // per-channel processing

  /// Smallest full-band rate that is a baud-rate multiple and covers the
  /// grid with the given guard factor.
  static GridPlan make(double baud_rate, double channel_spacing, int n_channels, double guard = 1.125,
                       int channel_sps = 4);

  double total_bandwidth() const { return n_channels * channel_spacing; }
  double sample_rate() const { return samples_per_symbol * baud_rate; }
  double channel_rate() const { return channel_sps * baud_rate; }
  double slot_offset(int channel) const { return (channel - 0.5 * (n_channels - 1)) * channel_spacing; }
  /// Slot index of `offset`, or -1 when it is off the grid.
  int slot_of(double offset) const;
  void validate(double guard = 1.0) const;
};

/// Linear pulse-amplitude modulation of each polarization, cyclic over the frame.
SampledWaveform modulate(const DualPolSymbolFrame& frame, const PulseShape& pulse, double baud_rate);

/// Shifts channel i to slot i and sums. Each channel keeps only its own
/// slot (|f| <= spacing/2) of spectrum.
SampledWaveform wdm_mux(std::span<const SampledWaveform> channels, const GridPlan& plan);

/// Brings the channel at `offset` to baseband, keeps its slot and resamples
/// to the per-channel rate. `center_offset` of the result records the carrier.
SampledWaveform channel_select(const SampledWaveform& wdm, const GridPlan& plan, double offset);

/// Cyclic filtering with the pulse (which is real and symmetric, hence its
/// own matched filter).
SampledWaveform matched_filter(const SampledWaveform& waveform, const PulseShape& pulse);

/// channel_select followed by matched filtering.
SampledWaveform channel_demux(const SampledWaveform& wdm, const GridPlan& plan, double offset, const PulseShape& pulse);

/// One sample per symbol starting at `timing_offset` samples.
DualPolSymbolFrame sample_symbols(const SampledWaveform& waveform, int samples_per_symbol, int timing_offset,
                                  std::size_t n_symbols);

/// Debug dump: f64 sample_rate, u64 length, u32 pol count, then for every
/// sample the (re, im) float32 pair of each polarization. Little-endian.
void write_waveform(const std::filesystem::path& path, const SampledWaveform& waveform);
SampledWaveform read_waveform(const std::filesystem::path& path);

}  // namespace pascpr
