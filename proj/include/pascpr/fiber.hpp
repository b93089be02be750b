#pragma once

#include <vector>

#include "pascpr/rng.hpp"
#include "pascpr/types.hpp"

namespace pascpr {

namespace constants {
inline constexpr double speed_of_light = 299792458.0;     // m/s
inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double reference_wavelength = 1550e-9;   // m
inline constexpr double reference_frequency = 193.41e12;  // Hz
inline constexpr double manakov_factor = 8.0 / 9.0;
}  // namespace constants

/// Single-mode fiber span in engineering units.
struct FiberSpanParams {
  double length_km = 80.0;
  double dispersion_ps_nm_km = 17.0;
  double gamma_per_w_km = 1.3;
  double alpha_db_km = 0.2;
  double wavelength_nm = 1550.0;

  double length() const { return length_km * 1e3; }  // m
  /// beta2 = -D lambda^2 / (2 pi c), s^2/m
  double beta2() const;
  double gamma() const { return gamma_per_w_km * 1e-3; }  // 1/(W m)
  /// Power attenuation coefficient, 1/m.
  double alpha() const;
  double loss_db() const { return alpha_db_km * length_km; }
  void validate() const;
};

/// Step size rule for the split-step integrator. Each enabled rule bounds the
/// step; the finer one wins. The nonlinear-phase rule uses the mean power.
struct StepPolicy {
  double fixed_step_km = 0.1;         // 0 disables
  double max_nonlinear_phase = 0.0;   // rad per step, 0 disables
  void validate() const;
};

struct LinkConfig {
  FiberSpanParams span;
  int n_spans = 15;
  double edfa_noise_figure_db = 5.0;
  StepPolicy step;
  double reference_frequency = constants::reference_frequency;
  bool noiseless = false;

  /// Total beta2 * L of the link, s^2.
  double accumulated_dispersion() const { return span.beta2() * span.length() * n_spans; }
  void validate() const;
};

enum class Direction { forward, backward };

/// Step lengths (m) covering one span from its input, for a field whose mean
/// power at the span input is `input_power` W.
std::vector<double> step_lengths(const StepPolicy& policy, const FiberSpanParams& span, double input_power);

/// Symmetric split-step integration of the Manakov equation over one span.
/// Backward direction negates dispersion, nonlinearity and loss and walks the
/// forward step grid in reverse; it is the exact inverse of the forward map.
SampledWaveform ssfm_span(SampledWaveform waveform, const FiberSpanParams& span, const StepPolicy& policy,
                          Direction direction);

/// Lumped amplifier: field scaled by sqrt(G), plus circular white ASE with
/// PSD (G-1) h nu n_sp per polarization over the full sample rate.
SampledWaveform edfa(SampledWaveform waveform, double gain_db, double noise_figure_db, double frequency, RngStream& rng);

/// ASE power spectral density per polarization, W/Hz.
double ase_psd(double gain_db, double noise_figure_db, double frequency);

/// n_spans x (forward span, EDFA compensating the span loss). Span s draws
/// noise from rng.split(s).
SampledWaveform propagate_link(SampledWaveform waveform, const LinkConfig& link, const RngStream& rng);

/// Applies exp(i phase(omega) ) with phase = beta2_l / 2 * omega^2, omega
/// including the waveform's carrier offset.
void apply_dispersion(SampledWaveform& waveform, double beta2_length);

}  // namespace pascpr
