#include "pascpr/fiber.hpp"

#include <cmath>
#include <algorithm>
#include <array>
#include <limits>
#include <numbers>

#include "pascpr/error.hpp"
#include "pascpr/fft.hpp"

namespace pascpr {

double FiberSpanParams::beta2() const {
  const double d = dispersion_ps_nm_km * 1e-6;  // s/m^2
  const double lambda = wavelength_nm * 1e-9;
  return -d * lambda * lambda / (2.0 * std::numbers::pi * constants::speed_of_light);
}

double FiberSpanParams::alpha() const { return alpha_db_km * 1e-3 * std::log(10.0) / 10.0; }

void FiberSpanParams::validate() const {
  if (!(length_km > 0) || !(dispersion_ps_nm_km >= 0) || !(gamma_per_w_km >= 0) || !(alpha_db_km >= 0) ||
      !(wavelength_nm > 0))
    throw Error(Errc::configuration, "fiber span parameters must be positive");
}

void StepPolicy::validate() const {
  if (fixed_step_km < 0 || max_nonlinear_phase < 0) throw Error(Errc::configuration, "step policy values must be >= 0");
  if (fixed_step_km == 0 && max_nonlinear_phase == 0)
    throw Error(Errc::configuration, "step policy needs a fixed step or a nonlinear phase bound");
}

void LinkConfig::validate() const {
  span.validate();
  step.validate();
  if (n_spans < 0) throw Error(Errc::configuration, "link.n_spans must be >= 0");
}

std::vector<double> step_lengths(const StepPolicy& policy, const FiberSpanParams& span, double input_power) {
  policy.validate();
  const double length = span.length();
  const double alpha = span.alpha();
  const double nl = constants::manakov_factor * span.gamma() * input_power;
  std::vector<double> steps;
  double z = 0.0;
  while (length - z > 1e-9 * length) {
    double h = length - z;
    if (policy.fixed_step_km > 0) h = std::min(h, policy.fixed_step_km * 1e3);
    if (policy.max_nonlinear_phase > 0 && nl > 0)
      h = std::min(h, policy.max_nonlinear_phase / (nl * std::exp(-alpha * z)));
    steps.push_back(h);
    z += h;
  }
  return steps;
}

void apply_dispersion(SampledWaveform& waveform, double beta2_length) {
  const std::size_t n = waveform.size();
  if (n == 0) return;
  const auto w = angular_frequencies(n, waveform.sample_rate, waveform.center_offset);
  const Fft fft(n);
  for (auto& p : waveform.pol) {
    fft.forward(p);
    for (std::size_t k = 0; k < n; ++k) p[k] *= std::polar(1.0, 0.5 * beta2_length * w[k] * w[k]);
    fft.inverse(p);
  }
}

namespace {

class LinearStep {
 public:
  LinearStep(std::vector<double> half_beta2_w2, double alpha) : phase_(std::move(half_beta2_w2)), alpha_(alpha) {}

  const std::vector<cplx>& factor(double len) {
    for (auto& c : cache_)
      if (c.len == len) return c.values;
    auto& slot = cache_[next_];
    next_ = (next_ + 1) % cache_.size();
    slot.len = len;
    slot.values.resize(phase_.size());
    const double amp = std::exp(-0.5 * alpha_ * len);
    for (std::size_t k = 0; k < phase_.size(); ++k) slot.values[k] = std::polar(amp, phase_[k] * len);
    return slot.values;
  }

 private:
  struct Entry {
    double len = std::nan("");
    std::vector<cplx> values;
  };
  std::vector<double> phase_;
  double alpha_;
  std::array<Entry, 3> cache_;
  std::size_t next_ = 0;
};

}  // namespace

SampledWaveform ssfm_span(SampledWaveform waveform, const FiberSpanParams& span, const StepPolicy& policy,
                          Direction direction) {
  const std::size_t n = waveform.size();
  if (n == 0) return waveform;
  if (!(waveform.sample_rate > 0)) throw Error(Errc::domain, "waveform sample rate must be positive");
  const bool back = direction == Direction::backward;
  const double sign = back ? -1.0 : 1.0;
  const double alpha = sign * span.alpha();
  const double beta2 = sign * span.beta2();
  const double gamma = sign * span.gamma() * constants::manakov_factor;

  // the step grid is always the forward one, built from the power at the span input
  double input_power = waveform.mean_power();
  if (back) input_power *= std::exp(span.alpha() * span.length());
  auto steps = step_lengths(policy, span, input_power);
  if (back) std::reverse(steps.begin(), steps.end());

  auto w = angular_frequencies(n, waveform.sample_rate, waveform.center_offset);
  for (auto& v : w) v = 0.5 * beta2 * v * v;
  LinearStep linear(std::move(w), alpha);
  const Fft fft(n);
  auto& x = waveform.pol[0];
  auto& y = waveform.pol[1];

  const auto apply_linear = [&](double len) {
    const auto& f = linear.factor(len);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] *= f[k];
      y[k] *= f[k];
    }
  };

  fft.forward(x);
  fft.forward(y);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double h = steps[i];
    apply_linear(i == 0 ? 0.5 * h : 0.5 * (steps[i - 1] + h));
    fft.inverse(x);
    fft.inverse(y);
    // effective length relative to the power at the step midpoint
    const double h_eff = alpha == 0.0 ? h : 2.0 * std::sinh(0.5 * alpha * h) / alpha;
    const double g = gamma * h_eff;
    for (std::size_t k = 0; k < n; ++k) {
      const cplx rot = std::polar(1.0, g * (std::norm(x[k]) + std::norm(y[k])));
      x[k] *= rot;
      y[k] *= rot;
    }
    fft.forward(x);
    fft.forward(y);
  }
  apply_linear(0.5 * steps.back());
  fft.inverse(x);
  fft.inverse(y);

  for (const auto& p : waveform.pol)
    for (const auto& s : p)
      if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
        throw Error(Errc::propagation, "non-finite samples after split-step integration");
  return waveform;
}

double ase_psd(double gain_db, double noise_figure_db, double frequency) {
  const double g = std::pow(10.0, gain_db / 10.0);
  const double n_sp = std::pow(10.0, noise_figure_db / 10.0) / 2.0;
  return (g - 1.0) * constants::planck * frequency * n_sp;
}

SampledWaveform edfa(SampledWaveform waveform, double gain_db, double noise_figure_db, double frequency, RngStream& rng) {
  const double amp = std::pow(10.0, gain_db / 20.0);
  const double var = ase_psd(gain_db, noise_figure_db, frequency) * waveform.sample_rate;
  const double sd = std::sqrt(var / 2.0);
  for (auto& p : waveform.pol)
    for (auto& s : p) {
      s *= amp;
      if (sd > 0.0) {
        const double re = rng.normal();
        const double im = rng.normal();
        s += cplx(sd * re, sd * im);
      }
    }
  return waveform;
}

SampledWaveform propagate_link(SampledWaveform waveform, const LinkConfig& link, const RngStream& rng) {
  link.validate();
  const double nf = link.noiseless ? -std::numeric_limits<double>::infinity() : link.edfa_noise_figure_db;
  for (int s = 0; s < link.n_spans; ++s) {
    waveform = ssfm_span(std::move(waveform), link.span, link.step, Direction::forward);
    RngStream span_rng = rng.split(static_cast<std::uint64_t>(s));
    waveform = edfa(std::move(waveform), link.span.loss_db(), nf, link.reference_frequency, span_rng);
  }
  return waveform;
}

}  // namespace pascpr
