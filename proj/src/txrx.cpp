#include "pascpr/txrx.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "pascpr/error.hpp"
#include "pascpr/fft.hpp"

namespace pascpr {
namespace {

constexpr double kPi = std::numbers::pi;

void normalize_energy(std::vector<double>& taps) {
  double e = 0.0;
  for (double t : taps) e += t * t;
  const double s = 1.0 / std::sqrt(e);
  for (double& t : taps) t *= s;
}

// Cyclic filtering of both polarizations by a spectrum.
void apply_spectrum(SampledWaveform& w, const std::vector<cplx>& h) {
  const Fft fft(w.size());
  for (auto& p : w.pol) {
    fft.forward(p);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] *= h[k];
    fft.inverse(p);
  }
}

long offset_bin(double offset, double df) { return std::lround(offset / df); }

}  // namespace

double rrc_value(double beta, double t) {
  if (std::abs(t) < 1e-12) return 1.0 - beta + 4.0 * beta / kPi;
  if (std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-9) {
    const double x = kPi / (4.0 * beta);
    return beta / std::sqrt(2.0) * ((1.0 + 2.0 / kPi) * std::sin(x) + (1.0 - 2.0 / kPi) * std::cos(x));
  }
  const double num = std::sin(kPi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(kPi * t * (1.0 + beta));
  const double den = kPi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
  return num / den;
}

std::vector<cplx> PulseShape::spectrum(std::size_t n) const {
  std::vector<cplx> h(n, 0.0);
  for (std::size_t i = 0; i < taps.size(); ++i)
    h[wrap_bin(static_cast<long>(i) - static_cast<long>(center), n)] += taps[i];
  Fft(n).forward(h);
  return h;
}

PulseShape rrc_taps(double rolloff, int samples_per_symbol, int span_symbols) {
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw Error(Errc::domain, "rolloff must be in (0, 1]");
  if (span_symbols <= 0 || span_symbols % 2) throw Error(Errc::domain, "span_symbols must be positive and even");
  if (samples_per_symbol < 1) throw Error(Errc::domain, "samples_per_symbol must be >= 1");
  PulseShape p;
  p.rolloff = rolloff;
  p.span_symbols = span_symbols;
  p.samples_per_symbol = samples_per_symbol;
  const int half = span_symbols * samples_per_symbol / 2;
  p.center = static_cast<std::size_t>(half);
  for (int m = -half; m <= half; ++m) p.taps.push_back(rrc_value(rolloff, static_cast<double>(m) / samples_per_symbol));
  normalize_energy(p.taps);
  return p;
}

PulseShape rrc_periodic(double rolloff, int samples_per_symbol, int n_symbols) {
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw Error(Errc::domain, "rolloff must be in (0, 1]");
  if (n_symbols < 1 || samples_per_symbol < 1) throw Error(Errc::domain, "record must be non-empty");
  const std::size_t n = static_cast<std::size_t>(n_symbols) * static_cast<std::size_t>(samples_per_symbol);
  std::vector<cplx> h(n);
  const double lo = 0.5 * (1.0 - rolloff), hi = 0.5 * (1.0 + rolloff);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = std::abs(static_cast<double>(signed_bin(k, n)) / n_symbols);  // in baud units
    double rc = 0.0;
    if (f <= lo) rc = 1.0;
    else if (f <= hi) rc = 0.5 * (1.0 + std::cos(kPi / rolloff * (f - lo)));
    h[k] = std::sqrt(rc);
  }
  Fft(n).inverse(h);
  PulseShape p;
  p.rolloff = rolloff;
  p.span_symbols = n_symbols;
  p.samples_per_symbol = samples_per_symbol;
  p.center = n / 2;
  p.taps.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.taps[i] = h[wrap_bin(static_cast<long>(i) - static_cast<long>(p.center), n)].real();
  normalize_energy(p.taps);
  return p;
}

GridPlan GridPlan::make(double baud_rate, double channel_spacing, int n_channels, double guard, int channel_sps) {
  GridPlan g;
  g.baud_rate = baud_rate;
  g.channel_spacing = channel_spacing;
  g.n_channels = n_channels;
  g.channel_sps = channel_sps;
  g.samples_per_symbol = static_cast<int>(std::ceil(n_channels * channel_spacing * guard / baud_rate - 1e-9));
  g.validate(guard);
  return g;
}

int GridPlan::slot_of(double offset) const {
  for (int i = 0; i < n_channels; ++i)
    if (std::abs(offset - slot_offset(i)) <= 1e-6 * channel_spacing) return i;
  return -1;
}

void GridPlan::validate(double guard) const {
  if (!(baud_rate > 0) || !(channel_spacing > 0)) throw Error(Errc::configuration, "grid rates must be positive");
  if (n_channels < 1) throw Error(Errc::configuration, "grid.n_channels must be >= 1");
  if (samples_per_symbol < 1 || channel_sps < 1) throw Error(Errc::configuration, "samples per symbol must be >= 1");
  if (sample_rate() < total_bandwidth() * guard * (1 - 1e-12))
    throw Error(Errc::configuration, "sample rate does not cover the channel grid");
  if (channel_spacing > channel_rate()) throw Error(Errc::configuration, "channel slot exceeds the per-channel sample rate");
}

SampledWaveform modulate(const DualPolSymbolFrame& frame, const PulseShape& pulse, double baud_rate) {
  if (frame.size() == 0) throw Error(Errc::length_mismatch, "cannot modulate an empty frame");
  const auto sps = static_cast<std::size_t>(pulse.samples_per_symbol);
  const std::size_t n = frame.size() * sps;
  SampledWaveform w;
  w.sample_rate = baud_rate * static_cast<double>(sps);
  for (std::size_t p = 0; p < kPolarizations; ++p) {
    if (frame.pol[p].size() != frame.size()) throw Error(Errc::length_mismatch, "polarizations differ in length");
    w.pol[p].assign(n, 0.0);
    for (std::size_t k = 0; k < frame.size(); ++k) w.pol[p][k * sps] = frame.pol[p][k];
  }
  apply_spectrum(w, pulse.spectrum(n));
  return w;
}

SampledWaveform wdm_mux(std::span<const SampledWaveform> channels, const GridPlan& plan) {
  if (channels.size() != static_cast<std::size_t>(plan.n_channels))
    throw Error(Errc::configuration, "channel count does not match the grid plan");
  for (int i = 0; i < plan.n_channels; ++i)
    if (std::abs(plan.slot_offset(i)) + 0.5 * plan.channel_spacing > 0.5 * plan.sample_rate() * (1 + 1e-12))
      throw Error(Errc::configuration, "channel slot exceeds the simulation band (aliasing)");
  const std::size_t n_ch = channels[0].size();
  const std::size_t n_sym = n_ch / static_cast<std::size_t>(plan.channel_sps);
  if (n_sym * static_cast<std::size_t>(plan.channel_sps) != n_ch)
    throw Error(Errc::length_mismatch, "channel length is not a whole number of symbols");
  const std::size_t n = n_sym * static_cast<std::size_t>(plan.samples_per_symbol);
  const double df = plan.sample_rate() / static_cast<double>(n);
  const double scale = static_cast<double>(n) / static_cast<double>(n_ch);

  SampledWaveform out;
  out.sample_rate = plan.sample_rate();
  for (auto& p : out.pol) p.assign(n, 0.0);
  const Fft fft_ch(n_ch);
  std::vector<cplx> buf;
  for (int i = 0; i < plan.n_channels; ++i) {
    const auto& ch = channels[static_cast<std::size_t>(i)];
    if (ch.size() != n_ch) throw Error(Errc::length_mismatch, "channels differ in length");
    if (std::abs(ch.sample_rate - plan.channel_rate()) > 1e-9 * plan.channel_rate())
      throw Error(Errc::configuration, "channel sample rate differs from the plan");
    const long shift = offset_bin(plan.slot_offset(i), df);
    for (std::size_t p = 0; p < kPolarizations; ++p) {
      buf = ch.pol[p];
      fft_ch.forward(buf);
      for (std::size_t k = 0; k < n_ch; ++k) {
        const long sb = signed_bin(k, n_ch);
        if (std::abs(static_cast<double>(sb) * df) > 0.5 * plan.channel_spacing) continue;
        out.pol[p][wrap_bin(sb + shift, n)] += buf[k] * scale;
      }
    }
  }
  const Fft fft(n);
  for (auto& p : out.pol) fft.inverse(p);
  return out;
}

SampledWaveform channel_select(const SampledWaveform& wdm, const GridPlan& plan, double offset) {
  if (plan.slot_of(offset) < 0) throw Error(Errc::configuration, "channel offset is not on the grid");
  const std::size_t n = wdm.size();
  const std::size_t n_sym = n / static_cast<std::size_t>(plan.samples_per_symbol);
  if (n == 0 || n_sym * static_cast<std::size_t>(plan.samples_per_symbol) != n)
    throw Error(Errc::length_mismatch, "waveform length is not a whole number of symbols");
  const std::size_t n_ch = n_sym * static_cast<std::size_t>(plan.channel_sps);
  const double df = wdm.sample_rate / static_cast<double>(n);
  const long shift = offset_bin(offset, df);
  const double scale = static_cast<double>(n_ch) / static_cast<double>(n);

  SampledWaveform out;
  out.sample_rate = plan.channel_rate();
  out.center_offset = static_cast<double>(shift) * df;
  out.time_origin = wdm.time_origin;
  const Fft fft(n), fft_ch(n_ch);
  std::vector<cplx> spec;
  for (std::size_t p = 0; p < kPolarizations; ++p) {
    spec = wdm.pol[p];
    fft.forward(spec);
    out.pol[p].assign(n_ch, 0.0);
    for (std::size_t k = 0; k < n_ch; ++k) {
      const long sb = signed_bin(k, n_ch);
      if (std::abs(static_cast<double>(sb) * df) > 0.5 * plan.channel_spacing) continue;
      out.pol[p][k] = spec[wrap_bin(sb + shift, n)] * scale;
    }
    fft_ch.inverse(out.pol[p]);
  }
  return out;
}

SampledWaveform matched_filter(const SampledWaveform& waveform, const PulseShape& pulse) {
  SampledWaveform out = waveform;
  if (out.size() == 0) return out;
  auto h = pulse.spectrum(out.size());
  for (auto& v : h) v = std::conj(v);
  apply_spectrum(out, h);
  return out;
}

SampledWaveform channel_demux(const SampledWaveform& wdm, const GridPlan& plan, double offset, const PulseShape& pulse) {
  return matched_filter(channel_select(wdm, plan, offset), pulse);
}

DualPolSymbolFrame sample_symbols(const SampledWaveform& waveform, int samples_per_symbol, int timing_offset,
                                  std::size_t n_symbols) {
  if (waveform.size() == 0 || n_symbols == 0) throw Error(Errc::length_mismatch, "nothing to sample");
  if (samples_per_symbol < 1 || timing_offset < 0) throw Error(Errc::domain, "invalid sampling parameters");
  const std::size_t last = static_cast<std::size_t>(timing_offset) + (n_symbols - 1) * static_cast<std::size_t>(samples_per_symbol);
  if (last >= waveform.size()) throw Error(Errc::length_mismatch, "waveform shorter than the requested frame");
  DualPolSymbolFrame f;
  for (std::size_t p = 0; p < kPolarizations; ++p) {
    f.pol[p].resize(n_symbols);
    for (std::size_t k = 0; k < n_symbols; ++k)
      f.pol[p][k] = waveform.pol[p][static_cast<std::size_t>(timing_offset) + k * static_cast<std::size_t>(samples_per_symbol)];
  }
  return f;
}

void write_waveform(const std::filesystem::path& path, const SampledWaveform& waveform) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::io, "cannot write " + path.string());
  const double rate = waveform.sample_rate;
  const std::uint64_t len = waveform.size();
  const std::uint32_t pols = kPolarizations;
  os.write(reinterpret_cast<const char*>(&rate), sizeof(rate));
  os.write(reinterpret_cast<const char*>(&len), sizeof(len));
  os.write(reinterpret_cast<const char*>(&pols), sizeof(pols));
  std::vector<float> row(2 * kPolarizations);
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t p = 0; p < kPolarizations; ++p) {
      row[2 * p] = static_cast<float>(waveform.pol[p][i].real());
      row[2 * p + 1] = static_cast<float>(waveform.pol[p][i].imag());
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!os) throw Error(Errc::io, "failed writing " + path.string());
}

SampledWaveform read_waveform(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io, "cannot read " + path.string());
  SampledWaveform w;
  std::uint64_t len = 0;
  std::uint32_t pols = 0;
  is.read(reinterpret_cast<char*>(&w.sample_rate), sizeof(w.sample_rate));
  is.read(reinterpret_cast<char*>(&len), sizeof(len));
  is.read(reinterpret_cast<char*>(&pols), sizeof(pols));
  if (!is || pols != kPolarizations) throw Error(Errc::io, "bad waveform header");
  std::vector<float> row(2 * pols);
  for (auto& p : w.pol) p.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!is) throw Error(Errc::io, "truncated waveform file");
    for (std::size_t p = 0; p < pols; ++p) w.pol[p][i] = {row[2 * p], row[2 * p + 1]};
  }
  return w;
}

}  // namespace pascpr
