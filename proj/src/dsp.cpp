#include "pascpr/dsp.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <limits>
#include <numbers>

#include "pascpr/error.hpp"

namespace pascpr {

SampledWaveform edc(SampledWaveform waveform, double total_dispersion) {
  apply_dispersion(waveform, -total_dispersion);
  return waveform;
}

SampledWaveform dbp(SampledWaveform channel_waveform, const LinkConfig& link) {
  link.validate();
  const double amp = std::pow(10.0, -link.span.loss_db() / 20.0);
  for (int s = 0; s < link.n_spans; ++s) {
    for (auto& p : channel_waveform.pol)
      for (auto& v : p) v *= amp;
    channel_waveform = ssfm_span(std::move(channel_waveform), link.span, link.step, Direction::backward);
  }
  return channel_waveform;
}

void BpsConfig::validate() const {
  if (half_window < 1) throw Error(Errc::configuration, "bps half_window must be >= 1");
  if (n_test_angles < 2) throw Error(Errc::configuration, "bps n_test_angles must be >= 2");
  if (!(angle_range > 0)) throw Error(Errc::configuration, "bps angle_range must be positive");
}

std::vector<int> bps_select(std::span<const double> distances, std::size_t n_symbols, int n_angles, int half_window) {
  if (distances.size() != n_symbols * static_cast<std::size_t>(n_angles))
    throw Error(Errc::length_mismatch, "distance table does not match n_symbols x n_angles");
  std::vector<int> best(n_symbols, 0);
  std::vector<double> best_sum(n_symbols, std::numeric_limits<double>::infinity());
  std::vector<double> prefix(n_symbols + 1);
  const std::size_t w = static_cast<std::size_t>(half_window);
  for (int b = 0; b < n_angles; ++b) {
    const double* d = distances.data() + static_cast<std::size_t>(b) * n_symbols;
    prefix[0] = 0.0;
    for (std::size_t k = 0; k < n_symbols; ++k) prefix[k + 1] = prefix[k] + d[k];
    for (std::size_t k = 0; k < n_symbols; ++k) {
      const std::size_t lo = k > w ? k - w : 0;
      const std::size_t hi = std::min(n_symbols, k + w + 1);
      const double sum = prefix[hi] - prefix[lo];
      if (sum < best_sum[k]) {
        best_sum[k] = sum;
        best[k] = b;
      }
    }
  }
  return best;
}

double unwrap_quadrant(double raw, double previous) {
  constexpr double q = std::numbers::pi / 2.0;
  return raw + q * std::round((previous - raw) / q);
}

BpsResult bps(const DualPolSymbolFrame& frame, const QamConstellation& constellation, const BpsConfig& cfg) {
  cfg.validate();
  const std::size_t n = frame.size();
  if (n == 0) throw Error(Errc::domain, "bps on an empty frame");
  const int nb = cfg.n_test_angles;
  BpsResult out;
  out.frame = frame;
  std::vector<double> dist(n * static_cast<std::size_t>(nb));
  for (std::size_t p = 0; p < kPolarizations; ++p) {
    const auto& r = frame.pol[p];
    for (int b = 0; b < nb; ++b) {
      const cplx rot = std::polar(1.0, -cfg.test_angle(b));
      double* d = dist.data() + static_cast<std::size_t>(b) * n;
      for (std::size_t k = 0; k < n; ++k) {
        const cplx z = r[k] * rot;
        d[k] = std::norm(z - constellation.decide(z));
      }
    }
    const auto idx = bps_select(dist, n, nb, cfg.half_window);
    auto& track = out.track.phase[p];
    track.resize(n);
    double prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double raw = cfg.test_angle(idx[k]);
      prev = k == 0 ? raw : unwrap_quadrant(raw, prev);
      track[k] = prev;
      out.frame.pol[p][k] = r[k] * std::polar(1.0, -prev);
    }
  }
  return out;
}

std::array<double, kPolarizations> mean_phase(const DualPolSymbolFrame& rx, const DualPolSymbolFrame& tx) {
  if (rx.size() != tx.size()) throw Error(Errc::length_mismatch, "mpr frames differ in length");
  std::array<double, kPolarizations> phi{};
  for (std::size_t p = 0; p < kPolarizations; ++p) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < rx.size(); ++k) acc += rx.pol[p][k] * std::conj(tx.pol[p][k]);
    if (std::abs(acc) == 0.0) throw Error(Errc::degenerate, "zero cross-correlation, phase undefined");
    phi[p] = std::arg(acc);
  }
  return phi;
}

DualPolSymbolFrame mpr(const DualPolSymbolFrame& rx, const DualPolSymbolFrame& tx) {
  const auto phi = mean_phase(rx, tx);
  DualPolSymbolFrame out = rx;
  for (std::size_t p = 0; p < kPolarizations; ++p) {
    const cplx rot = std::polar(1.0, -phi[p]);
    for (auto& s : out.pol[p]) s *= rot;
  }
  return out;
}

PhaseTrack wiener_phase(std::size_t n, double linewidth_times_t, RngStream& rng) {
  if (!(linewidth_times_t >= 0)) throw Error(Errc::domain, "linewidth_times_t must be >= 0");
  const double sd = std::sqrt(2.0 * std::numbers::pi * linewidth_times_t);
  PhaseTrack t;
  t.phase[0].resize(n);
  double phi = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && sd > 0.0) phi += sd * rng.normal();
    t.phase[0][k] = phi;
  }
  t.phase[1] = t.phase[0];
  return t;
}

DualPolSymbolFrame apply_phase(const DualPolSymbolFrame& frame, const PhaseTrack& track) {
  if (track.size() != frame.size()) throw Error(Errc::length_mismatch, "phase track and frame differ in length");
  DualPolSymbolFrame out = frame;
  for (std::size_t p = 0; p < kPolarizations; ++p)
    for (std::size_t k = 0; k < frame.size(); ++k) out.pol[p][k] *= std::polar(1.0, track.phase[p][k]);
  return out;
}

void write_phase_track(const std::filesystem::path& path, const PhaseTrack& track) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::io, "cannot open " + path.string());
  os.precision(17);
  os << "symbol_index,phase_x,phase_y\n";
  for (std::size_t k = 0; k < track.size(); ++k) os << k << ',' << track.phase[0][k] << ',' << track.phase[1][k] << '\n';
  if (!os) throw Error(Errc::io, "write failed for " + path.string());
}

}  // namespace pascpr
