#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "pascpr/constellation.hpp"
#include "pascpr/ess.hpp"
#include "pascpr/rng.hpp"
#include "pascpr/types.hpp"

namespace pascpr {

/// Maxwell-Boltzmann amplitude law, pmf proportional to exp(-lambda a^2).
struct MbPrior {
  double lambda = 0.0;
  std::vector<double> pmf;
};

double entropy_bits(std::span<const double> pmf);
double mean_energy(const AmplitudeAlphabet& alphabet, std::span<const double> pmf);

MbPrior mb_prior(const AmplitudeAlphabet& alphabet, double lambda);

/// MB prior whose entropy equals `target_entropy` bits (bisection on lambda).
MbPrior mb_fit(const AmplitudeAlphabet& alphabet, double target_entropy);

/// MB prior with the given mean energy per amplitude.
MbPrior mb_fit_energy(const AmplitudeAlphabet& alphabet, double target_energy);

AmplitudeSequence mb_sample(const AmplitudeAlphabet& alphabet, const MbPrior& prior, std::size_t n, RngStream& rng);

/// Builds N/4 dual-polarization symbols from N amplitudes and N sign bits,
/// consumed in X-I, X-Q, Y-I, Y-Q order (sign bit 1 means negative).
DualPolSymbolFrame pas_map(std::span<const int> amplitudes, std::span<const std::uint8_t> sign_bits,
                           const QamConstellation& constellation, std::span<const double> amplitude_pmf);

/// Random permutation of the concatenated blocks, drawn from `rng`.
AmplitudeSequence interleave(std::span<const AmplitudeSequence> blocks, std::size_t span, RngStream& rng);

enum class ShapingMode { ess, mb_iid };

struct ShapingConfig {
  int block_length = 512;            // N
  int bits_per_block = 1024;         // k
  int alphabet_size = 8;             // M
  ShapingMode mode = ShapingMode::ess;
  std::size_t interleaver_span = 0;  // 0 disables interleaving

  AmplitudeAlphabet alphabet() const { return AmplitudeAlphabet::odd(alphabet_size); }
  double rate() const { return static_cast<double>(bits_per_block) / block_length; }
  void validate() const;
};

/// Amplitude source for one shaping configuration: an ESS matcher fed with
/// uniform bits, or an i.i.d. MB source at the same entropy. Immutable once
/// built, so one instance can feed several workers.
class AmplitudeSource {
 public:
  /// With a non-empty `trellis_cache`, ESS trellises are loaded from / stored in that directory.
  explicit AmplitudeSource(const ShapingConfig& config, const std::filesystem::path& trellis_cache = {});

  const ShapingConfig& config() const { return config_; }
  const AmplitudeAlphabet& alphabet() const { return alphabet_; }
  /// Marginal amplitude pmf of the emitted stream.
  const std::vector<double>& pmf() const { return pmf_; }
  double mean_energy() const { return mean_energy_; }
  /// Information carried per amplitude: k/N for ESS, H(A) for MB.
  double rate() const;
  const EssTrellis* trellis() const { return config_.mode == ShapingMode::ess ? &trellis_ : nullptr; }

  /// `count` amplitudes; must be a multiple of the block (or interleaver) length in ESS mode.
  AmplitudeSequence generate(std::size_t count, RngStream& rng) const;

 private:
  ShapingConfig config_;
  AmplitudeAlphabet alphabet_;
  EssTrellis trellis_;
  MbPrior mb_;
  std::vector<double> pmf_;
  double mean_energy_ = 0.0;
};

}  // namespace pascpr
