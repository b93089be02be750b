#include "pascpr/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pascpr/error.hpp"

namespace pascpr {

double entropy_bits(std::span<const double> pmf) {
  double h = 0.0;
  for (double p : pmf)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

double mean_energy(const AmplitudeAlphabet& alphabet, std::span<const double> pmf) {
  double e = 0.0;
  for (int i = 0; i < alphabet.size(); ++i) e += pmf[static_cast<std::size_t>(i)] * alphabet.level(i) * alphabet.level(i);
  return e;
}

MbPrior mb_prior(const AmplitudeAlphabet& alphabet, double lambda) {
  if (!(lambda >= 0.0)) throw Error(Errc::domain, "MB lambda must be non-negative");
  MbPrior p{lambda, std::vector<double>(static_cast<std::size_t>(alphabet.size()))};
  // shift by the smallest energy to keep exp() in range
  const double e0 = static_cast<double>(alphabet.level(0)) * alphabet.level(0);
  double sum = 0.0;
  for (int i = 0; i < alphabet.size(); ++i) {
    const double e = static_cast<double>(alphabet.level(i)) * alphabet.level(i);
    p.pmf[static_cast<std::size_t>(i)] = std::exp(-lambda * (e - e0));
    sum += p.pmf[static_cast<std::size_t>(i)];
  }
  for (auto& v : p.pmf) v /= sum;
  return p;
}

namespace {

// Bisection for a quantity strictly decreasing in lambda.
template <typename F>
double solve_decreasing(F f, double target) {
  double lo = 0.0, hi = 1e-3;
  while (f(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) break;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

MbPrior mb_fit(const AmplitudeAlphabet& alphabet, double target_entropy) {
  const double h_max = std::log2(static_cast<double>(alphabet.size()));
  if (!(target_entropy > 0.0) || target_entropy > h_max)
    throw Error(Errc::domain, "target entropy must lie in (0, log2 M]");
  if (target_entropy == h_max) return mb_prior(alphabet, 0.0);
  const double lambda = solve_decreasing([&](double l) { return entropy_bits(mb_prior(alphabet, l).pmf); }, target_entropy);
  return mb_prior(alphabet, lambda);
}

MbPrior mb_fit_energy(const AmplitudeAlphabet& alphabet, double target_energy) {
  const double e_max = alphabet.uniform_mean_energy();
  const double e_min = static_cast<double>(alphabet.level(0)) * alphabet.level(0);
  if (!(target_energy > e_min) || target_energy > e_max)
    throw Error(Errc::domain, "target energy outside (min level^2, uniform mean]");
  if (target_energy == e_max) return mb_prior(alphabet, 0.0);
  const double lambda =
      solve_decreasing([&](double l) { return mean_energy(alphabet, mb_prior(alphabet, l).pmf); }, target_energy);
  return mb_prior(alphabet, lambda);
}

AmplitudeSequence mb_sample(const AmplitudeAlphabet& alphabet, const MbPrior& prior, std::size_t n, RngStream& rng) {
  if (prior.pmf.size() != static_cast<std::size_t>(alphabet.size()))
    throw Error(Errc::length_mismatch, "prior size does not match the alphabet");
  std::discrete_distribution<int> dist(prior.pmf.begin(), prior.pmf.end());
  AmplitudeSequence out(n);
  for (auto& a : out) a = alphabet.level(dist(rng.engine()));
  return out;
}

DualPolSymbolFrame pas_map(std::span<const int> amplitudes, std::span<const std::uint8_t> sign_bits,
                           const QamConstellation& constellation, std::span<const double> amplitude_pmf) {
  if (amplitudes.size() % 4 != 0) throw Error(Errc::length_mismatch, "amplitude count must be a multiple of 4");
  if (sign_bits.size() != amplitudes.size()) throw Error(Errc::length_mismatch, "one sign bit per amplitude required");
  const auto& alphabet = constellation.alphabet();
  const std::size_t n_sym = amplitudes.size() / 4;
  DualPolSymbolFrame f;
  f.amplitude_pmf.assign(amplitude_pmf.begin(), amplitude_pmf.end());
  for (int p = 0; p < kPolarizations; ++p) {
    f.pol[static_cast<std::size_t>(p)].resize(n_sym);
    f.labels[static_cast<std::size_t>(p)].resize(n_sym);
  }
  for (std::size_t s = 0; s < n_sym; ++s) {
    for (std::size_t p = 0; p < kPolarizations; ++p) {
      double comp[2];
      std::uint16_t lab[2];
      for (std::size_t d = 0; d < 2; ++d) {
        const std::size_t i = 4 * s + 2 * p + d;
        const int idx = alphabet.index_of(amplitudes[i]);
        if (idx < 0) throw Error(Errc::invalid_sequence, "amplitude not in the alphabet");
        const bool neg = sign_bits[i] != 0;
        comp[d] = neg ? -amplitudes[i] : amplitudes[i];
        lab[d] = constellation.dimension_label(idx, neg);
      }
      f.pol[p][s] = {comp[0], comp[1]};
      f.labels[p][s] = constellation.symbol_label(lab[0], lab[1]);
    }
  }
  return f;
}

AmplitudeSequence interleave(std::span<const AmplitudeSequence> blocks, std::size_t span, RngStream& rng) {
  AmplitudeSequence out;
  out.reserve(span);
  for (const auto& b : blocks) out.insert(out.end(), b.begin(), b.end());
  if (out.size() != span) throw Error(Errc::length_mismatch, "interleaver span does not match the block total");
  std::shuffle(out.begin(), out.end(), rng.engine());
  return out;
}

void ShapingConfig::validate() const {
  if (block_length < 1) throw Error(Errc::configuration, "shaping.block_length must be >= 1");
  if (bits_per_block < 1) throw Error(Errc::configuration, "shaping.bits_per_block must be >= 1");
  if (interleaver_span % static_cast<std::size_t>(block_length) != 0)
    throw Error(Errc::configuration, "shaping.interleaver_span must be a multiple of the block length");
}

AmplitudeSource::AmplitudeSource(const ShapingConfig& config, const std::filesystem::path& trellis_cache)
    : config_(config), alphabet_(config.alphabet()) {
  config_.validate();
  if (config_.mode == ShapingMode::ess) {
    if (trellis_cache.empty())
      trellis_ = build_trellis_for_rate(alphabet_, config_.block_length, config_.bits_per_block);
    else
      trellis_ = cached_trellis(trellis_cache, alphabet_, config_.block_length,
                                min_emax(alphabet_, config_.block_length, config_.bits_per_block));
    auto stats = ess_output_statistics(trellis_, config_.bits_per_block);
    pmf_ = std::move(stats.pmf);
    mean_energy_ = stats.mean_energy;
  } else {
    mb_ = mb_fit(alphabet_, config_.rate());
    pmf_ = mb_.pmf;
    mean_energy_ = pascpr::mean_energy(alphabet_, pmf_);
  }
}

double AmplitudeSource::rate() const {
  return config_.mode == ShapingMode::ess ? config_.rate() : entropy_bits(pmf_);
}

AmplitudeSequence AmplitudeSource::generate(std::size_t count, RngStream& rng) const {
  if (config_.mode == ShapingMode::mb_iid) return mb_sample(alphabet_, mb_, count, rng);
  const auto n = static_cast<std::size_t>(config_.block_length);
  const std::size_t group = config_.interleaver_span ? config_.interleaver_span : n;
  if (count % group != 0) throw Error(Errc::length_mismatch, "amplitude count must be a multiple of the block length");
  AmplitudeSequence out;
  out.reserve(count);
  BitVector bits(static_cast<std::size_t>(config_.bits_per_block));
  std::vector<AmplitudeSequence> blocks(group / n);
  // one permutation per run, reused for every interleaver superblock
  const RngStream permutation = rng.split(0x5eed1e);
  for (std::size_t g = 0; g < count / group; ++g) {
    for (auto& b : blocks) {
      for (auto& bit : bits) bit = rng.bit();
      b = ess_encode(bits, trellis_);
    }
    if (config_.interleaver_span) {
      RngStream perm = permutation;
      auto mixed = interleave(blocks, group, perm);
      out.insert(out.end(), mixed.begin(), mixed.end());
    } else {
      for (const auto& b : blocks) out.insert(out.end(), b.begin(), b.end());
    }
  }
  return out;
}

}  // namespace pascpr
