#pragma once

#include <gmpxx.h>

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "pascpr/constellation.hpp"
#include "pascpr/types.hpp"

namespace pascpr {

using AmplitudeSequence = std::vector<int>;

/// Enumerative sphere shaping trellis: exact counts T[n][e] of length-n
/// amplitude sequences with energy at most e. Every squared odd amplitude is
/// 1 mod 8, so a length-n sequence has energy n + 8j for integer j and the
/// counts only change on that grid. Storage is indexed by (j, n).
class EssTrellis {
 public:
  EssTrellis() = default;

  const AmplitudeAlphabet& alphabet() const { return *alphabet_; }
  int block_length() const { return block_length_; }
  /// Sphere bound, snapped down to the reachable energy grid.
  long max_energy() const { return block_length_ + 8 * grid_max(); }
  long grid_max() const { return static_cast<long>(columns_.size()) - 1; }
  const mpz_class& total() const { return at(block_length_, grid_max()); }

  const mpz_class& at(int n, long j) const { return columns_[static_cast<std::size_t>(j)][static_cast<std::size_t>(n)]; }
  /// T[n][energy]; energy may be any value whose grid index is stored.
  mpz_class count(int n, long energy) const;

  /// Grid steps (a^2 - 1) / 8 of each amplitude level.
  std::span<const long> level_steps() const { return steps_; }

  /// Bits that a block can carry: floor(log2 T[N][E_max]).
  int capacity_bits() const;

  void save(const std::filesystem::path& path) const;
  static EssTrellis load(const std::filesystem::path& path);

 private:
  friend EssTrellis build_trellis(const AmplitudeAlphabet&, int, long);
  friend EssTrellis build_trellis_for_rate(const AmplitudeAlphabet&, int, int);

  EssTrellis(const AmplitudeAlphabet& alphabet, int block_length);
  void push_column();

  std::shared_ptr<const AmplitudeAlphabet> alphabet_;
  int block_length_ = 0;
  std::vector<long> steps_;
  std::vector<std::vector<mpz_class>> columns_;
};

EssTrellis build_trellis(const AmplitudeAlphabet& alphabet, int block_length, long max_energy);

/// Builds the trellis with the smallest grid bound whose count reaches 2^k.
EssTrellis build_trellis_for_rate(const AmplitudeAlphabet& alphabet, int block_length, int k);

/// Smallest reachable E_max with T[N][E_max] >= 2^k.
long min_emax(const AmplitudeAlphabet& alphabet, int block_length, int k);

/// Maps k bits (big-endian index) to the sequence with that lexicographic
/// rank inside the sphere, amplitudes ordered ascending.
AmplitudeSequence ess_encode(std::span<const std::uint8_t> bits, const EssTrellis& trellis);

/// Inverse of ess_encode for a k-bit index.
BitVector ess_decode(std::span<const int> sequence, const EssTrellis& trellis, int k);

/// Exact statistics of the encoder output when the k-bit input is uniform,
/// i.e. over the first 2^k sequences of the sphere.
struct EssOutputStatistics {
  double mean_energy = 0.0;  // per amplitude
  std::vector<double> pmf;   // per alphabet level, averaged over positions
};
EssOutputStatistics ess_output_statistics(const EssTrellis& trellis, int k);

/// Loads the trellis for (alphabet, N, E_max) from `cache_dir`, building and
/// storing it when absent or stale.
EssTrellis cached_trellis(const std::filesystem::path& cache_dir, const AmplitudeAlphabet& alphabet,
                          int block_length, long max_energy);

}  // namespace pascpr
