#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pascpr/types.hpp"

namespace pascpr {

/// Positive odd amplitude levels of one real dimension, strictly increasing.
class AmplitudeAlphabet {
 public:
  explicit AmplitudeAlphabet(std::vector<int> levels);

  /// {1, 3, ..., 2m-1}
  static AmplitudeAlphabet odd(int m);

  std::span<const int> levels() const { return levels_; }
  int size() const { return static_cast<int>(levels_.size()); }
  int level(int index) const { return levels_[static_cast<std::size_t>(index)]; }
  /// Index of `amplitude`, or -1 when it is not a level.
  int index_of(int amplitude) const;
  double uniform_mean_energy() const;

  bool operator==(const AmplitudeAlphabet&) const = default;

 private:
  std::vector<int> levels_;
};

/// Square QAM built from an amplitude alphabet as sign x amplitude per
/// dimension. Each dimension is labelled with the sign bit as MSB followed by
/// the binary-reflected Gray code of the amplitude index; the in-phase label
/// occupies the high half of the symbol label. Points are indexed by label.
class QamConstellation {
 public:
  explicit QamConstellation(AmplitudeAlphabet alphabet);

  const AmplitudeAlphabet& alphabet() const { return alphabet_; }
  int bits_per_dimension() const { return bits_per_dim_; }
  int bits_per_symbol() const { return 2 * bits_per_dim_; }
  std::size_t size() const { return points_.size(); }
  std::span<const cplx> points() const { return points_; }
  cplx point(std::uint16_t label) const { return points_[label]; }

  std::uint16_t dimension_label(int amplitude_index, bool negative) const;
  std::uint16_t symbol_label(std::uint16_t in_phase, std::uint16_t quadrature) const {
    return static_cast<std::uint16_t>((in_phase << bits_per_dim_) | quadrature);
  }

  /// Nearest constellation point (minimum Euclidean distance).
  cplx decide(cplx z) const { return {decide_dimension(z.real()), decide_dimension(z.imag())}; }
  double decide_dimension(double v) const;

  /// Prior of each point (indexed by label) for a source with the given
  /// amplitude pmf and uniform signs.
  std::vector<double> prior(std::span<const double> amplitude_pmf) const;

 private:
  AmplitudeAlphabet alphabet_;
  int bits_per_dim_;
  std::vector<cplx> points_;
  std::vector<double> thresholds_;
};

inline unsigned gray_encode(unsigned i) { return i ^ (i >> 1); }
unsigned gray_decode(unsigned g);

}  // namespace pascpr
