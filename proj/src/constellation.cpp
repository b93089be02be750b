#include "pascpr/constellation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "pascpr/error.hpp"

namespace pascpr {

AmplitudeAlphabet::AmplitudeAlphabet(std::vector<int> levels) : levels_(std::move(levels)) {
  if (levels_.size() < 2) throw Error(Errc::domain, "amplitude alphabet needs at least two levels");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i] <= 0 || levels_[i] % 2 == 0)
      throw Error(Errc::domain, "amplitude level " + std::to_string(levels_[i]) + " is not a positive odd integer");
    if (i > 0 && levels_[i] <= levels_[i - 1])
      throw Error(Errc::domain, "amplitude levels must be strictly increasing");
  }
}

AmplitudeAlphabet AmplitudeAlphabet::odd(int m) {
  std::vector<int> v;
  for (int i = 0; i < m; ++i) v.push_back(2 * i + 1);
  return AmplitudeAlphabet(std::move(v));
}

int AmplitudeAlphabet::index_of(int amplitude) const {
  auto it = std::lower_bound(levels_.begin(), levels_.end(), amplitude);
  if (it == levels_.end() || *it != amplitude) return -1;
  return static_cast<int>(it - levels_.begin());
}

double AmplitudeAlphabet::uniform_mean_energy() const {
  double acc = 0.0;
  for (int a : levels_) acc += static_cast<double>(a) * a;
  return acc / static_cast<double>(levels_.size());
}

unsigned gray_decode(unsigned g) {
  unsigned i = g;
  for (unsigned s = g >> 1; s; s >>= 1) i ^= s;
  return i;
}

QamConstellation::QamConstellation(AmplitudeAlphabet alphabet) : alphabet_(std::move(alphabet)) {
  const auto m = static_cast<unsigned>(alphabet_.size());
  if (!std::has_single_bit(m))
    throw Error(Errc::domain, "labelled QAM needs a power-of-two amplitude count");
  bits_per_dim_ = 1 + std::countr_zero(m);
  const std::size_t per_dim = std::size_t{1} << bits_per_dim_;
  std::vector<double> dim_value(per_dim);
  for (std::size_t lab = 0; lab < per_dim; ++lab) {
    const bool negative = (lab >> (bits_per_dim_ - 1)) & 1u;
    const unsigned idx = gray_decode(static_cast<unsigned>(lab) & (m - 1));
    dim_value[lab] = (negative ? -1.0 : 1.0) * alphabet_.level(static_cast<int>(idx));
  }
  points_.resize(per_dim * per_dim);
  for (std::size_t i = 0; i < per_dim; ++i)
    for (std::size_t q = 0; q < per_dim; ++q) points_[(i << bits_per_dim_) | q] = {dim_value[i], dim_value[q]};
  for (int i = 0; i + 1 < alphabet_.size(); ++i)
    thresholds_.push_back(0.5 * (alphabet_.level(i) + alphabet_.level(i + 1)));
}

std::uint16_t QamConstellation::dimension_label(int amplitude_index, bool negative) const {
  const unsigned g = gray_encode(static_cast<unsigned>(amplitude_index));
  return static_cast<std::uint16_t>((negative ? 1u << (bits_per_dim_ - 1) : 0u) | g);
}

double QamConstellation::decide_dimension(double v) const {
  const double a = std::abs(v);
  int idx = 0;
  while (idx < static_cast<int>(thresholds_.size()) && a > thresholds_[static_cast<std::size_t>(idx)]) ++idx;
  const double level = alphabet_.level(idx);
  return v < 0.0 ? -level : level;
}

std::vector<double> QamConstellation::prior(std::span<const double> amplitude_pmf) const {
  if (amplitude_pmf.size() != static_cast<std::size_t>(alphabet_.size()))
    throw Error(Errc::length_mismatch, "amplitude pmf size does not match the alphabet");
  const unsigned m = static_cast<unsigned>(alphabet_.size());
  const std::size_t per_dim = std::size_t{1} << bits_per_dim_;
  std::vector<double> dim(per_dim);
  for (std::size_t lab = 0; lab < per_dim; ++lab)
    dim[lab] = 0.5 * amplitude_pmf[gray_decode(static_cast<unsigned>(lab) & (m - 1))];
  std::vector<double> out(points_.size());
  for (std::size_t i = 0; i < per_dim; ++i)
    for (std::size_t q = 0; q < per_dim; ++q) out[(i << bits_per_dim_) | q] = dim[i] * dim[q];
  return out;
}

}  // namespace pascpr
