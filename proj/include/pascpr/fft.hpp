#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pascpr/types.hpp"

namespace pascpr {

/// In-place complex DFT of a given length, backed by FFTW. Plans are created
/// once per length and shared; execution is reentrant. `inverse` applies the
/// 1/n scaling so that inverse(forward(x)) == x.
class Fft {
 public:
  explicit Fft(std::size_t n);

  std::size_t size() const { return n_; }
  void forward(std::span<cplx> data) const;
  void inverse(std::span<cplx> data) const;

 private:
  std::size_t n_;
  void* fwd_;
  void* inv_;
};

/// Angular frequency of each DFT bin for a record sampled at `sample_rate`,
/// shifted by `center_offset` Hz (bins in FFTW order).
std::vector<double> angular_frequencies(std::size_t n, double sample_rate, double center_offset = 0.0);

/// Signed bin index (-n/2 .. n/2-1) of FFTW bin k.
inline long signed_bin(std::size_t k, std::size_t n) {
  return k < (n + 1) / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

inline std::size_t wrap_bin(long k, std::size_t n) {
  long m = k % static_cast<long>(n);
  return static_cast<std::size_t>(m < 0 ? m + static_cast<long>(n) : m);
}

}  // namespace pascpr
