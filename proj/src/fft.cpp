#include "pascpr/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace pascpr {
namespace {

struct PlanPair {
  fftw_plan fwd;
  fftw_plan inv;
};

// The FFTW planner is not thread-safe; plans live for the whole process.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto* buf = fftw_alloc_complex(n);
  const int len = static_cast<int>(n);
  PlanPair p{
      fftw_plan_dft_1d(len, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED),
      fftw_plan_dft_1d(len, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED),
  };
  fftw_free(buf);
  if (!p.fwd || !p.inv) throw std::runtime_error("fftw planning failed");
  cache.emplace(n, p);
  return p;
}

}  // namespace

Fft::Fft(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("fft length must be positive");
  auto p = plans_for(n);
  fwd_ = p.fwd;
  inv_ = p.inv;
}

void Fft::forward(std::span<cplx> data) const {
  if (data.size() != n_) throw std::invalid_argument("fft length mismatch");
  auto* d = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), d, d);
}

void Fft::inverse(std::span<cplx> data) const {
  if (data.size() != n_) throw std::invalid_argument("fft length mismatch");
  auto* d = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(inv_), d, d);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : data) v *= scale;
}

std::vector<double> angular_frequencies(std::size_t n, double sample_rate, double center_offset) {
  std::vector<double> w(n);
  const double df = sample_rate / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k)
    w[k] = 2.0 * std::numbers::pi * (static_cast<double>(signed_bin(k, n)) * df + center_offset);
  return w;
}

}  // namespace pascpr
