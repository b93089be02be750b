#pragma once

#include <array>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "pascpr/constellation.hpp"
#include "pascpr/types.hpp"

namespace pascpr {

/// Mismatched circular Gaussian channel r = h x + n, per polarization.
struct DecoderMetric {
  std::array<cplx, kPolarizations> gain{cplx(1.0), cplx(1.0)};
  std::array<double, kPolarizations> noise_variance{1.0, 1.0};
};

inline constexpr std::size_t kMinFitSymbols = 1000;

/// Least-squares gain and residual variance over symbols [guard, n - guard).
DecoderMetric fit_metric(const DualPolSymbolFrame& rx, const DualPolSymbolFrame& tx, std::size_t guard = 0);

struct GmiEstimate {
  double gmi = 0.0;   // bits per symbol and polarization
  double ci95 = 0.0;
  std::size_t n_symbols = 0;
  double launch_power_dbm = std::numeric_limits<double>::quiet_NaN();
};

/// Bit-wise GMI with priors `prior` (indexed by label) and source entropy
/// `source_entropy` bits per symbol. Transmitted labels come from tx.labels.
GmiEstimate estimate_gmi(const DualPolSymbolFrame& rx, const DualPolSymbolFrame& tx,
                         const QamConstellation& constellation, std::span<const double> prior, double source_entropy,
                         const DecoderMetric& metric, std::size_t guard = 0);

/// Mean over channels; confidence intervals combined as independent.
GmiEstimate average_scoi_gmi(std::span<const GmiEstimate> per_channel);

inline constexpr double kSymbolRate = 41.67e9;

/// Total rate in Gbit/s of `channels` dual-polarization channels.
double aggregate_rate(double gmi, double baud_rate = kSymbolRate, int channels = 4);

struct PowerOptimum {
  double best_power_dbm = 0.0;   // parabola vertex when interior, else grid argmax
  double refined_gmi = 0.0;      // parabola peak value
  GmiEstimate estimate;          // measured at the best grid point
  bool at_edge = false;
  std::vector<GmiEstimate> evaluated;
};

PowerOptimum optimize_launch_power(const std::function<GmiEstimate(double)>& runner,
                                   std::span<const double> power_grid_dbm);

/// Optimum from already evaluated grid points (same rules as above).
PowerOptimum pick_launch_power(std::span<const GmiEstimate> evaluated);

}  // namespace pascpr
