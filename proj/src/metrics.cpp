#include "pascpr/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pascpr/error.hpp"

namespace pascpr {

namespace {

void check_range(const DualPolSymbolFrame& rx, const DualPolSymbolFrame& tx, std::size_t guard) {
  if (rx.size() != tx.size() || rx.pol[1].size() != tx.pol[1].size())
    throw Error(Errc::length_mismatch, "received and transmitted frames differ in length");
  if (rx.size() < 2 * guard + kMinFitSymbols)
    throw Error(Errc::domain, "need at least " + std::to_string(kMinFitSymbols) + " symbols outside the guards");
}

}  // namespace

DecoderMetric fit_metric(const DualPolSymbolFrame& rx, const DualPolSymbolFrame& tx, std::size_t guard) {
  check_range(rx, tx, guard);
  const std::size_t end = rx.size() - guard;
  DecoderMetric m;
  for (std::size_t p = 0; p < kPolarizations; ++p) {
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t k = guard; k < end; ++k) {
      num += rx.pol[p][k] * std::conj(tx.pol[p][k]);
      den += std::norm(tx.pol[p][k]);
    }
    if (den == 0.0) throw Error(Errc::degenerate, "transmitted frame has zero energy");
    const cplx h = num / den;
    double res = 0.0;
    for (std::size_t k = guard; k < end; ++k) res += std::norm(rx.pol[p][k] - h * tx.pol[p][k]);
    const double n = static_cast<double>(end - guard);
    m.gain[p] = h;
    m.noise_variance[p] = std::max(res / n, 1e-12 * std::norm(h) * den / n);
  }
  return m;
}

GmiEstimate estimate_gmi(const DualPolSymbolFrame& rx, const DualPolSymbolFrame& tx,
                         const QamConstellation& constellation, std::span<const double> prior, double source_entropy,
                         const DecoderMetric& metric, std::size_t guard) {
  check_range(rx, tx, guard);
  const std::size_t m = constellation.size();
  const int bits = constellation.bits_per_symbol();
  if (prior.size() != m) throw Error(Errc::length_mismatch, "prior size does not match the constellation");
  double total_prior = 0.0;
  for (double p : prior) {
    if (!(p >= 0.0)) throw Error(Errc::domain, "negative prior");
    total_prior += p;
  }
  if (std::abs(total_prior - 1.0) > 1e-9) throw Error(Errc::domain, "prior is not normalized");
  if (!tx.has_labels() || tx.labels[1].size() != tx.size())
    throw Error(Errc::length_mismatch, "transmitted frame carries no labels");

  std::vector<double> log_prior(m);
  for (std::size_t x = 0; x < m; ++x) log_prior[x] = prior[x] > 0.0 ? std::log(prior[x]) : -INFINITY;

  const std::size_t end = rx.size() - guard;
  const std::size_t n = kPolarizations * (end - guard);
  std::vector<double> ll(m), v(m);
  std::vector<double> s0(static_cast<std::size_t>(bits)), s1(static_cast<std::size_t>(bits));
  double sum = 0.0, sum_sq = 0.0;

  for (std::size_t p = 0; p < kPolarizations; ++p) {
    const double s2 = metric.noise_variance[p];
    if (!(s2 > 0.0)) throw Error(Errc::domain, "decoder noise variance must be positive");
    std::vector<cplx> hx(m);
    for (std::size_t x = 0; x < m; ++x) hx[x] = metric.gain[p] * constellation.point(static_cast<std::uint16_t>(x));

    for (std::size_t k = guard; k < end; ++k) {
      const cplx r = rx.pol[p][k];
      const std::size_t label = tx.labels[p][k];
      if (label >= m || prior[label] <= 0.0)
        throw Error(Errc::domain, "transmitted label has zero prior or lies outside the constellation");
      double lmax = -INFINITY;
      for (std::size_t x = 0; x < m; ++x) {
        ll[x] = log_prior[x] - std::norm(r - hx[x]) / s2;
        lmax = std::max(lmax, ll[x]);
      }
      std::fill(s0.begin(), s0.end(), 0.0);
      std::fill(s1.begin(), s1.end(), 0.0);
      double total = 0.0;
      for (std::size_t x = 0; x < m; ++x) {
        const double d = ll[x] - lmax;
        v[x] = d < -745.0 ? 0.0 : std::exp(d);
        if (v[x] == 0.0) continue;
        total += v[x];
        for (int i = 0; i < bits; ++i) ((x >> i) & 1u ? s1 : s0)[static_cast<std::size_t>(i)] += v[x];
      }
      double loss = 0.0;
      for (int i = 0; i < bits; ++i) {
        const unsigned b = (label >> i) & 1u;
        const double match = (b ? s1 : s0)[static_cast<std::size_t>(i)];
        if (match > 1e-250 * total) {
          loss += std::log2(total / match);
          continue;
        }
        // the transmitted bit value is far from the best hypothesis; rescale within its group
        double gmax = -INFINITY;
        for (std::size_t x = 0; x < m; ++x)
          if (((x >> i) & 1u) == b) gmax = std::max(gmax, ll[x]);
        double g = 0.0;
        for (std::size_t x = 0; x < m; ++x)
          if (((x >> i) & 1u) == b) g += std::exp(ll[x] - gmax);
        loss += (lmax - gmax) / std::log(2.0) + std::log2(total / g);
      }
      const double gk = source_entropy - loss;
      sum += gk;
      sum_sq += gk * gk;
    }
  }
  const double nd = static_cast<double>(n);
  const double mean = sum / nd;
  const double var = n > 1 ? std::max(0.0, (sum_sq - nd * mean * mean) / (nd - 1.0)) : 0.0;
  GmiEstimate e;
  e.gmi = std::max(0.0, mean);
  e.ci95 = 1.96 * std::sqrt(var / nd);
  e.n_symbols = n;
  return e;
}

GmiEstimate average_scoi_gmi(std::span<const GmiEstimate> per_channel) {
  if (per_channel.empty()) throw Error(Errc::domain, "no channel estimates to average");
  GmiEstimate out;
  double ci2 = 0.0;
  for (const auto& e : per_channel) {
    out.gmi += e.gmi;
    ci2 += e.ci95 * e.ci95;
    out.n_symbols += e.n_symbols;
  }
  const double n = static_cast<double>(per_channel.size());
  out.gmi /= n;
  out.ci95 = std::sqrt(ci2) / n;
  out.launch_power_dbm = per_channel.front().launch_power_dbm;
  return out;
}

double aggregate_rate(double gmi, double baud_rate, int channels) {
  if (!(gmi >= 0.0)) throw Error(Errc::domain, "gmi must be >= 0");
  return 2.0 * channels * baud_rate * gmi / 1e9;
}

PowerOptimum pick_launch_power(std::span<const GmiEstimate> evaluated) {
  if (evaluated.size() < 3) throw Error(Errc::configuration, "power grid needs at least 3 points");
  for (std::size_t i = 1; i < evaluated.size(); ++i)
    if (!(evaluated[i].launch_power_dbm > evaluated[i - 1].launch_power_dbm))
      throw Error(Errc::configuration, "power grid must be strictly increasing");
  PowerOptimum out;
  out.evaluated.assign(evaluated.begin(), evaluated.end());
  std::size_t best = 0;
  for (std::size_t i = 1; i < evaluated.size(); ++i)
    if (evaluated[i].gmi > evaluated[best].gmi) best = i;
  out.estimate = evaluated[best];
  out.best_power_dbm = evaluated[best].launch_power_dbm;
  out.refined_gmi = evaluated[best].gmi;
  out.at_edge = best == 0 || best + 1 == evaluated.size();
  if (out.at_edge) return out;

  std::vector<std::size_t> order(evaluated.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return evaluated[i].gmi > evaluated[j].gmi; });
  std::array<std::size_t, 3> top{order[0], order[1], order[2]};
  std::sort(top.begin(), top.end());
  const double x0 = evaluated[top[0]].launch_power_dbm, x1 = evaluated[top[1]].launch_power_dbm,
               x2 = evaluated[top[2]].launch_power_dbm;
  const double y0 = evaluated[top[0]].gmi, y1 = evaluated[top[1]].gmi, y2 = evaluated[top[2]].gmi;
  // Newton form of the parabola through the three best points
  const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  if (a < 0.0) {
    const double b = d01 - a * (x0 + x1);
    const double xv = std::clamp(-b / (2.0 * a), x0, x2);
    const double yv = y1 + (xv - x1) * (d01 + a * (xv - x0));
    if (yv >= out.refined_gmi) {
      out.best_power_dbm = xv;
      out.refined_gmi = yv;
    }
  }
  return out;
}

PowerOptimum optimize_launch_power(const std::function<GmiEstimate(double)>& runner,
                                   std::span<const double> power_grid_dbm) {
  if (power_grid_dbm.size() < 3) throw Error(Errc::configuration, "power grid needs at least 3 points");
  std::vector<GmiEstimate> evaluated;
  for (double p : power_grid_dbm) {
    std::ostringstream where;
    where << "at launch power " << p << " dBm: ";
    try {
      auto e = runner(p);
      e.launch_power_dbm = p;
      evaluated.push_back(e);
    } catch (const Error& e) {
      throw Error(e.code(), where.str() + e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::propagation, where.str() + e.what());
    }
  }
  return pick_launch_power(evaluated);
}

}  // namespace pascpr
