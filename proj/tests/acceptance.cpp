// Acceptance suite: one PASS/FAIL line per criterion.
//   pascpr_acceptance [--only 1,2,...] [--cache-dir DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "pascpr/config.hpp"
#include "pascpr/constellation.hpp"
#include "pascpr/dsp.hpp"
#include "pascpr/error.hpp"
#include "pascpr/ess.hpp"
#include "pascpr/fiber.hpp"
#include "pascpr/harness.hpp"
#include "pascpr/metrics.hpp"
#include "pascpr/shaping.hpp"
#include "pascpr/txrx.hpp"

using namespace pascpr;
namespace fs = std::filesystem;

namespace {

constexpr double kBaud = 41.67e9;
const double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

const QamConstellation& qam256() {
  static const QamConstellation q(AmplitudeAlphabet::odd(8));
  return q;
}

DualPolSymbolFrame random_frame(std::size_t n, const std::vector<double>& prior, std::uint64_t seed) {
  RngStream rng(seed);
  std::discrete_distribution<int> dist(prior.begin(), prior.end());
  DualPolSymbolFrame f;
  for (std::size_t p = 0; p < 2; ++p) {
    f.pol[p].resize(n);
    f.labels[p].resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      f.labels[p][k] = static_cast<std::uint16_t>(dist(rng.engine()));
      f.pol[p][k] = qam256().point(f.labels[p][k]);
    }
  }
  return f;
}

std::vector<double> uniform_prior() { return std::vector<double>(256, 1.0 / 256); }

double rms_rel(const DualPolSymbolFrame& a, const DualPolSymbolFrame& b) {
  double e = 0.0, s = 0.0;
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t k = 0; k < a.size(); ++k) {
      e += std::norm(a.pol[p][k] - b.pol[p][k]);
      s += std::norm(b.pol[p][k]);
    }
  return std::sqrt(e / s);
}

double rms_rel(const SampledWaveform& a, const SampledWaveform& b) {
  double e = 0.0, s = 0.0;
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t k = 0; k < a.size(); ++k) {
      e += std::norm(a.pol[p][k] - b.pol[p][k]);
      s += std::norm(b.pol[p][k]);
    }
  return std::sqrt(e / s);
}

SampledWaveform scaled(SampledWaveform w, double watts) {
  const double a = std::sqrt(watts / w.mean_power());
  for (auto& p : w.pol)
    for (auto& s : p) s *= a;
  return w;
}

// ---------------------------------------------------------------------------

void ac1(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t sequences = 0;
  for (const auto& [m, n_max] : std::vector<std::pair<int, int>>{{2, 8}, {4, 5}}) {
    const auto alphabet = AmplitudeAlphabet::odd(m);
    for (int n = 1; n <= n_max; ++n) {
      const long e_lo = n, e_hi = static_cast<long>(n) * alphabet.levels().back() * alphabet.levels().back();
      for (long e = e_lo; e <= e_hi; e += 8) {
        const std::vector<int> levels(alphabet.levels().begin(), alphabet.levels().end());
        const auto members = oracle::sphere_members(levels, n, e);
        const auto t = build_trellis(alphabet, n, e);
        o.require(t.total() == members.size(), "count M=" + std::to_string(m) + " N=" + std::to_string(n));
        const int k = static_cast<int>(std::floor(std::log2(static_cast<double>(members.size())) + 1e-12));
        for (std::size_t i = 0; i < (std::size_t{1} << k); ++i) {
          BitVector bits(static_cast<std::size_t>(k));
          for (int b = 0; b < k; ++b) bits[static_cast<std::size_t>(b)] = (i >> (k - 1 - b)) & 1u;
          const auto seq = ess_encode(bits, t);
          if (seq != members[i] || ess_decode(seq, t, k) != bits) {
            o.require(false, "roundtrip M=" + std::to_string(m) + " N=" + std::to_string(n));
            return;
          }
          ++sequences;
        }
      }
    }
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.detail << sequences << " sequences checked in " << dt << " s";
  o.require(dt < 10.0, "runtime < 10 s");
}

// MB entropy at a given mean energy, by bisection on the exponent
double mb_entropy_at_energy(const std::vector<int>& levels, double energy) {
  const auto law = [&](double lambda, double& e, double& h) {
    std::vector<double> w;
    double z = 0.0;
    for (int a : levels) {
      w.push_back(std::exp(-lambda * (a * a - levels[0] * levels[0])));
      z += w.back();
    }
    e = h = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const double p = w[i] / z;
      e += p * levels[i] * levels[i];
      if (p > 0) h -= p * std::log2(p);
    }
  };
  double lo = 0.0, hi = 10.0, e = 0.0, h = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    law(mid, e, h);
    (e > energy ? lo : hi) = mid;
  }
  law(0.5 * (lo + hi), e, h);
  return h;
}

void ac2(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto alphabet = AmplitudeAlphabet::odd(8);
  const auto t = build_trellis_for_rate(alphabet, 512, 1024);
  const auto stats = ess_output_statistics(t, 1024);
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::vector<int> levels(alphabet.levels().begin(), alphabet.levels().end());
  const double loss = mb_entropy_at_energy(levels, stats.mean_energy) - 1024.0 / 512.0;
  o.detail << "E_max " << t.max_energy() << ", mean energy " << stats.mean_energy << ", rate loss " << loss
           << " bits/amplitude, " << dt << " s";
  o.require(loss >= 0.0 && loss < 0.01, "rate loss < 0.01");
  o.require(dt < 300.0, "runtime < 5 min");
}

SampledWaveform two_channel_field(std::size_t n_symbols, double watts, std::uint64_t seed) {
  const auto plan = GridPlan::make(kBaud, 75e9, 2);
  const auto pulse = rrc_periodic(0.1, plan.channel_sps, static_cast<int>(n_symbols));
  std::vector<SampledWaveform> ch;
  for (std::uint64_t c = 0; c < 2; ++c) ch.push_back(modulate(random_frame(n_symbols, uniform_prior(), seed + c), pulse, kBaud));
  return scaled(wdm_mux(ch, plan), watts);
}

void ac3(Outcome& o) {
  FiberSpanParams lossless;
  lossless.alpha_db_km = 0.0;
  const auto field = two_channel_field(512, 40e-3, 11);
  const auto a = ssfm_span(field, lossless, {0.5, 0.0}, Direction::forward);
  const auto b = ssfm_span(field, lossless, {0.25, 0.0}, Direction::forward);
  const auto c = ssfm_span(field, lossless, {0.125, 0.0}, Direction::forward);
  const double ratio = rms_rel(a, b) / rms_rel(b, c);
  o.require(ratio >= 3.0 && ratio <= 5.0, "step-halving ratio in [3,5]");

  const double drift = std::abs(c.mean_power() / field.mean_power() - 1.0);
  o.require(drift < 1e-6, "energy drift < 1e-6");

  FiberSpanParams spm = lossless;
  spm.dispersion_ps_nm_km = 0.0;
  const auto out = ssfm_span(field, spm, {3.0, 0.0}, Direction::forward);
  double worst = 0.0;
  for (std::size_t k = 0; k < field.size(); ++k) {
    const double p = std::norm(field.pol[0][k]) + std::norm(field.pol[1][k]);
    const cplx rot = std::polar(1.0, spm.gamma() * 8.0 / 9.0 * p * spm.length());
    for (std::size_t q = 0; q < 2; ++q) {
      const double mag = std::abs(field.pol[q][k]);
      if (mag > 0) worst = std::max(worst, std::abs(out.pol[q][k] - field.pol[q][k] * rot) / mag);
    }
  }
  o.require(worst < 1e-6, "SPM closed form within 1e-6");
  o.detail << "ratio " << ratio << ", drift " << drift << ", SPM error " << worst;
}

void ac4(Outcome& o) {
  const std::size_t n = 4096;
  const auto frame = random_frame(n, uniform_prior(), 21);
  const auto pulse = rrc_periodic(0.1, 4, static_cast<int>(n));
  const auto tx = scaled(modulate(frame, pulse, kBaud), 1e-3);
  const double s = std::sqrt(1e-3 / modulate(frame, pulse, kBaud).mean_power());
  LinkConfig link;
  link.n_spans = 5;
  link.noiseless = true;
  link.span.gamma_per_w_km = 0.0;
  link.step = {10.0, 0.0};
  const auto rx = propagate_link(tx, link, RngStream(1));
  auto symbols = sample_symbols(matched_filter(edc(rx, link.accumulated_dispersion()), pulse), 4, 0, n);
  for (auto& p : symbols.pol)
    for (auto& v : p) v /= s;
  const double err = rms_rel(symbols, frame);
  const double diff = rms_rel(dbp(rx, link), edc(rx, link.accumulated_dispersion()));
  o.require(err < 1e-6, "EDC recovers symbols to 1e-6");
  o.require(diff < 1e-9, "dbp == edc at gamma 0 to 1e-9");
  o.detail << "EDC symbol error " << err << ", DBP vs EDC " << diff;
}

void ac5(Outcome& o) {
  const double g = std::pow(10.0, 0.2 * 80.0 / 10.0);
  const double n_sp = std::pow(10.0, 5.0 / 10.0) / 2.0;
  const double expected = (g - 1.0) * 6.62607015e-34 * 193.41e12 * n_sp * kBaud;
  RngStream rng(5);
  double acc[2] = {0.0, 0.0};
  std::size_t count = 0;
  for (int draw = 0; draw < 100; ++draw) {
    SampledWaveform w;
    w.sample_rate = kBaud;
    for (auto& p : w.pol) p.assign(4096, 0.0);
    w = edfa(std::move(w), 16.0, 5.0, 193.41e12, rng);
    for (std::size_t q = 0; q < 2; ++q)
      for (const auto& v : w.pol[q]) acc[q] += std::norm(v);
    count += 4096;
  }
  for (int q = 0; q < 2; ++q) {
    const double measured = acc[q] / static_cast<double>(count);
    o.require(std::abs(measured / expected - 1.0) < 0.01, "per-pol ASE within 1%");
    o.detail << (q ? ", " : "") << "pol " << q << ": " << measured << " W vs " << expected << " W";
  }
}

void ac6(Outcome& o) {
  double max_jump = 0.0;
  const auto jumps = [&](const PhaseTrack& t) {
    for (const auto& p : t.phase)
      for (std::size_t k = 1; k < p.size(); ++k) max_jump = std::max(max_jump, std::abs(p[k] - p[k - 1]));
  };
  const auto f = random_frame(5000, uniform_prior(), 61);
  const auto rotate = [&](double phi) {
    auto g = f;
    for (auto& p : g.pol)
      for (auto& v : p) v *= std::polar(1.0, phi);
    return g;
  };
  double worst = 0.0;
  for (double phi : {0.0, 0.2, -0.5, 0.7}) {
    const auto r = bps(rotate(phi), qam256(), BpsConfig{8, 64, kPi / 2});
    jumps(r.track);
    for (const auto& p : r.track.phase)
      for (double v : p) {
        const double e = v - phi;
        worst = std::max(worst, std::abs(e - kPi / 2 * std::round(e / (kPi / 2))));
      }
  }
  o.require(worst <= kPi / 256 + 1e-12, "constant rotation within pi/256");

  const auto rx = rotate(0.3);
  const auto phi = mean_phase(rx, f);
  const auto wide = bps(rx, qam256(), BpsConfig{static_cast<int>(f.size()), 64, kPi / 2});
  jumps(wide.track);
  double agree = 0.0;
  for (std::size_t p = 0; p < 2; ++p)
    for (double v : wide.track.phase[p]) agree = std::max(agree, std::abs(v - phi[p]));
  o.require(agree <= kPi / 256 + 1e-12, "frame-wide BPS matches MPR within pi/256");

  auto noisy = rotate(0.1);
  RngStream walk_rng(62), noise(63);
  noisy = apply_phase(noisy, wiener_phase(noisy.size(), 1e-6, walk_rng));
  for (auto& p : noisy.pol)
    for (auto& v : p) v += cplx(noise.normal(), noise.normal()) * 0.15;
  jumps(bps(noisy, qam256(), BpsConfig{24, 64, kPi / 2}).track);
  o.require(max_jump < kPi / 4, "no unwrap jump >= pi/4");
  o.detail << "max rotation error " << worst << ", BPS vs MPR " << agree << ", largest jump " << max_jump;
}

void ac7(Outcome& o) {
  const std::vector<cplx> pts(qam256().points().begin(), qam256().points().end());
  const std::size_t n = std::size_t{1} << 16;  // per polarization
  const auto mb = mb_fit(AmplitudeAlphabet::odd(8), 2.0);
  std::uint64_t seed = 70;
  double worst = 0.0;
  for (const auto& [name, prior] : std::vector<std::pair<std::string, std::vector<double>>>{
           {"uniform", uniform_prior()}, {"MB", qam256().prior(mb.pmf)}}) {
    double es = 0.0;
    for (std::size_t x = 0; x < 256; ++x) es += prior[x] * std::norm(pts[x]);
    const auto tx = random_frame(n, prior, seed++);
    for (double snr_db : {12.0, 18.0, 24.0}) {
      const double sigma2 = es / std::pow(10.0, snr_db / 10.0);
      auto rx = tx;
      RngStream noise(seed++);
      const double sd = std::sqrt(sigma2 / 2);
      for (auto& p : rx.pol)
        for (auto& v : p) v += cplx(sd * noise.normal(), sd * noise.normal());
      const auto est = estimate_gmi(rx, tx, qam256(), prior, entropy_bits(prior), fit_metric(rx, tx));
      const double ref = oracle::gmi_quadrature(pts, prior, 8, sigma2);
      worst = std::max(worst, std::abs(est.gmi - ref));
      o.detail << name << "@" << snr_db << "dB " << est.gmi << "/" << ref << "; ";
      o.require(std::abs(est.gmi - ref) < 0.02, name + " at " + std::to_string(snr_db) + " dB");
    }
  }
  o.detail << "worst deviation " << worst;
}

void ac8(Outcome& o) {
  // uniform 256-QAM through a back-to-back WDM chain
  const auto plan = GridPlan::make(kBaud, 75e9, 3);
  const std::size_t n = 4096;
  const auto pulse = rrc_periodic(0.1, plan.channel_sps, static_cast<int>(n));
  std::vector<DualPolSymbolFrame> frames;
  std::vector<SampledWaveform> waves;
  for (int c = 0; c < 3; ++c) {
    frames.push_back(random_frame(n, uniform_prior(), 80 + static_cast<std::uint64_t>(c)));
    waves.push_back(modulate(frames.back(), pulse, kBaud));
  }
  const auto wdm = wdm_mux(waves, plan);
  const auto rx = sample_symbols(channel_demux(wdm, plan, plan.slot_offset(1), pulse), plan.channel_sps, 0, n);
  const auto out = mpr(rx, frames[1]);
  const double uniform = estimate_gmi(out, frames[1], qam256(), uniform_prior(), 8.0, fit_metric(out, frames[1])).gmi;
  o.require(std::abs(uniform - 8.0) < 1e-9, "uniform back-to-back GMI = 8");

  const auto b2b = run_experiment(preset("backtoback"));
  double shaped_worst = 0.0;
  for (const auto& row : b2b.summary) shaped_worst = std::max(shaped_worst, std::abs(row.gmi_bits - 6.0));
  o.require(shaped_worst < 1e-9, "shaped back-to-back GMI = 6 at every N");

  const double rate = aggregate_rate(6.0);
  o.require(std::abs(rate - 2000.16) < 1e-9 && std::abs(rate / (333.3 * 6.0) - 1.0) < 1e-3, "aggregate rate");
  o.detail << "uniform " << uniform << ", shaped max deviation " << shaped_worst << ", rate(6.0) " << rate
           << " Gbit/s";
}

void ac9(Outcome& o, const fs::path& cache) {
  auto cfg = preset("fig2_desk");
  cfg.trellis_cache = cache / "trellis";
  RunOptions opt;
  opt.out = cache / "fig2_desk.csv";
  opt.log = &std::cerr;
  const auto res = run_experiment(cfg, opt);
  o.require(res.failed_jobs == 0, "no failed sweep points");

  std::map<std::tuple<std::string, std::string, std::string>, ResultRow> at;  // (comp, cpr, variant:N)
  std::vector<std::string> pas;
  for (const auto& r : res.summary) {
    at[{r.comp, r.cpr, r.variant + ":" + r.n}] = r;
    std::cerr << "  " << r.variant << " N=" << r.n << " " << r.comp << "/" << r.cpr << " P=" << r.power_dbm
              << " dBm GMI " << r.gmi_bits << " +- " << r.ci95 << "\n";
  }
  for (int n : cfg.block_lengths) pas.push_back("PAS:" + std::to_string(n));
  const std::string mb = "MB:inf";

  for (const std::string comp : {"EDC", "DBP"}) {
    // (a) without BPS, the best block length beats MB with separated intervals
    const ResultRow* best = nullptr;
    for (const auto& v : pas) {
      const auto& r = at[{comp, "MPR", v}];
      if (!best || r.gmi_bits > best->gmi_bits) best = &r;
    }
    const auto& mb_mpr = at[{comp, "MPR", mb}];
    const bool gain = best->gmi_bits - best->ci95 > mb_mpr.gmi_bits + mb_mpr.ci95;
    o.require(gain, comp + " (a) PAS gain over MB without BPS");
    o.detail << comp << ": gain " << best->gmi_bits - mb_mpr.gmi_bits << " at N=" << best->n;

    // (b) with BPS, GMI(N) does not decrease beyond the intervals, and MB reaches the best PAS point
    for (std::size_t i = 1; i < pas.size(); ++i) {
      const auto& lo = at[{comp, "BPS", pas[i - 1]}];
      const auto& hi = at[{comp, "BPS", pas[i]}];
      o.require(hi.gmi_bits + hi.ci95 >= lo.gmi_bits - lo.ci95, comp + " (b) BPS curve nondecreasing at N=" + hi.n);
    }
    const auto& mb_bps = at[{comp, "BPS", mb}];
    o.require(std::abs(mb_bps.gmi_bits - best->gmi_bits) <= mb_bps.ci95 + best->ci95 || mb_bps.gmi_bits > best->gmi_bits,
              comp + " (b) MB with BPS reaches the best PAS without BPS");
    o.detail << ", MB+BPS minus best PAS " << mb_bps.gmi_bits - best->gmi_bits << "; ";
  }
  // (c) DBP above EDC everywhere
  std::vector<std::string> all = pas;
  all.push_back(mb);
  for (const std::string cpr : {"MPR", "BPS"})
    for (const auto& v : all)
      o.require(at[{"DBP", cpr, v}].gmi_bits > at[{"EDC", cpr, v}].gmi_bits, "(c) DBP above EDC for " + v + " " + cpr);
  o.detail << res.computed_jobs << " points computed, " << res.reused_jobs << " reused";
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path cache = fs::current_path() / "acceptance_cache";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
          only.insert(std::stoi(item));
        } else {
          for (int k = std::stoi(item.substr(0, dash)); k <= std::stoi(item.substr(dash + 1)); ++k) only.insert(k);
        }
      }
    } else if (a == "--cache-dir" && i + 1 < argc) {
      cache = argv[++i];
    } else {
      std::cerr << "usage: pascpr_acceptance [--only 1,2,5-8] [--cache-dir DIR]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"ESS exhaustive roundtrip and enumeration", ac1},
      {"ESS rate loss at N=512", ac2},
      {"SSFM order, SPM closed form, energy", ac3},
      {"linear chain identity", ac4},
      {"ASE calibration", ac5},
      {"BPS accuracy", ac6},
      {"GMI quadrature oracle", ac7},
      {"noiseless rate anchors", ac8},
      {"desk-scale trends", [&](Outcome& o) { ac9(o, cache); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("AC%d %s  %s (%.1f s): %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), dt,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
