#include "pascpr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "pascpr/constellation.hpp"
#include "pascpr/dsp.hpp"
#include "pascpr/error.hpp"
#include "pascpr/fiber.hpp"
#include "pascpr/txrx.hpp"

namespace pascpr {

std::string Variant::n_label() const { return kind == "MB" ? "inf" : std::to_string(n); }

std::vector<Variant> variants(const ExperimentConfig& cfg) {
  std::vector<Variant> out;
  const auto ess = [&](int block, std::size_t span) {
    ShapingConfig s;
    s.block_length = block;
    s.bits_per_block = static_cast<int>(std::lround(cfg.bits_per_amplitude * block));
    s.alphabet_size = cfg.alphabet_size;
    s.interleaver_span = span;
    return s;
  };
  for (int n : cfg.block_lengths) out.push_back({"PAS", n, ess(n, 0)});
  for (int n : cfg.interleaver_spans)
    out.push_back({"PAS+IL", n, ess(cfg.interleaver_block_length, static_cast<std::size_t>(n))});
  if (cfg.mb_baseline) {
    // k/N carries the target entropy; the block length itself is unused in this mode
    ShapingConfig s;
    s.mode = ShapingMode::mb_iid;
    s.alphabet_size = cfg.alphabet_size;
    s.block_length = 1000000;
    s.bits_per_block = static_cast<int>(std::lround(cfg.bits_per_amplitude * 1000000));
    out.push_back({"MB", 0, s});
  }
  return out;
}

std::vector<Receiver> receivers(const ExperimentConfig& cfg) {
  std::vector<Receiver> out;
  for (auto comp : cfg.comp)
    for (auto cpr : cfg.cpr)
      out.push_back({comp, cpr, cpr == CprMode::bps ? cfg.bps(comp).half_window : 0, to_string(cpr)});
  return out;
}

namespace {

std::uint64_t text_tag(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

RngStream job_stream(std::uint64_t seed, const Variant& v, double power_dbm) {
  return RngStream(seed).split(
      {text_tag(v.kind), static_cast<std::uint64_t>(v.n), std::bit_cast<std::uint64_t>(power_dbm)});
}

std::string number_text(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void scale_frame(DualPolSymbolFrame& f, double s) {
  for (auto& p : f.pol)
    for (auto& v : p) v *= s;
}

}  // namespace

std::vector<GmiEstimate> simulate_point(const ExperimentConfig& cfg, const Variant& variant, double power_dbm,
                                        std::uint64_t seed, std::span<const Receiver> rx,
                                        const AmplitudeSource* source) {
  cfg.validate();
  std::optional<AmplitudeSource> own;
  if (!source) source = &own.emplace(variant.shaping, cfg.trellis_cache);
  const GridPlan plan = cfg.plan();
  const QamConstellation qam(AmplitudeAlphabet::odd(cfg.alphabet_size));
  const std::size_t n = cfg.n_symbols;
  const int sps = plan.channel_sps;
  const auto pulse = rrc_periodic(cfg.rolloff, sps, static_cast<int>(n));
  const double p_ch = 1e-3 * std::pow(10.0, power_dbm / 10.0);
  const double scale = std::sqrt(p_ch * sps / (4.0 * source->mean_energy()));
  const RngStream job = job_stream(seed, variant, power_dbm);

  std::vector<DualPolSymbolFrame> tx(static_cast<std::size_t>(plan.n_channels));
  std::vector<SampledWaveform> waves;
  for (int c = 0; c < plan.n_channels; ++c) {
    RngStream amp_rng = job.split({1, static_cast<std::uint64_t>(c)});
    RngStream sign_rng = job.split({2, static_cast<std::uint64_t>(c)});
    const auto amps = source->generate(4 * n, amp_rng);
    BitVector signs(4 * n);
    for (auto& b : signs) b = sign_rng.bit();
    auto& frame = tx[static_cast<std::size_t>(c)];
    frame = pas_map(amps, signs, qam, source->pmf());
    auto w = modulate(frame, pulse, cfg.baud_rate);
    for (auto& p : w.pol)
      for (auto& v : p) v *= scale;
    waves.push_back(std::move(w));
  }
  auto wdm = wdm_mux(waves, plan);
  waves.clear();
  waves.shrink_to_fit();
  const std::string tag = variant.kind + "_" + variant.n_label() + "_" + number_text(power_dbm) + "dBm_seed" +
                          std::to_string(seed);
  if (!cfg.waveform_dump_dir.empty()) {
    make_directories(cfg.waveform_dump_dir);
    write_waveform(cfg.waveform_dump_dir / ("tx_" + tag + ".bin"), wdm);
  }
  wdm = propagate_link(std::move(wdm), cfg.link, job.split(3));
  if (!cfg.waveform_dump_dir.empty()) write_waveform(cfg.waveform_dump_dir / ("rx_" + tag + ".bin"), wdm);

  const auto prior = qam.prior(source->pmf());
  const double entropy = 2.0 * (source->rate() + 1.0);
  std::vector<std::vector<GmiEstimate>> per_rx(rx.size());
  for (int c : cfg.scoi) {
    const auto& ref = tx[static_cast<std::size_t>(c)];
    const auto selected = channel_select(wdm, plan, plan.slot_offset(c));
    for (CompMode comp : {CompMode::edc, CompMode::dbp}) {
      if (std::none_of(rx.begin(), rx.end(), [&](const Receiver& r) { return r.comp == comp; })) continue;
      auto field = comp == CompMode::edc ? edc(selected, cfg.link.accumulated_dispersion()) : dbp(selected, cfg.link);
      auto symbols = sample_symbols(matched_filter(field, pulse), sps, 0, n);
      scale_frame(symbols, 1.0 / scale);
      for (std::size_t i = 0; i < rx.size(); ++i) {
        if (rx[i].comp != comp) continue;
        DualPolSymbolFrame out;
        if (rx[i].cpr == CprMode::mpr) {
          out = mpr(symbols, ref);
        } else {
          BpsConfig b;
          b.half_window = rx[i].half_window;
          b.n_test_angles = cfg.bps_test_angles;
          auto r = bps(symbols, qam, b);
          if (!cfg.phase_track_dir.empty()) {
            make_directories(cfg.phase_track_dir);
            write_phase_track(cfg.phase_track_dir / ("track_" + tag + "_" + to_string(comp) + "_" + rx[i].cpr_label +
                                                     "_ch" + std::to_string(c) + ".csv"),
                              r.track);
          }
          out = std::move(r.frame);
        }
        const auto metric = fit_metric(out, ref, cfg.guard_symbols);
        per_rx[i].push_back(estimate_gmi(out, ref, qam, prior, entropy, metric, cfg.guard_symbols));
      }
    }
  }
  std::vector<GmiEstimate> result;
  for (auto& v : per_rx) {
    auto e = average_scoi_gmi(v);
    e.launch_power_dbm = power_dbm;
    result.push_back(e);
  }
  return result;
}

std::string format_results(std::span<const ResultRow> rows) {
  std::string s(kResultsHeader);
  s += '\n';
  for (const auto& r : rows) {
    s += r.variant + ',' + r.n + ',' + r.cpr + ',' + r.comp + ',' + number_text(r.power_dbm) + ',' +
         number_text(r.gmi_bits) + ',' + number_text(r.ci95) + ',' + number_text(r.rate_gbps) + ',' +
         std::to_string(r.seed) + ',' + number_text(r.runtime_s) + '\n';
  }
  return s;
}

void emit_results(std::span<const ResultRow> rows, const std::filesystem::path& path) {
  if (rows.empty()) throw Error(Errc::io, "no result rows to write");
  if (path.has_parent_path()) make_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::io, "cannot write " + path.string());
  os << format_results(rows);
  if (!os.flush()) throw Error(Errc::io, "write failed for " + path.string());
}

namespace {

double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error(Errc::io, where + ": bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string x;
  while (std::getline(ss, x, ',')) f.push_back(x);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  return f;
}

}  // namespace

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kResultsHeader)
    throw Error(Errc::io, path.string() + ": unexpected header (want " + std::string(kResultsHeader) + ")");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 10) throw Error(Errc::io, where + ": expected 10 fields");
    ResultRow r{f[0], f[1], f[2], f[3], parse_double(f[4], where), parse_double(f[5], where),
                parse_double(f[6], where), parse_double(f[7], where), 0, parse_double(f[9], where)};
    auto res = std::from_chars(f[8].data(), f[8].data() + f[8].size(), r.seed);
    if (res.ec != std::errc()) throw Error(Errc::io, where + ": bad seed");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::filesystem::path points_path(const std::filesystem::path& out) {
  auto p = out;
  p.replace_extension(".points.csv");
  return p;
}

namespace {

using PointKey = std::tuple<std::string, std::string, std::string, std::string, std::string, std::uint64_t>;

PointKey key_of(const ResultRow& r) { return {r.variant, r.n, r.cpr, r.comp, number_text(r.power_dbm), r.seed}; }

struct Job {
  std::size_t variant;
  std::size_t power;
  std::uint64_t seed;
};

RunOutput run_sweep(const ExperimentConfig& cfg, const std::vector<Receiver>& rxs, const RunOptions& opt) {
  cfg.validate();
  const auto vars = variants(cfg);
  const auto log = [&](const std::string& msg) {
    if (opt.log) *opt.log << msg << std::endl;
  };

  std::vector<Job> jobs;
  for (std::size_t v = 0; v < vars.size(); ++v)
    for (std::size_t p = 0; p < cfg.powers_dbm.size(); ++p)
      for (int r = 0; r < cfg.n_seeds; ++r) jobs.push_back({v, p, cfg.master_seed + static_cast<std::uint64_t>(r)});

  std::optional<std::filesystem::path> pts = opt.points;
  if (!pts && !opt.out.empty()) pts = points_path(opt.out);

  std::map<PointKey, ResultRow> cached;
  if (opt.resume && pts && std::filesystem::exists(*pts))
    for (auto& r : read_results(*pts))
      if (std::isfinite(r.gmi_bits)) cached.emplace(key_of(r), r);

  const auto row_for = [&](const Job& j, const Receiver& r) {
    ResultRow row;
    row.variant = vars[j.variant].kind;
    row.n = vars[j.variant].n_label();
    row.cpr = r.cpr_label;
    row.comp = to_string(r.comp);
    row.power_dbm = cfg.powers_dbm[j.power];
    row.seed = j.seed;
    return row;
  };

  std::vector<std::vector<ResultRow>> results(jobs.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    std::vector<ResultRow> rows;
    for (const auto& r : rxs) {
      auto it = cached.find(key_of(row_for(jobs[i], r)));
      if (it == cached.end()) break;
      rows.push_back(it->second);
    }
    if (rows.size() == rxs.size())
      results[i] = std::move(rows);
    else
      todo.push_back(i);
  }

  RunOutput out;
  out.reused_jobs = jobs.size() - todo.size();
  log("jobs: " + std::to_string(jobs.size()) + " total, " + std::to_string(out.reused_jobs) + " reused");

  // shared sources, built once per variant
  std::vector<std::unique_ptr<AmplitudeSource>> sources(vars.size());
  std::vector<std::string> source_error(vars.size());
  for (std::size_t v = 0; v < vars.size(); ++v) {
    const bool needed = std::any_of(todo.begin(), todo.end(), [&](std::size_t i) { return jobs[i].variant == v; });
    if (!needed) continue;
    try {
      sources[v] = std::make_unique<AmplitudeSource>(vars[v].shaping, cfg.trellis_cache);
    } catch (const std::exception& e) {
      source_error[v] = e.what();
    }
  }

  std::unique_ptr<std::ofstream> append;
  if (pts && !todo.empty()) {
    if (pts->has_parent_path()) make_directories(pts->parent_path());
    const bool fresh = !std::filesystem::exists(*pts) || std::filesystem::file_size(*pts) == 0;
    append = std::make_unique<std::ofstream>(*pts, std::ios::binary | std::ios::app);
    if (!*append) throw Error(Errc::io, "cannot write " + pts->string());
    if (fresh) *append << kResultsHeader << '\n';
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= todo.size()) return;
      const std::size_t i = todo[t];
      const Job& j = jobs[i];
      const auto start = std::chrono::steady_clock::now();
      std::vector<ResultRow> rows;
      std::string error;
      try {
        if (!sources[j.variant]) throw Error(Errc::configuration, source_error[j.variant]);
        const auto est = simulate_point(cfg, vars[j.variant], cfg.powers_dbm[j.power], j.seed, rxs,
                                        sources[j.variant].get());
        for (std::size_t r = 0; r < rxs.size(); ++r) {
          auto row = row_for(j, rxs[r]);
          row.gmi_bits = est[r].gmi;
          row.ci95 = est[r].ci95;
          row.rate_gbps = aggregate_rate(est[r].gmi, cfg.baud_rate);
          rows.push_back(row);
        }
      } catch (const std::exception& e) {
        error = e.what();
        for (const auto& r : rxs) {
          auto row = row_for(j, r);
          row.gmi_bits = row.ci95 = row.rate_gbps = std::nan("");
          rows.push_back(row);
        }
      }
      const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      for (auto& r : rows) r.runtime_s = runtime;

      std::lock_guard lock(mu);
      ++done;
      std::ostringstream msg;
      msg << "[" << done << "/" << todo.size() << "] " << vars[j.variant].kind << " N=" << vars[j.variant].n_label()
          << " P=" << cfg.powers_dbm[j.power] << " dBm seed=" << j.seed << " " << runtime << " s";
      if (error.empty()) {
        for (const auto& r : rows) msg << " " << r.comp << "/" << r.cpr << "=" << r.gmi_bits;
        if (append) {
          *append << format_results(rows).substr(kResultsHeader.size() + 1);
          append->flush();
        }
      } else {
        msg << " FAILED: " << error;
        ++out.failed_jobs;
      }
      log(msg.str());
      results[i] = std::move(rows);
    }
  };
  const int n_workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(todo.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  out.computed_jobs = todo.size();
  append.reset();

  // points ordered by variant, receiver, power, seed
  for (std::size_t v = 0; v < vars.size(); ++v)
    for (std::size_t r = 0; r < rxs.size(); ++r)
      for (std::size_t i = 0; i < jobs.size(); ++i)
        if (jobs[i].variant == v) out.points.push_back(results[i][r]);
  if (pts) emit_results(out.points, *pts);

  for (std::size_t v = 0; v < vars.size(); ++v)
    for (std::size_t r = 0; r < rxs.size(); ++r) {
      ResultRow row;
      row.variant = vars[v].kind;
      row.n = vars[v].n_label();
      row.cpr = rxs[r].cpr_label;
      row.comp = to_string(rxs[r].comp);
      row.seed = cfg.master_seed;
      std::vector<GmiEstimate> curve;
      bool failed = false;
      for (std::size_t p = 0; p < cfg.powers_dbm.size(); ++p) {
        std::vector<GmiEstimate> reps;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
          if (jobs[i].variant != v || jobs[i].power != p) continue;
          const auto& pr = results[i][r];
          row.runtime_s += pr.runtime_s;
          GmiEstimate e;
          e.gmi = pr.gmi_bits;
          e.ci95 = pr.ci95;
          failed = failed || !std::isfinite(pr.gmi_bits);
          reps.push_back(e);
        }
        auto e = average_scoi_gmi(reps);
        e.launch_power_dbm = cfg.powers_dbm[p];
        curve.push_back(e);
      }
      if (failed) {
        row.power_dbm = row.gmi_bits = row.ci95 = row.rate_gbps = std::nan("");
      } else {
        const auto best = pick_launch_power(curve);
        if (best.at_edge)
          log("warning: " + row.variant + " N=" + row.n + " " + row.comp + "/" + row.cpr +
              " peaks at the edge of the power grid");
        row.power_dbm = best.best_power_dbm;
        row.gmi_bits = best.refined_gmi;
        row.ci95 = best.estimate.ci95;
        row.rate_gbps = aggregate_rate(best.refined_gmi, cfg.baud_rate);
      }
      out.summary.push_back(row);
    }
  if (!opt.out.empty()) emit_results(out.summary, opt.out);
  return out;
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  return run_sweep(cfg, receivers(cfg), opt);
}

RunOutput sweep_nbps(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (cfg.nbps_sweep.empty()) throw Error(Errc::configuration, "dsp.bps.nbps_sweep is empty");
  std::vector<Receiver> rxs;
  for (auto comp : cfg.comp)
    for (int h : cfg.nbps_sweep) {
      if (h < 1) throw Error(Errc::configuration, "dsp.bps.nbps_sweep entries must be >= 1");
      rxs.push_back({comp, CprMode::bps, h, "BPS:" + std::to_string(h)});
    }
  auto out = run_sweep(cfg, rxs, opt);
  if (opt.log) {
    std::map<std::tuple<std::string, std::string, std::string>, const ResultRow*> best;
    for (const auto& r : out.summary) {
      auto& b = best[{r.variant, r.n, r.comp}];
      if (std::isfinite(r.gmi_bits) && (!b || r.gmi_bits > b->gmi_bits)) b = &r;
    }
    for (const auto& [k, r] : best)
      if (r)
        *opt.log << "best " << std::get<0>(k) << " N=" << std::get<1>(k) << " " << std::get<2>(k) << ": " << r->cpr
                 << " GMI " << r->gmi_bits << std::endl;
  }
  return out;
}

std::string plot_data(std::span<const ResultRow> rows, std::string_view figure) {
  if (figure != "fig2" && figure != "fig3") throw Error(Errc::configuration, "figure must be fig2 or fig3");
  struct Point {
    double n, gmi, ci, rate;
  };
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<Point>>> curves;
  double n_min = INFINITY, n_max = -INFINITY;
  for (const auto& r : rows) {
    if (!std::isfinite(r.gmi_bits)) continue;
    const double n = r.n == "inf" ? INFINITY : parse_double(r.n, "N");
    if (std::isfinite(n)) {
      n_min = std::min(n_min, n);
      n_max = std::max(n_max, n);
    }
    curves[{r.comp, r.cpr}][r.variant].push_back({n, r.gmi_bits, r.ci95, aggregate_rate(r.gmi_bits)});
  }
  std::string s = "figure,curve,style,comp,cpr,N,gmi_bits,ci95,rate_gbps\n";
  for (auto& [rx, by_variant] : curves) {
    for (auto& [variant, pts] : by_variant) {
      std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.n < b.n; });
      std::string style = variant == "MB" ? "dashed" : variant == "PAS+IL" ? "dotted" : "solid";
      const std::string curve = variant + " " + rx.first + " " + rx.second;
      const auto line = [&](double n, const Point& p) {
        s += std::string(figure) + ',' + curve + ',' + style + ',' + rx.first + ',' + rx.second + ',' + number_text(n) +
             ',' + number_text(p.gmi) + ',' + number_text(p.ci) + ',' + number_text(p.rate) + '\n';
      };
      for (const auto& p : pts) {
        if (std::isfinite(p.n)) {
          line(p.n, p);
        } else if (std::isfinite(n_min)) {
          line(n_min, p);
          line(n_max, p);
        }
      }
    }
  }
  return s;
}

}  // namespace pascpr
