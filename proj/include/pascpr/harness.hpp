#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pascpr/config.hpp"
#include "pascpr/metrics.hpp"
#include "pascpr/shaping.hpp"

namespace pascpr {

/// One source in the sweep: "PAS" (ESS block length n), "MB" (i.i.d.), or
/// "PAS+IL" (ESS blocks interleaved over n amplitudes).
struct Variant {
  std::string kind;
  int n = 0;
  ShapingConfig shaping;
  std::string n_label() const;  // "inf" for MB
};

struct Receiver {
  CompMode comp = CompMode::edc;
  CprMode cpr = CprMode::mpr;
  int half_window = 0;
  std::string cpr_label;  // "MPR", "BPS" or "BPS:<half window>"
};

std::vector<Variant> variants(const ExperimentConfig& cfg);
std::vector<Receiver> receivers(const ExperimentConfig& cfg);

/// One Monte-Carlo realization of the whole chain at one launch power per
/// channel. Returns the SCOI-averaged GMI for each receiver.
std::vector<GmiEstimate> simulate_point(const ExperimentConfig& cfg, const Variant& variant, double power_dbm,
                                        std::uint64_t seed, std::span<const Receiver> rx,
                                        const AmplitudeSource* source = nullptr);

struct ResultRow {
  std::string variant;
  std::string n;
  std::string cpr;
  std::string comp;
  double power_dbm = 0.0;
  double gmi_bits = 0.0;
  double ci95 = 0.0;
  double rate_gbps = 0.0;
  std::uint64_t seed = 0;
  double runtime_s = 0.0;
};

inline constexpr std::string_view kResultsHeader = "variant,N,cpr,comp,power_dbm,gmi_bits,ci95,rate_gbps,seed,runtime_s";

std::string format_results(std::span<const ResultRow> rows);
void emit_results(std::span<const ResultRow> rows, const std::filesystem::path& path);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path out;                  // optimum per sweep point
  std::optional<std::filesystem::path> points;  // per power and seed; default <out>.points.csv
  bool resume = true;
  std::ostream* log = nullptr;
};

struct RunOutput {
  std::vector<ResultRow> summary;
  std::vector<ResultRow> points;
  std::size_t computed_jobs = 0;
  std::size_t reused_jobs = 0;
  std::size_t failed_jobs = 0;
};

std::filesystem::path points_path(const std::filesystem::path& out);

/// Full sweep. Replicate r runs with seed master_seed + r; the summary
/// averages replicates per power and reports the launch-power optimum.
RunOutput run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Same sweep with BPS evaluated for every half window in cfg.nbps_sweep.
RunOutput sweep_nbps(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Per-curve series (x = N, GMI and SCOI rate) for plotting.
std::string plot_data(std::span<const ResultRow> rows, std::string_view figure);

}  // namespace pascpr
