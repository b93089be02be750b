#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pascpr/dsp.hpp"
#include "pascpr/fiber.hpp"
#include "pascpr/shaping.hpp"
#include "pascpr/txrx.hpp"

namespace pascpr {

enum class CompMode { edc, dbp };
enum class CprMode { mpr, bps };

std::string to_string(CompMode m);
std::string to_string(CprMode m);
CompMode parse_comp(std::string_view s);
CprMode parse_cpr(std::string_view s);

struct ExperimentConfig {
  // grid
  double baud_rate = 41.67e9;
  double channel_spacing = 75e9;
  int n_channels = 12;
  double rolloff = 0.1;
  double oversampling_guard = 1.125;
  int channel_sps = 4;
  std::vector<int> scoi{4, 5, 6, 7};

  LinkConfig link;

  // shaping sweep
  int alphabet_size = 8;
  double bits_per_amplitude = 2.0;
  std::vector<int> block_lengths{4, 8, 16, 32, 64, 128, 256, 512};
  bool mb_baseline = true;
  std::vector<int> interleaver_spans;
  int interleaver_block_length = 512;
  std::filesystem::path trellis_cache;

  // receiver
  std::vector<CompMode> comp{CompMode::edc, CompMode::dbp};
  std::vector<CprMode> cpr{CprMode::mpr, CprMode::bps};
  int bps_half_window_edc = 24;
  int bps_half_window_dbp = 16;
  int bps_test_angles = 64;
  std::vector<int> nbps_sweep{4, 8, 16, 24, 32, 48, 64, 92, 128};

  std::vector<double> powers_dbm{-1, 0, 1, 2, 3, 4};
  std::size_t n_symbols = 1 << 16;
  std::size_t guard_symbols = 256;
  std::uint64_t master_seed = 1;
  int n_seeds = 1;
  int workers = 1;

  std::filesystem::path phase_track_dir;
  std::filesystem::path waveform_dump_dir;

  GridPlan plan() const;
  BpsConfig bps(CompMode comp) const;
  void validate() const;
};

std::vector<std::string> preset_names();
ExperimentConfig preset(std::string_view name);

/// Overlays a JSON document on `base`. When `use_preset_key` is set, a
/// top-level "preset" key replaces `base` with that preset. Unknown keys and
/// wrong types raise configuration errors naming the key path.
ExperimentConfig config_from_json(std::string_view text, const ExperimentConfig& base = {}, bool use_preset_key = true);
ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base = {},
                             bool use_preset_key = true);
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace pascpr
