#include "pascpr/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "pascpr/error.hpp"

namespace pascpr {

using nlohmann::json;

std::string to_string(CompMode m) { return m == CompMode::edc ? "EDC" : "DBP"; }
std::string to_string(CprMode m) { return m == CprMode::mpr ? "MPR" : "BPS"; }

CompMode parse_comp(std::string_view s) {
  if (s == "EDC") return CompMode::edc;
  if (s == "DBP") return CompMode::dbp;
  throw Error(Errc::configuration, "unknown compensation mode '" + std::string(s) + "' (EDC or DBP)");
}

CprMode parse_cpr(std::string_view s) {
  if (s == "MPR") return CprMode::mpr;
  if (s == "BPS") return CprMode::bps;
  throw Error(Errc::configuration, "unknown phase recovery mode '" + std::string(s) + "' (MPR or BPS)");
}

GridPlan ExperimentConfig::plan() const {
  return GridPlan::make(baud_rate, channel_spacing, n_channels, oversampling_guard, channel_sps);
}

BpsConfig ExperimentConfig::bps(CompMode c) const {
  BpsConfig b;
  b.half_window = c == CompMode::edc ? bps_half_window_edc : bps_half_window_dbp;
  b.n_test_angles = bps_test_angles;
  return b;
}

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& m) { throw Error(Errc::configuration, m); };
  if (!(baud_rate > 0) || !(channel_spacing > 0)) fail("grid rates must be positive");
  if (n_channels < 1) fail("grid.n_channels must be >= 1");
  if (!(rolloff > 0 && rolloff <= 1)) fail("grid.rolloff must lie in (0, 1]");
  if (baud_rate * (1 + rolloff) > channel_spacing) fail("grid.rolloff: channel spectrum exceeds the spacing");
  plan().validate(oversampling_guard);
  if (scoi.empty()) fail("grid.scoi must name at least one channel");
  for (int c : scoi)
    if (c < 0 || c >= n_channels) fail("grid.scoi index " + std::to_string(c) + " outside the grid");
  link.validate();
  if (alphabet_size < 2 || (alphabet_size & (alphabet_size - 1))) fail("shaping.alphabet_size must be a power of two");
  if (!(bits_per_amplitude > 0) || bits_per_amplitude > std::log2(alphabet_size))
    fail("shaping.bits_per_amplitude must lie in (0, log2 M]");
  if (block_lengths.empty() && !mb_baseline && interleaver_spans.empty()) fail("shaping sweep is empty");
  const std::size_t amplitudes = 4 * n_symbols;
  const auto check_block = [&](int n, const std::string& what) {
    if (n < 1) fail(what + " must be >= 1");
    const double k = bits_per_amplitude * n;
    if (std::abs(k - std::round(k)) > 1e-9)
      fail(what + " " + std::to_string(n) + ": bits_per_amplitude * N is not an integer");
    if (amplitudes % static_cast<std::size_t>(n) != 0)
      fail(what + " " + std::to_string(n) + " does not divide 4 * n_symbols");
  };
  for (int n : block_lengths) check_block(n, "shaping.block_lengths entry");
  if (!interleaver_spans.empty()) check_block(interleaver_block_length, "shaping.interleaver_block_length");
  for (int s : interleaver_spans) {
    check_block(s, "shaping.interleaver_spans entry");
    if (s % interleaver_block_length != 0) fail("shaping.interleaver_spans entries must be multiples of the block length");
  }
  if (comp.empty() || cpr.empty()) fail("dsp.comp and dsp.cpr must be nonempty");
  bps(CompMode::edc).validate();
  bps(CompMode::dbp).validate();
  if (powers_dbm.size() < 3) fail("powers_dbm needs at least 3 points");
  for (std::size_t i = 1; i < powers_dbm.size(); ++i)
    if (!(powers_dbm[i] > powers_dbm[i - 1])) fail("powers_dbm must be strictly increasing");
  if (n_symbols < 2 * guard_symbols + 1000) fail("n_symbols must exceed 2 * guard_symbols + 1000");
  if (n_seeds < 1) fail("n_seeds must be >= 1");
  if (workers < 1) fail("workers must be >= 1");
}

std::vector<std::string> preset_names() { return {"fig2_desk", "fig3_desk", "fig2_full", "fig3_full", "backtoback"}; }

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.link.step = {0.1, 1e-3};
  if (name == "fig2_full" || name == "fig3_full") {
    c.interleaver_spans = {1024, 2048, 4096, 8192, 16384};
    c.link.n_spans = name == "fig2_full" ? 15 : 27;
    if (name == "fig3_full") {
      c.bps_half_window_edc = c.bps_half_window_dbp = 92;
      c.powers_dbm = {-2, -1, 0, 1, 2, 3};
    }
    c.n_seeds = 1;
    return c;
  }
  if (name == "fig2_desk" || name == "fig3_desk") {
    c.n_channels = 3;
    c.scoi = {1};
    c.link.n_spans = name == "fig2_desk" ? 8 : 14;
    c.link.step = {0.0, 1e-3};
    c.block_lengths = {8, 32, 128, 512};
    c.n_symbols = 1 << 15;
    c.guard_symbols = 128;
    c.powers_dbm = {-2, -1, 0, 1, 2, 3, 4};
    c.n_seeds = 5;
    if (name == "fig3_desk") {
      c.powers_dbm = {-2, -1, 0, 1, 2, 3};
      c.bps_half_window_edc = c.bps_half_window_dbp = 92;
    }
    return c;
  }
  if (name == "backtoback") {
    c.n_channels = 3;
    c.scoi = {1};
    c.link.n_spans = 0;
    c.link.noiseless = true;
    c.block_lengths = {4, 16, 64, 256};
    c.comp = {CompMode::edc};
    c.cpr = {CprMode::mpr};
    c.powers_dbm = {-1, 0, 1};
    c.n_symbols = 1 << 13;
    c.guard_symbols = 64;
    return c;
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw Error(Errc::configuration, "unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

namespace {

using Handler = std::function<void(const json&, const std::string&)>;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(Errc::configuration, "config key '" + path + "': " + what);
}

void walk(const json& obj, const std::string& path, const std::map<std::string, Handler>& handlers) {
  if (!obj.is_object()) bad(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    const std::string p = path.empty() ? key : path + "." + key;
    auto it = handlers.find(key);
    if (it == handlers.end()) bad(p, "unknown key");
    it->second(value, p);
  }
}

double number(const json& v, const std::string& p) {
  if (!v.is_number()) bad(p, "expected a number");
  return v.get<double>();
}

long long integer(const json& v, const std::string& p) {
  if (!v.is_number_integer()) bad(p, "expected an integer");
  return v.get<long long>();
}

bool boolean(const json& v, const std::string& p) {
  if (!v.is_boolean()) bad(p, "expected true or false");
  return v.get<bool>();
}

std::string text(const json& v, const std::string& p) {
  if (!v.is_string()) bad(p, "expected a string");
  return v.get<std::string>();
}

template <class T, class F>
std::vector<T> list(const json& v, const std::string& p, F item) {
  if (!v.is_array()) bad(p, "expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(item(v[i], p + "[" + std::to_string(i) + "]"));
  return out;
}

int as_int(const json& v, const std::string& p) { return static_cast<int>(integer(v, p)); }

template <class T>
Handler set_num(T& field, double scale = 1.0) {
  return [&field, scale](const json& v, const std::string& p) { field = static_cast<T>(number(v, p) * scale); };
}

template <class T>
Handler set_int(T& field) {
  return [&field](const json& v, const std::string& p) {
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned()) {
        field = static_cast<T>(v.get<std::uint64_t>());
        return;
      }
      if (integer(v, p) < 0) bad(p, "must be >= 0");
    }
    field = static_cast<T>(integer(v, p));
  };
}

void overlay(const json& doc, ExperimentConfig& c) {
  walk(doc, "",
       {
           {"preset", [](const json& v, const std::string& p) { (void)text(v, p); }},
           {"grid",
            [&c](const json& v, const std::string& p) {
              walk(v, p,
                   {{"baud_rate_gbd", set_num(c.baud_rate, 1e9)},
                    {"channel_spacing_ghz", set_num(c.channel_spacing, 1e9)},
                    {"n_channels", set_int(c.n_channels)},
                    {"rolloff", set_num(c.rolloff)},
                    {"oversampling_guard", set_num(c.oversampling_guard)},
                    {"channel_sps", set_int(c.channel_sps)},
                    {"scoi", [&c](const json& x, const std::string& q) { c.scoi = list<int>(x, q, as_int); }}});
            }},
           {"link",
            [&c](const json& v, const std::string& p) {
              auto& l = c.link;
              walk(v, p,
                   {{"n_spans", set_int(l.n_spans)},
                    {"span_length_km", set_num(l.span.length_km)},
                    {"dispersion_ps_nm_km", set_num(l.span.dispersion_ps_nm_km)},
                    {"gamma_per_w_km", set_num(l.span.gamma_per_w_km)},
                    {"alpha_db_km", set_num(l.span.alpha_db_km)},
                    {"wavelength_nm", set_num(l.span.wavelength_nm)},
                    {"reference_frequency_thz", set_num(l.reference_frequency, 1e12)},
                    {"edfa_noise_figure_db", set_num(l.edfa_noise_figure_db)},
                    {"noiseless", [&l](const json& x, const std::string& q) { l.noiseless = boolean(x, q); }},
                    {"step", [&l](const json& x, const std::string& q) {
                       walk(x, q,
                            {{"fixed_km", set_num(l.step.fixed_step_km)},
                             {"max_nonlinear_phase_rad", set_num(l.step.max_nonlinear_phase)}});
                     }}});
            }},
           {"shaping",
            [&c](const json& v, const std::string& p) {
              walk(v, p,
                   {{"alphabet_size", set_int(c.alphabet_size)},
                    {"bits_per_amplitude", set_num(c.bits_per_amplitude)},
                    {"block_lengths",
                     [&c](const json& x, const std::string& q) { c.block_lengths = list<int>(x, q, as_int); }},
                    {"mb_baseline", [&c](const json& x, const std::string& q) { c.mb_baseline = boolean(x, q); }},
                    {"interleaver_spans",
                     [&c](const json& x, const std::string& q) { c.interleaver_spans = list<int>(x, q, as_int); }},
                    {"interleaver_block_length", set_int(c.interleaver_block_length)},
                    {"trellis_cache", [&c](const json& x, const std::string& q) { c.trellis_cache = text(x, q); }}});
            }},
           {"dsp",
            [&c](const json& v, const std::string& p) {
              walk(v, p,
                   {{"comp",
                     [&c](const json& x, const std::string& q) {
                       c.comp = list<CompMode>(x, q, [](const json& y, const std::string& r) {
                         try {
                           return parse_comp(text(y, r));
                         } catch (const Error& e) {
                           bad(r, e.what());
                         }
                       });
                     }},
                    {"cpr",
                     [&c](const json& x, const std::string& q) {
                       c.cpr = list<CprMode>(x, q, [](const json& y, const std::string& r) {
                         try {
                           return parse_cpr(text(y, r));
                         } catch (const Error& e) {
                           bad(r, e.what());
                         }
                       });
                     }},
                    {"bps", [&c](const json& x, const std::string& q) {
                       walk(x, q,
                            {{"half_window_edc", set_int(c.bps_half_window_edc)},
                             {"half_window_dbp", set_int(c.bps_half_window_dbp)},
                             {"n_test_angles", set_int(c.bps_test_angles)},
                             {"nbps_sweep",
                              [&c](const json& y, const std::string& r) { c.nbps_sweep = list<int>(y, r, as_int); }}});
                     }}});
            }},
           {"powers_dbm",
            [&c](const json& v, const std::string& p) { c.powers_dbm = list<double>(v, p, number); }},
           {"n_symbols", set_int(c.n_symbols)},
           {"guard_symbols", set_int(c.guard_symbols)},
           {"master_seed", set_int(c.master_seed)},
           {"n_seeds", set_int(c.n_seeds)},
           {"workers", set_int(c.workers)},
           {"phase_track_dir", [&c](const json& v, const std::string& p) { c.phase_track_dir = text(v, p); }},
           {"waveform_dump_dir", [&c](const json& v, const std::string& p) { c.waveform_dump_dir = text(v, p); }},
       });
}

}  // namespace

ExperimentConfig config_from_json(std::string_view text_in, const ExperimentConfig& base, bool use_preset_key) {
  json doc;
  try {
    doc = json::parse(text_in.begin(), text_in.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(Errc::configuration, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = base;
  if (use_preset_key && doc.is_object() && doc.contains("preset")) c = preset(text(doc["preset"], "preset"));
  overlay(doc, c);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base, bool use_preset_key) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str(), base, use_preset_key);
}

std::string config_to_json(const ExperimentConfig& c) {
  json comp = json::array(), cpr = json::array();
  for (auto m : c.comp) comp.push_back(to_string(m));
  for (auto m : c.cpr) cpr.push_back(to_string(m));
  const auto& l = c.link;
  json doc = {
      {"grid",
       {{"baud_rate_gbd", c.baud_rate / 1e9},
        {"channel_spacing_ghz", c.channel_spacing / 1e9},
        {"n_channels", c.n_channels},
        {"rolloff", c.rolloff},
        {"oversampling_guard", c.oversampling_guard},
        {"channel_sps", c.channel_sps},
        {"scoi", c.scoi}}},
      {"link",
       {{"n_spans", l.n_spans},
        {"span_length_km", l.span.length_km},
        {"dispersion_ps_nm_km", l.span.dispersion_ps_nm_km},
        {"gamma_per_w_km", l.span.gamma_per_w_km},
        {"alpha_db_km", l.span.alpha_db_km},
        {"wavelength_nm", l.span.wavelength_nm},
        {"reference_frequency_thz", l.reference_frequency / 1e12},
        {"edfa_noise_figure_db", l.edfa_noise_figure_db},
        {"noiseless", l.noiseless},
        {"step", {{"fixed_km", l.step.fixed_step_km}, {"max_nonlinear_phase_rad", l.step.max_nonlinear_phase}}}}},
      {"shaping",
       {{"alphabet_size", c.alphabet_size},
        {"bits_per_amplitude", c.bits_per_amplitude},
        {"block_lengths", c.block_lengths},
        {"mb_baseline", c.mb_baseline},
        {"interleaver_spans", c.interleaver_spans},
        {"interleaver_block_length", c.interleaver_block_length},
        {"trellis_cache", c.trellis_cache.string()}}},
      {"dsp",
       {{"comp", comp},
        {"cpr", cpr},
        {"bps",
         {{"half_window_edc", c.bps_half_window_edc},
          {"half_window_dbp", c.bps_half_window_dbp},
          {"n_test_angles", c.bps_test_angles},
          {"nbps_sweep", c.nbps_sweep}}}}},
      {"powers_dbm", c.powers_dbm},
      {"n_symbols", c.n_symbols},
      {"guard_symbols", c.guard_symbols},
      {"master_seed", c.master_seed},
      {"n_seeds", c.n_seeds},
      {"workers", c.workers},
      {"phase_track_dir", c.phase_track_dir.string()},
      {"waveform_dump_dir", c.waveform_dump_dir.string()},
  };
  return doc.dump(2) + "\n";
}

}  // namespace pascpr
