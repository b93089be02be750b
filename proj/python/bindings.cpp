#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pascpr/config.hpp"
#include "pascpr/ess.hpp"
#include "pascpr/error.hpp"
#include "pascpr/harness.hpp"
#include "pascpr/metrics.hpp"
#include "pascpr/shaping.hpp"

namespace py = pybind11;
using namespace pascpr;

namespace {

struct Ess {
  Ess(int m, int n, int k) : alphabet(AmplitudeAlphabet::odd(m)), trellis(build_trellis_for_rate(alphabet, n, k)), k(k) {
    stats = ess_output_statistics(trellis, k);
  }
  AmplitudeAlphabet alphabet;
  EssTrellis trellis;
  int k;
  EssOutputStatistics stats;

  double rate_loss() const {
    const auto mb = mb_fit_energy(alphabet, stats.mean_energy);
    return entropy_bits(mb.pmf) - static_cast<double>(k) / trellis.block_length();
  }
};

py::dict row_dict(const ResultRow& r) {
  py::dict d;
  d["variant"] = r.variant;
  d["N"] = r.n;
  d["cpr"] = r.cpr;
  d["comp"] = r.comp;
  d["power_dbm"] = r.power_dbm;
  d["gmi_bits"] = r.gmi_bits;
  d["ci95"] = r.ci95;
  d["rate_gbps"] = r.rate_gbps;
  d["seed"] = r.seed;
  d["runtime_s"] = r.runtime_s;
  return d;
}

py::list rows_list(const std::vector<ResultRow>& rows) {
  py::list l;
  for (const auto& r : rows) l.append(row_dict(r));
  return l;
}

ExperimentConfig parse(const std::string& text) { return config_from_json(text); }

}  // namespace

PYBIND11_MODULE(_pascpr, m) {
  m.doc() = "PAS / carrier phase recovery WDM simulator";
  py::register_exception<Error>(m, "PascprError", PyExc_RuntimeError);

  py::class_<Ess>(m, "Ess")
      .def(py::init<int, int, int>(), py::arg("alphabet_size"), py::arg("block_length"), py::arg("bits"))
      .def_property_readonly("max_energy", [](const Ess& e) { return e.trellis.max_energy(); })
      .def_property_readonly("block_length", [](const Ess& e) { return e.trellis.block_length(); })
      .def_property_readonly("mean_energy", [](const Ess& e) { return e.stats.mean_energy; })
      .def_property_readonly("pmf", [](const Ess& e) { return e.stats.pmf; })
      .def("rate_loss", &Ess::rate_loss)
      .def("count", [](const Ess& e, long energy) { return e.trellis.count(e.trellis.block_length(), energy).get_str(); },
           "number of sequences with energy <= bound, as a decimal string")
      .def("encode", [](const Ess& e, const std::vector<std::uint8_t>& bits) { return ess_encode(bits, e.trellis); })
      .def("decode", [](const Ess& e, const std::vector<int>& seq) { return ess_decode(seq, e.trellis, e.k); });

  m.def("entropy_bits", [](const std::vector<double>& pmf) { return entropy_bits(pmf); });
  m.def(
      "mb_fit",
      [](int alphabet_size, double entropy) {
        auto p = mb_fit(AmplitudeAlphabet::odd(alphabet_size), entropy);
        return py::make_tuple(p.lambda, p.pmf);
      },
      py::arg("alphabet_size"), py::arg("entropy"));
  m.def("aggregate_rate", [](double gmi) { return aggregate_rate(gmi); }, py::arg("gmi"));

  m.def("preset_names", &preset_names);
  m.def("preset", [](const std::string& name) { return config_to_json(preset(name)); }, py::arg("name"),
        "resolved preset as a JSON document");
  m.def("resolve_config", [](const std::string& text) { return config_to_json(parse(text)); }, py::arg("config"));
  m.def(
      "simulate_point",
      [](const std::string& config, std::size_t variant, double power_dbm, std::uint64_t seed) {
        const auto cfg = parse(config);
        const auto vars = variants(cfg);
        if (variant >= vars.size()) throw py::index_error("variant index out of range");
        const auto rx = receivers(cfg);
        std::vector<GmiEstimate> est;
        {
          py::gil_scoped_release release;
          est = simulate_point(cfg, vars[variant], power_dbm, seed, rx);
        }
        py::list out;
        for (std::size_t i = 0; i < rx.size(); ++i) {
          py::dict d;
          d["variant"] = vars[variant].kind;
          d["N"] = vars[variant].n_label();
          d["comp"] = to_string(rx[i].comp);
          d["cpr"] = rx[i].cpr_label;
          d["gmi_bits"] = est[i].gmi;
          d["ci95"] = est[i].ci95;
          d["n_symbols"] = est[i].n_symbols;
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("variant"), py::arg("power_dbm"), py::arg("seed"));
  m.def(
      "run",
      [](const std::string& config, const std::string& out, bool resume) {
        const auto cfg = parse(config);
        RunOptions opt;
        opt.out = out;
        opt.resume = resume;
        RunOutput res;
        {
          py::gil_scoped_release release;
          res = run_experiment(cfg, opt);
        }
        return rows_list(res.summary);
      },
      py::arg("config"), py::arg("out") = "", py::arg("resume") = true);
  m.def("read_results", [](const std::filesystem::path& p) { return rows_list(read_results(p)); });
  m.def(
      "plot_data", [](const std::filesystem::path& p, const std::string& figure) { return plot_data(read_results(p), figure); },
      py::arg("path"), py::arg("figure"));
}
