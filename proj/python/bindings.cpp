#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flexboc/analysis.hpp"
#include "flexboc/channel.hpp"
#include "flexboc/scenario.hpp"
#include "flexboc/signal.hpp"
#include "flexboc/twoway.hpp"

namespace py = pybind11;
using namespace flexboc;

PYBIND11_MODULE(_flexboc, m) {
    m.doc() = "FlexBOC two-way time transfer simulator";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<FlexBocConfig>(m, "FlexBocConfig")
        .def(py::init<>())
        .def_readwrite("f_if", &FlexBocConfig::f_if)
        .def_readwrite("f_sc", &FlexBocConfig::f_sc)
        .def_readwrite("chip_rate", &FlexBocConfig::chip_rate)
        .def_readwrite("code_len", &FlexBocConfig::code_len)
        .def_readwrite("sample_rate", &FlexBocConfig::sample_rate)
        .def_readwrite("amplitude", &FlexBocConfig::amplitude)
        .def("epoch_period", &FlexBocConfig::epoch_period)
        .def("samples_per_epoch", &FlexBocConfig::samples_per_epoch)
        .def("validate", &FlexBocConfig::validate);

    py::class_<PnCode>(m, "PnCode")
        .def_readonly("chips", &PnCode::chips)
        .def("length", &PnCode::length);

    py::class_<Waveform>(m, "Waveform")
        .def_readonly("samples", &Waveform::samples)
        .def_readonly("sample_rate", &Waveform::sample_rate)
        .def_readonly("t0_fs", &Waveform::t0_fs)
        .def("duration", &Waveform::duration);

    py::class_<LinkModel>(m, "LinkModel")
        .def(py::init<>())
        .def_readwrite("base_delay_s", &LinkModel::base_delay_s)
        .def_readwrite("attenuation_db", &LinkModel::attenuation_db)
        .def_readwrite("noise_psd", &LinkModel::noise_psd)
        .def_readwrite("reciprocal", &LinkModel::reciprocal)
        .def_readwrite("asymmetry_ps", &LinkModel::asymmetry_ps)
        .def_readwrite("turb_sigma_ps", &LinkModel::turb_sigma_ps)
        .def_readwrite("turb_corr_s", &LinkModel::turb_corr_s);

    py::class_<SiteClock>(m, "SiteClock")
        .def(py::init<>())
        .def_readwrite("offset_fs", &SiteClock::offset_fs)
        .def_readwrite("drift", &SiteClock::drift)
        .def_readwrite("white_pm_sigma_ps", &SiteClock::white_pm_sigma_ps)
        .def_readwrite("reference", &SiteClock::reference);

    py::class_<CalibrationSet>(m, "CalibrationSet")
        .def(py::init<>())
        .def_readwrite("tau_tx_a_ps", &CalibrationSet::tau_tx_a_ps)
        .def_readwrite("tau_rx_a_ps", &CalibrationSet::tau_rx_a_ps)
        .def_readwrite("tau_tx_b_ps", &CalibrationSet::tau_tx_b_ps)
        .def_readwrite("tau_rx_b_ps", &CalibrationSet::tau_rx_b_ps);

    py::class_<JitterModel>(m, "JitterModel")
        .def(py::init<>())
        .def_readwrite("sigma_ps", &JitterModel::sigma_ps)
        .def_readwrite("cn0_db_hz", &JitterModel::cn0_db_hz)
        .def_readwrite("random_walk_ps", &JitterModel::random_walk_ps);

    py::class_<ClockDiffSeries>(m, "ClockDiffSeries")
        .def_readonly("epoch_period_s", &ClockDiffSeries::epoch_period_s)
        .def_readonly("epoch_index", &ClockDiffSeries::epoch_index)
        .def_readonly("delta_t_fs", &ClockDiffSeries::delta_t_fs)
        .def("delta_t_sec", &ClockDiffSeries::delta_t_sec)
        .def("__len__", &ClockDiffSeries::size);

    py::class_<StabilityCurve>(m, "StabilityCurve")
        .def_readonly("tau_s", &StabilityCurve::tau_s)
        .def_readonly("value", &StabilityCurve::value)
        .def_readonly("count", &StabilityCurve::count);

    py::class_<Spectrum>(m, "Spectrum")
        .def_readonly("freq_hz", &Spectrum::freq_hz)
        .def_readonly("power", &Spectrum::power)
        .def_readonly("resolution_bw", &Spectrum::resolution_bw);

    py::class_<AutocorrResult>(m, "AutocorrResult")
        .def_readonly("lag_s", &AutocorrResult::lag_s)
        .def_readonly("corr", &AutocorrResult::corr);

    py::class_<RunReport>(m, "RunReport")
        .def_readonly("artifacts", &RunReport::artifacts)
        .def_readonly("summary", &RunReport::summary);

    m.def("gen_pn_code", &gen_pn_code, py::arg("config"), py::arg("seed"));
    m.def(
        "synth_flexboc",
        [](const FlexBocConfig& c, const PnCode& code, double duration) {
            return synth_flexboc(c, code, {}, 0, duration);
        },
        py::arg("config"), py::arg("code"), py::arg("duration"));
    m.def("jitter_sigma_ps", &jitter_sigma_ps, py::arg("cn0_db_hz"),
          py::arg("f_sc") = 10e6, py::arg("t_int") = 1e-3,
          py::arg("anchor_cn0_db_hz") = 80.0, py::arg("anchor_sigma_ps") = 0.8);
    m.def("run_exchange_measurement_level", &run_exchange_measurement_level,
          py::arg("clock_a"), py::arg("clock_b"), py::arg("link"), py::arg("cal"),
          py::arg("n_epochs"), py::arg("epoch_period_s"), py::arg("jitter"),
          py::arg("seed"), py::arg("path_asym_fs") = 0);
    m.def(
        "mdev",
        [](const std::vector<double>& x, double tau0) {
            return mdev(x, tau0, default_m_ladder(x.size()));
        },
        py::arg("x"), py::arg("tau0"));
    m.def(
        "tdev",
        [](const std::vector<double>& x, double tau0) {
            return tdev(x, tau0, default_m_ladder(x.size()));
        },
        py::arg("x"), py::arg("tau0"));
    m.def(
        "spectrum",
        [](const std::vector<double>& samples, double fs, double rbw) {
            return spectrum(samples, fs, rbw);
        },
        py::arg("samples"), py::arg("sample_rate"), py::arg("resolution_bw"));
    m.def(
        "autocorr",
        [](const std::vector<double>& samples, double fs, double max_lag) {
            return autocorr(samples, fs, max_lag);
        },
        py::arg("samples"), py::arg("sample_rate"), py::arg("max_lag_s"));
    m.def(
        "effective_bandwidth",
        [](const Spectrum& s) { return effective_bandwidth(s, BandwidthMethod::FundamentalLobe); },
        py::arg("spectrum"));
    m.def("bundled_scenario_names", &bundled_scenario_names);
    m.def(
        "run_scenario",
        [](const std::string& path, const std::string& out_dir, std::int64_t seed) {
            Scenario s = load_scenario(path);
            if (seed >= 0) s.seed = static_cast<std::uint64_t>(seed);
            return run_scenario(s, out_dir);
        },
        py::arg("path"), py::arg("out_dir"), py::arg("seed") = -1);
}
