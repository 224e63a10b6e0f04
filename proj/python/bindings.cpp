#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "meetbrain/analysis.hpp"
#include "meetbrain/audio.hpp"
#include "meetbrain/audio_features.hpp"
#include "meetbrain/config.hpp"
#include "meetbrain/error.hpp"
#include "meetbrain/pipeline.hpp"
#include "meetbrain/promptgen.hpp"
#include "meetbrain/screening.hpp"
#include "meetbrain/sigproc.hpp"
#include "meetbrain/stats.hpp"

namespace py = pybind11;
using namespace meetbrain;

namespace {

Quadrant quadrant_arg(const std::string& s) { return quadrant_from_string(s); }

PipelineConfig config_arg(const std::string& json_text) {
  return json_text.empty() ? PipelineConfig{} : PipelineConfig::from_json(nlohmann::json::parse(json_text));
}

AudioClip clip_arg(std::vector<double> samples, double sample_rate) { return {std::move(samples), sample_rate}; }

sigproc::EegEpoch epoch_arg(std::vector<double> ch0, std::vector<double> ch1) {
  sigproc::EegEpoch e;
  e.data[0] = std::move(ch0);
  e.data[1] = std::move(ch1);
  return e;
}

}  // namespace

PYBIND11_MODULE(_meetbrain, m) {
  static py::exception<Error> error(m, "MeetBrainError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("default_config", [] { return PipelineConfig{}.to_json().dump(); });
  m.def("validate_config", [](const std::string& text) { return config_arg(text).to_json().dump(); });

  // screening
  m.def("select_clip", [](double v, double a, int n_raters, const std::string& q) {
    return screening::select_clip({"clip", v, a, n_raters}, quadrant_arg(q));
  }, py::arg("valence"), py::arg("arousal"), py::arg("n_raters"), py::arg("quadrant"));
  m.def("technical_screen", [](std::vector<double> samples, double fs) {
    const auto r = screening::technical_screen(clip_arg(std::move(samples), fs));
    return std::pair{r.pass, r.reason};
  }, py::arg("samples"), py::arg("sample_rate"));

  // labels
  m.def("derive_label", [](int valence, int arousal, int liking, const std::string& music) {
    const auto l = analysis::derive_label({valence, arousal, liking}, quadrant_arg(music));
    return py::dict(py::arg("quadrant") = std::string(to_string(l.quadrant)), py::arg("valence_high") = l.valence_high,
                    py::arg("arousal_high") = l.arousal_high, py::arg("source") = std::string(to_string(l.source)));
  }, py::arg("valence"), py::arg("arousal"), py::arg("liking"), py::arg("music_quadrant"));

  // signal processing
  m.def("bandpass", [](std::vector<double> x, double lo, double hi, double fs) {
    return sigproc::bandpass(x, lo, hi, fs);
  }, py::arg("x"), py::arg("lo"), py::arg("hi"), py::arg("fs"));
  m.def("mbll_forward", [](double hbo, double hbr) {
    return sigproc::mbll_forward(hbo, hbr, sigproc::OpticalConstants{});
  }, py::arg("dhbo_um"), py::arg("dhbr_um"));
  m.def("mbll_inverse", [](double od0, double od1) {
    sigproc::OpticalDensity od;
    od.timestamps_ms = {0.0};
    for (auto& ch : od.od) ch = {std::vector<double>{od0}, std::vector<double>{od1}};
    const auto h = sigproc::mbll(od, sigproc::OpticalConstants{});
    return std::pair{h.hbo[0][0], h.hbr[0][0]};
  }, py::arg("od_wavelength0"), py::arg("od_wavelength1"));
  m.def("relative_band_power", [](std::vector<double> ch0, std::vector<double> ch1) {
    return analysis::relative_band_power(epoch_arg(std::move(ch0), std::move(ch1)));
  }, py::arg("ch0"), py::arg("ch1"));

  // statistics
  m.def("one_way_anova", [](const std::vector<std::vector<double>>& g) {
    const auto r = stats::one_way_anova(g);
    return py::dict(py::arg("f") = r.f, py::arg("p") = r.p, py::arg("df_between") = r.df_between,
                    py::arg("df_within") = r.df_within);
  }, py::arg("groups"));
  m.def("tukey_hsd", [](const std::vector<std::vector<double>>& g) {
    py::list out;
    for (const auto& t : stats::tukey_hsd(g))
      out.append(py::dict(py::arg("i") = t.i, py::arg("j") = t.j, py::arg("diff") = t.diff, py::arg("q") = t.q,
                          py::arg("p") = t.p, py::arg("significant") = t.significant));
    return out;
  }, py::arg("groups"));
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) {
    const auto r = stats::pearson(x, y);
    return std::pair{r.r, r.p};
  }, py::arg("x"), py::arg("y"));

  // audio features
  m.def("read_wav", [](const std::filesystem::path& p) {
    auto c = read_wav(p);
    return std::pair{std::move(c.samples), c.sample_rate};
  }, py::arg("path"));
  m.def("estimate_tempo", [](std::vector<double> s, double fs) {
    return audio_features::estimate_tempo(clip_arg(std::move(s), fs)).bpm;
  }, py::arg("samples"), py::arg("sample_rate"));
  m.def("detect_mode", [](std::vector<double> s, double fs) {
    const auto r = audio_features::detect_mode(clip_arg(std::move(s), fs));
    return std::pair{std::string(to_string(r.mode)), r.mode_raw};
  }, py::arg("samples"), py::arg("sample_rate"));
  m.def("pitch_range", [](std::vector<double> s, double fs) {
    return audio_features::pitch_range(clip_arg(std::move(s), fs)).semitones;
  }, py::arg("samples"), py::arg("sample_rate"));
  m.def("melodic_direction", [](std::vector<double> s, double fs) {
    return audio_features::melodic_direction(clip_arg(std::move(s), fs)).value;
  }, py::arg("samples"), py::arg("sample_rate"));
  m.def("scale_to_range", &audio_features::scale_to_range, py::arg("values"));

  // prompts
  m.def("enumerate_prompts", [](const std::string& q, std::size_t count, std::uint64_t seed) {
    std::vector<std::string> out;
    for (const auto& p : promptgen::enumerate_prompts(promptgen::PromptLexicon::builtin(), quadrant_arg(q), count, seed))
      out.push_back(p.rendered);
    return out;
  }, py::arg("quadrant"), py::arg("count"), py::arg("seed") = 0);

  // pipeline stages; config is JSON text, empty for defaults
  m.def("simulate", [](int subjects, const std::filesystem::path& out, const std::string& cfg, unsigned jobs) {
    return pipeline::simulate(config_arg(cfg), subjects, out, jobs).participants;
  }, py::arg("subjects"), py::arg("out_dir"), py::arg("config") = "", py::arg("jobs") = 0);
  m.def("preprocess", [](const std::filesystem::path& in, const std::filesystem::path& out, const std::string& cfg,
                         unsigned jobs) { return pipeline::preprocess(in, out, config_arg(cfg), jobs).sessions; },
        py::arg("input"), py::arg("out_dir"), py::arg("config") = "", py::arg("jobs") = 0);
  m.def("analyze", [](const std::filesystem::path& in, const std::filesystem::path& out, const std::string& cfg,
                      unsigned jobs) { return pipeline::analyze(in, out, config_arg(cfg), jobs).rows.size(); },
        py::arg("input"), py::arg("out_dir"), py::arg("config") = "", py::arg("jobs") = 0);
  m.def("classify", [](const std::filesystem::path& features, const std::filesystem::path& out, const std::string& cfg,
                       unsigned jobs) { return pipeline::classify(features, out, config_arg(cfg), jobs).to_json().dump(); },
        py::arg("features"), py::arg("out_dir"), py::arg("config") = "", py::arg("jobs") = 0);
}
