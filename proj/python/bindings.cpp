// Copyright 2026 The isetk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ise/audio.hpp"
#include "ise/calibrate.hpp"
#include "ise/emd.hpp"
#include "ise/enhance.hpp"
#include "ise/metrics.hpp"
#include "ise/pitch.hpp"
#include "ise/types.hpp"

namespace py = pybind11;

namespace {

ise::Waveform to_waveform(const py::array_t<double>& samples, int sample_rate) {
  auto buf = samples.request();
  if (buf.ndim != 1) throw std::invalid_argument("samples must be 1-D");
  const double* data = static_cast<const double*>(buf.ptr);
  return ise::Waveform(std::vector<double>(data, data + buf.shape[0]),
                       sample_rate);
}

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

ise::GainProfile profile_from_object(const py::object& profile) {
  if (py::isinstance<py::str>(profile)) {
    auto p = ise::find_builtin_profile(profile.cast<std::string>());
    if (!p) throw std::invalid_argument("unknown builtin profile");
    return *p;
  }
  ise::GainProfile p;
  p.name = "custom";
  p.gains = profile.cast<std::vector<double>>();
  ise::validate(p);
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "speech intelligibility enhancement toolkit (native core)";

  py::register_exception<ise::pitch_unavailable_error>(m, "PitchUnavailableError");
  py::register_exception<ise::metric_undefined_error>(m, "MetricUndefinedError");
  py::register_exception<ise::degenerate_input_error>(m, "DegenerateInputError");

  m.def(
      "load_wav",
      [](const std::string& path) {
        ise::Waveform w = ise::load_wav(path);
        return py::make_tuple(to_array(w.samples), w.sample_rate);
      },
      py::arg("path"), "Read a 16-bit mono PCM WAV; returns (samples, rate).");

  m.def(
      "save_wav",
      [](const std::string& path, const py::array_t<double>& samples, int rate) {
        return ise::save_wav(path, to_waveform(samples, rate));
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate"),
      "Write a 16-bit mono PCM WAV; returns the peak-normalization scale.");

  m.def(
      "resample",
      [](const py::array_t<double>& samples, int rate, int new_rate) {
        return to_array(ise::resample(to_waveform(samples, rate), new_rate).samples);
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("new_rate"));

  m.def(
      "plan_frames",
      [](const py::array_t<double>& samples, int rate) {
        ise::FramePlan p = ise::plan_frames(to_waveform(samples, rate));
        py::dict d;
        d["frame_length"] = p.frame_length;
        d["hop"] = p.hop;
        d["frame_count"] = p.frame_count;
        return d;
      },
      py::arg("samples"), py::arg("sample_rate"));

  m.def(
      "mix_at_snr",
      [](const py::array_t<double>& speech, int rate,
         const py::array_t<double>& noise, double snr_db,
         unsigned long long seed) {
        ise::MixSpec spec;
        spec.target_snr_db = snr_db;
        spec.noise = to_waveform(noise, rate);
        spec.offset_policy = ise::NoiseOffsetPolicy::random;
        spec.seed = seed;
        ise::MixResult res = ise::mix_at_snr(to_waveform(speech, rate), spec);
        return py::make_tuple(to_array(res.mixed.samples), res.achieved_snr_db);
      },
      py::arg("speech"), py::arg("sample_rate"), py::arg("noise"),
      py::arg("snr_db"), py::arg("seed") = 0,
      "Mix speech with noise at the target global SNR; returns "
      "(mixed, achieved_snr_db).");

  m.def(
      "emd",
      [](const py::array_t<double>& frame) {
        auto buf = frame.request();
        const double* data = static_cast<const double*>(buf.ptr);
        ise::ImfDecomposition dec =
            ise::emd(std::span<const double>(data, buf.shape[0]));
        py::list imfs;
        for (const auto& imf : dec.imfs) imfs.append(to_array(imf));
        return py::make_tuple(imfs, to_array(dec.residual));
      },
      py::arg("frame"), "Plain EMD; returns (imfs, residual).");

  m.def(
      "eemd",
      [](const py::array_t<double>& frame, int ensemble_size,
         double noise_std_ratio, unsigned long long seed) {
        auto buf = frame.request();
        const double* data = static_cast<const double*>(buf.ptr);
        ise::EemdConfig cfg;
        cfg.ensemble_size = ensemble_size;
        cfg.noise_std_ratio = noise_std_ratio;
        cfg.seed = seed;
        ise::ImfDecomposition dec =
            ise::eemd(std::span<const double>(data, buf.shape[0]), cfg);
        py::list imfs;
        for (const auto& imf : dec.imfs) imfs.append(to_array(imf));
        return py::make_tuple(imfs, to_array(dec.residual));
      },
      py::arg("frame"), py::arg("ensemble_size") = 50,
      py::arg("noise_std_ratio") = 0.2, py::arg("seed") = 0);

  m.def(
      "estimate_pitch",
      [](const py::array_t<double>& samples, int rate,
         unsigned long long seed) {
        ise::Waveform w = to_waveform(samples, rate);
        ise::FramePlan plan = ise::plan_frames(w);
        ise::VoicedMask mask = ise::detect_vuv(w, plan);
        ise::EemdConfig cfg;
        cfg.seed = seed;
        ise::PitchTrack track = ise::estimate_pitch_track(w, plan, mask, cfg);
        std::vector<double> f0(track.f0_hz.size());
        for (std::size_t q = 0; q < track.f0_hz.size(); ++q)
          f0[q] = track.f0_hz[q].value_or(std::nan(""));
        return py::make_tuple(to_array(f0), std::vector<bool>(mask.voiced.begin(),
                                                              mask.voiced.end()));
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("seed") = 0,
      "Per-frame F0 (NaN where unvoiced); returns (f0_hz, voiced_mask).");

  m.def(
      "enhance",
      [](const py::array_t<double>& samples, int rate, const py::object& profile,
         unsigned long long seed) {
        ise::EnhancementConfig cfg;
        cfg.profile = profile_from_object(profile);
        cfg.eemd.seed = seed;
        ise::EnhancementResult res =
            ise::enhance_pipeline(to_waveform(samples, rate), std::nullopt, cfg);
        py::dict report;
        report["voiced_frames"] = res.report.voiced_frames;
        report["fallback_frames"] = res.report.fallback_frames;
        report["clamped_frames"] = res.report.clamped_frames;
        report["median_f0_hz"] = res.report.median_f0_hz;
        report["pitch_unavailable"] = res.report.pitch_unavailable;
        report["warnings"] = res.report.warnings;
        return py::make_tuple(to_array(res.output.samples), report);
      },
      py::arg("samples"), py::arg("sample_rate"),
      py::arg("profile") = py::str("ise_asd"), py::arg("seed") = 0,
      "Full harmonic-band enhancement pipeline; returns (samples, report).");

  m.def(
      "estoi",
      [](const py::array_t<double>& clean, const py::array_t<double>& degraded,
         int rate) {
        return ise::estoi(to_waveform(clean, rate), to_waveform(degraded, rate));
      },
      py::arg("clean"), py::arg("degraded"), py::arg("sample_rate"));

  m.def(
      "sti_category",
      [](double score) { return ise::to_string(ise::sti_category(score)); },
      py::arg("score"));

  m.def(
      "one_way_anova",
      [](const std::vector<std::vector<double>>& groups) {
        ise::AnovaResult res = ise::one_way_anova(groups);
        return py::make_tuple(res.f_statistic, res.p_value);
      },
      py::arg("groups"), "Returns (f_statistic, p_value).");

  m.def("profiles", [] {
    py::dict d;
    for (const auto& p : ise::builtin_profiles()) d[p.name.c_str()] = p.gains;
    return d;
  });
}
