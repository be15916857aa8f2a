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

#include <doctest.h>

#include <cmath>
#include <random>

#include "ise/enhance.hpp"
#include "synth.hpp"

using namespace ise;

namespace {

constexpr int kFs = 16000;

std::vector<double> random_frame(std::size_t n, unsigned long long seed) {
  std::vector<double> x(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.4, 0.4);
  for (auto& v : x) v = dist(rng);
  return x;
}

}  // namespace

TEST_SUITE_BEGIN("enhance");

TEST_CASE("builtin profiles carry the published gain sets") {
  auto ise_asd = find_builtin_profile("ise_asd");
  REQUIRE(ise_asd.has_value());
  const std::vector<double> expected_ise = {10.0, 10.0, 4.5,  3.5, 2.5,
                                            2.0,  1.75, 1.75, 1.5, 1.25};
  CHECK(ise_asd->gains == expected_ise);
  CHECK(ise_asd->gains[2] == 4.5);  // G_3

  auto gtf = find_builtin_profile("gtf_f0");
  REQUIRE(gtf.has_value());
  const std::vector<double> expected_gtf = {5.0, 5.0, 4.0, 2.5};
  CHECK(gtf->gains == expected_gtf);
  CHECK(gtf->gains[3] == 2.5);  // G_4

  auto unit = find_builtin_profile("unit");
  REQUIRE(unit.has_value());
  REQUIRE(unit->filter_count() == 10);
  for (double g : unit->gains) CHECK(g == 1.0);

  CHECK_FALSE(find_builtin_profile("nope").has_value());
  for (const auto& p : builtin_profiles()) CHECK_NOTHROW(validate(p));
}

TEST_CASE("profile validation enforces bounds and grid") {
  GainProfile bad{.name = "bad", .gains = {0.5}};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.gains = {11.0};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.gains = {1.3};  // off the 0.25 grid
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.gains = {};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("unit profile reproduces the frame") {
  for (unsigned long long seed = 0; seed < 5; ++seed) {
    auto frame = random_frame(512, seed);
    const double f0 = 80.0 + 40.0 * seed;
    auto res = enhance_frame(frame, f0, unit_profile(10), kFs);
    double max_in = 0.0, max_err = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      max_err = std::max(max_err, std::abs(res.samples[i] - frame[i]));
      max_in = std::max(max_in, std::abs(frame[i]));
    }
    CHECK(max_err < 1e-10 * max_in);
  }
}

TEST_CASE("ise_asd boosts the fundamental band by 20 dB") {
  // Band-energy oracle: the first gain is 10, so the 100 Hz band of the
  // enhanced frame sits 20 log10(10) dB above the unit-gain output. The
  // filter ring-in spans ~1.5 k samples, so probe a steady-state interior
  // window (an integer number of 100 Hz periods).
  Waveform w = synth::harmonic_complex(100.0, 10, 4096.0 / kFs, kFs, 0.3);
  auto unit_out = enhance_frame(w.samples, 100.0, unit_profile(10), kFs);
  auto ise_out =
      enhance_frame(w.samples, 100.0, *find_builtin_profile("ise_asd"), kFs);
  auto interior = [](const std::vector<double>& x) {
    return std::vector<double>(x.begin() + 1600, x.begin() + 3200);
  };
  const double mag_unit =
      synth::goertzel_magnitude(interior(unit_out.samples), 100.0, kFs);
  const double mag_ise =
      synth::goertzel_magnitude(interior(ise_out.samples), 100.0, kFs);
  const double gain_db = 20.0 * std::log10(mag_ise / mag_unit);
  CHECK(gain_db == doctest::Approx(20.0).epsilon(0.01));
}

TEST_CASE("filter count clamps at Nyquist") {
  auto frame = random_frame(512, 9);
  auto at16k = enhance_frame(frame, 400.0, *find_builtin_profile("ise_asd"), 16000);
  CHECK(at16k.filters_used == 10);  // min(10, 19): no clamp
  CHECK_FALSE(at16k.clamped);

  std::vector<double> frame8k = random_frame(256, 10);
  auto at8k = enhance_frame(frame8k, 400.0, *find_builtin_profile("ise_asd"), 8000);
  CHECK(at8k.filters_used == 9);  // floor(3999/400)
  CHECK(at8k.clamped);
}

TEST_CASE("all-unvoiced utterance passes through bit-exactly") {
  auto utt = synth::utterance(5, kFs, 1.0);
  FramePlan plan = plan_frames(utt.wav);
  VoicedMask mask;
  mask.voiced.assign(plan.frame_count, false);
  std::vector<std::optional<CascadeOutput>> no_cascades(plan.frame_count);
  Waveform out = assemble_utterance(utt.wav, plan, mask, no_cascades,
                                    unit_profile(10).gains);
  REQUIRE(out.samples.size() == utt.wav.samples.size());
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    CHECK(out.samples[i] == utt.wav.samples[i]);
}

TEST_CASE("unit profile is an end-to-end identity") {
  auto utt = synth::utterance(6, kFs, 1.2);
  FramePlan plan = plan_frames(utt.wav);
  VoicedMask mask = detect_vuv(utt.wav, plan);
  EemdConfig eemd_cfg;
  eemd_cfg.ensemble_size = 10;
  eemd_cfg.seed = 2;
  PitchTrack track = estimate_pitch_track(utt.wav, plan, mask, eemd_cfg);
  EnhancementConfig cfg;
  cfg.profile = unit_profile(10);
  EnhancementResult res = enhance_utterance(utt.wav, plan, mask, track, cfg);
  REQUIRE(res.output.samples.size() == utt.wav.samples.size());
  for (long i = plan.frame_length; i < plan.signal_length - plan.frame_length; ++i)
    CHECK(std::abs(res.output.samples[i] - utt.wav.samples[i]) < 1e-6);
}

TEST_CASE("unvoiced-only samples are untouched by real enhancement") {
  auto utt = synth::utterance(8, kFs, 1.5);
  FramePlan plan = plan_frames(utt.wav);
  VoicedMask mask = detect_vuv(utt.wav, plan);
  REQUIRE(mask.voiced_count() > 0);
  REQUIRE(mask.voiced_count() < plan.frame_count);
  EemdConfig eemd_cfg;
  eemd_cfg.ensemble_size = 10;
  eemd_cfg.seed = 3;
  PitchTrack track = estimate_pitch_track(utt.wav, plan, mask, eemd_cfg);
  EnhancementConfig cfg;  // ise_asd
  EnhancementResult res = enhance_utterance(utt.wav, plan, mask, track, cfg);

  // Find samples covered only by unvoiced frames.
  std::vector<bool> voiced_touched(utt.wav.samples.size(), false);
  for (int q = 0; q < plan.frame_count; ++q) {
    if (!mask.voiced[q]) continue;
    const long start = plan.frame_start(q);
    const long end = std::min<long>(start + plan.frame_length,
                                    static_cast<long>(utt.wav.samples.size()));
    for (long i = start; i < end; ++i) voiced_touched[i] = true;
  }
  int untouched = 0;
  for (std::size_t i = 0; i < utt.wav.samples.size(); ++i) {
    if (voiced_touched[i]) continue;
    ++untouched;
    CHECK(res.output.samples[i] == utt.wav.samples[i]);  // bit-identical
  }
  CHECK(untouched > 0);

  // Output stays finite and length-preserving.
  for (double s : res.output.samples) CHECK(std::isfinite(s));
}

TEST_CASE("raising one gain raises that band's share") {
  Waveform w = synth::harmonic_complex(110.0, 8, 1024.0 / kFs, kFs, 0.3);
  GainProfile base = unit_profile(6);
  for (int k = 0; k < 6; ++k) {
    GainProfile raised = base;
    raised.gains[k] = 2.0;
    auto out_base = enhance_frame(w.samples, 110.0, base, kFs);
    auto out_raised = enhance_frame(w.samples, 110.0, raised, kFs);
    const double f = 110.0 * (k + 1);
    const double m0 = synth::goertzel_magnitude(out_base.samples, f, kFs);
    const double m1 = synth::goertzel_magnitude(out_raised.samples, f, kFs);
    CHECK(m1 >= m0 * (1.0 - 1e-9));
  }
}

TEST_CASE("pipeline returns the input when pitch is unavailable") {
  // A constant signal has voiced frames by fiat but no oscillatory mode, so
  // no frame can yield a candidate.
  Waveform flat;
  flat.sample_rate = kFs;
  flat.samples.assign(8192, 0.5);
  FramePlan plan = plan_frames(flat);
  VoicedMask mask;
  mask.voiced.assign(plan.frame_count, true);
  mask.source = VuvSource::external_file;
  EnhancementConfig cfg;
  EnhancementResult res = enhance_pipeline(flat, mask, cfg);
  CHECK(res.report.pitch_unavailable);
  REQUIRE_FALSE(res.report.warnings.empty());
  for (std::size_t i = 0; i < flat.samples.size(); ++i)
    CHECK(res.output.samples[i] == flat.samples[i]);
}

TEST_CASE("pipeline with no voiced frames passes the input through") {
  Waveform noise = synth::white_noise(0.7, kFs, 44, 0.2);
  EnhancementConfig cfg;
  VoicedMask mask;
  mask.voiced.assign(plan_frames(noise).frame_count, false);
  EnhancementResult res = enhance_pipeline(noise, mask, cfg);
  CHECK_FALSE(res.report.warnings.empty());
  for (std::size_t i = 0; i < noise.samples.size(); ++i)
    CHECK(res.output.samples[i] == noise.samples[i]);
}

TEST_SUITE_END();
