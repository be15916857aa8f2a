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
#include <numbers>

#include "ise/pitch.hpp"
#include "synth.hpp"

using namespace ise;

namespace {

constexpr int kFs = 16000;

ImfDecomposition single_imf(std::vector<double> samples) {
  ImfDecomposition dec;
  dec.residual.assign(samples.size(), 0.0);
  dec.imfs.push_back(std::move(samples));
  return dec;
}

double gross_error_rate(const PitchTrack& track, double truth) {
  int gross = 0, n = 0;
  for (const auto& f0 : track.f0_hz) {
    if (!f0.has_value()) continue;
    ++n;
    if (std::abs(*f0 - truth) > 0.2 * truth) ++gross;
  }
  REQUIRE(n > 0);
  return static_cast<double>(gross) / n;
}

}  // namespace

TEST_SUITE_BEGIN("pitch");

TEST_CASE("instantaneous amplitude of a bin-aligned tone is flat") {
  // 1000 Hz is exactly bin 32 of a 512-point frame at 16 kHz.
  std::vector<double> imf(512);
  for (std::size_t i = 0; i < imf.size(); ++i)
    imf[i] = std::cos(2.0 * std::numbers::pi * 1000.0 * i / kFs);
  auto amps = instantaneous_amplitudes(single_imf(imf));
  REQUIRE(amps.size() == 1);
  for (double a : amps[0]) {
    CHECK(a >= 0.0);
    CHECK(std::abs(a - 1.0) < 0.02);
  }
}

TEST_CASE("instantaneous amplitude tracks an AM envelope") {
  std::vector<double> imf(512);
  for (std::size_t i = 0; i < imf.size(); ++i) {
    const double t = static_cast<double>(i) / kFs;
    imf[i] = (1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * 100.0 * t)) *
             std::cos(2.0 * std::numbers::pi * 1000.0 * t);
  }
  auto amps = instantaneous_amplitudes(single_imf(imf));
  double err2 = 0.0;
  for (std::size_t i = 0; i < imf.size(); ++i) {
    const double t = static_cast<double>(i) / kFs;
    const double expected = 1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * 100.0 * t);
    err2 += (amps[0][i] - expected) * (amps[0][i] - expected);
  }
  CHECK(std::sqrt(err2 / imf.size()) < 0.05);
}

TEST_CASE("instantaneous amplitude of a zero mode is zero") {
  auto amps = instantaneous_amplitudes(single_imf(std::vector<double>(256, 0.0)));
  for (double a : amps[0]) CHECK(a == 0.0);
}

TEST_CASE("amplitude_acf peaks at the envelope period") {
  std::vector<double> a(512);
  for (std::size_t i = 0; i < a.size(); ++i)
    a[i] = 1.0 + std::cos(2.0 * std::numbers::pi * 100.0 * i / kFs);
  AcfResult acf = amplitude_acf(a);
  REQUIRE_FALSE(acf.zero_variance);
  CHECK(acf.r[0] == doctest::Approx(1.0));
  int best = 120;
  for (int tau = 120; tau <= 200; ++tau)
    if (acf.r[tau] > acf.r[best]) best = tau;
  // The lag-count taper of the estimator can pull the peak a couple of
  // samples early; the envelope-period oracle allows +-3.
  CHECK(std::abs(best - 160) <= 3);
  CHECK(acf.r[best] > 0.3);
}

TEST_CASE("amplitude_acf of a white envelope stays small beyond tau_min") {
  Waveform w = synth::white_noise(0.032, kFs, 17, 1.0);
  for (auto& v : w.samples) v = std::abs(v);  // envelope-like, positive
  AcfResult acf = amplitude_acf(w.samples);
  const int tau_min = 40;  // floor(16000 / 400)
  for (std::size_t tau = tau_min; tau < acf.r.size(); ++tau)
    CHECK(std::abs(acf.r[tau]) < 0.2);
}

TEST_CASE("amplitude_acf flags a constant envelope") {
  std::vector<double> flat(400, 2.5);
  AcfResult acf = amplitude_acf(flat);
  CHECK(acf.zero_variance);
}

TEST_CASE("extract_candidate finds the lowest qualifying peak") {
  // Synthetic normalized ACF with a single interior peak at tau = 100.
  std::vector<double> r(512, 0.0);
  r[0] = 1.0;
  for (int tau = 60; tau <= 140; ++tau)
    r[tau] = 0.8 * std::exp(-0.002 * (tau - 100) * (tau - 100));
  auto cand = extract_candidate(r, kFs);
  REQUIRE(cand.has_value());
  CHECK(cand->lag == 100);
  CHECK(cand->f0_hz == doctest::Approx(160.0));
  CHECK(cand->acf_peak == doctest::Approx(0.8));
}

TEST_CASE("extract_candidate boundary lag arithmetic") {
  // Peaks at tau = 40 (the exact floor(fs/400) bound) and tau = 160. The
  // lowest in-range peak wins: tau = 40 -> 400 Hz.
  std::vector<double> r(512, 0.0);
  r[0] = 1.0;
  r[39] = 0.2;
  r[40] = 0.5;
  r[41] = 0.2;
  r[159] = 0.3;
  r[160] = 0.9;
  r[161] = 0.3;
  auto cand = extract_candidate(r, kFs);
  REQUIRE(cand.has_value());
  CHECK(cand->lag == 40);
  CHECK(cand->f0_hz == doctest::Approx(400.0));

  // Without the tau = 40 peak, tau = 160 -> 100 Hz wins.
  r[40] = 0.0;
  r[39] = r[41] = 0.0;
  cand = extract_candidate(r, kFs);
  REQUIRE(cand.has_value());
  CHECK(cand->lag == 160);
  CHECK(cand->f0_hz == doctest::Approx(100.0));
}

TEST_CASE("extract_candidate ignores sub-floor correlations") {
  std::vector<double> r(512, 0.0);
  r[0] = 1.0;
  r[99] = 0.1;
  r[100] = 0.25;  // below the 0.3 floor
  r[101] = 0.1;
  CHECK_FALSE(extract_candidate(r, kFs).has_value());
}

TEST_CASE("extract_candidate takes the leftmost sample of a plateau") {
  std::vector<double> r(512, 0.0);
  r[0] = 1.0;
  r[79] = 0.2;
  r[80] = 0.6;
  r[81] = 0.6;
  r[82] = 0.6;
  r[83] = 0.2;
  auto cand = extract_candidate(r, kFs);
  REQUIRE(cand.has_value());
  CHECK(cand->lag == 80);
}

TEST_CASE("select_f0 picks the greatest peak, ties to the lower mode") {
  CHECK_FALSE(select_f0({}).has_value());

  PitchCandidate a{.imf_index = 0, .lag = 100, .f0_hz = 120.0, .acf_peak = 0.7};
  CHECK(select_f0({a}) == doctest::Approx(120.0));

  PitchCandidate weak{.imf_index = 1, .lag = 67, .f0_hz = 240.0, .acf_peak = 0.6};
  PitchCandidate strong{.imf_index = 2, .lag = 133, .f0_hz = 120.0, .acf_peak = 0.9};
  CHECK(select_f0({weak, strong}) == doctest::Approx(120.0));

  PitchCandidate tie_low{.imf_index = 1, .lag = 80, .f0_hz = 200.0, .acf_peak = 0.8};
  PitchCandidate tie_high{.imf_index = 3, .lag = 160, .f0_hz = 100.0, .acf_peak = 0.8};
  CHECK(select_f0({tie_low, tie_high}) == doctest::Approx(200.0));
}

TEST_CASE("pitch track is accurate on a clean synthetic vowel") {
  Waveform w = synth::harmonic_complex(120.0, 10, 1.2, kFs, 0.4);
  FramePlan plan = plan_frames(w);
  VoicedMask mask;
  mask.voiced.assign(plan.frame_count, true);
  EemdConfig cfg;
  cfg.seed = 4;
  PitchTrack track = estimate_pitch_track(w, plan, mask, cfg);
  CHECK(gross_error_rate(track, 120.0) < 0.2);  // spec: >= 80% within 20%
  for (const auto& f0 : track.f0_hz) {
    REQUIRE(f0.has_value());
    CHECK(*f0 >= 50.0);
    CHECK(*f0 <= 400.0);
  }
}

TEST_CASE("pitch track survives 0 dB speech-shaped noise") {
  Waveform w = synth::harmonic_complex(120.0, 10, 1.5, kFs, 0.4);
  Waveform ref = synth::utterance(2, kFs, 1.5).wav;
  Waveform noise = synth::speech_shaped_noise(2.0, kFs, 8, ref, 0.1);
  MixSpec spec;
  spec.target_snr_db = 0.0;
  spec.noise = noise;
  spec.offset_policy = NoiseOffsetPolicy::random;
  spec.seed = 12;
  Waveform mixed = mix_at_snr(w, spec).mixed;
  FramePlan plan = plan_frames(mixed);
  VoicedMask mask;
  mask.voiced.assign(plan.frame_count, true);
  EemdConfig cfg;
  cfg.seed = 5;
  PitchTrack track = estimate_pitch_track(mixed, plan, mask, cfg);
  CHECK(gross_error_rate(track, 120.0) < 0.3);  // pilot-frozen threshold
}

TEST_CASE("estimates stay inside the configured range") {
  Waveform w = synth::utterance(91, kFs, 1.5).wav;
  FramePlan plan = plan_frames(w);
  VoicedMask mask = detect_vuv(w, plan);
  EemdConfig cfg;
  cfg.seed = 6;
  PitchTrack track = estimate_pitch_track(w, plan, mask, cfg);
  for (int q = 0; q < plan.frame_count; ++q) {
    if (!mask.voiced[q]) {
      CHECK_FALSE(track.f0_hz[q].has_value());
      continue;
    }
    REQUIRE(track.f0_hz[q].has_value());
    CHECK(*track.f0_hz[q] >= 50.0);
    CHECK(*track.f0_hz[q] <= 400.0);
  }
}

TEST_CASE("all-unvoiced mask has no pitch") {
  Waveform w = synth::utterance(92, kFs, 1.0).wav;
  FramePlan plan = plan_frames(w);
  VoicedMask mask;
  mask.voiced.assign(plan.frame_count, false);
  EemdConfig cfg;
  CHECK_THROWS_AS(estimate_pitch_track(w, plan, mask, cfg),
                  pitch_unavailable_error);
}

TEST_CASE("selection is invariant to positive input rescaling") {
  Waveform w = synth::harmonic_complex(150.0, 8, 0.8, kFs, 0.3);
  FramePlan plan = plan_frames(w);
  VoicedMask mask;
  mask.voiced.assign(plan.frame_count, true);
  EemdConfig cfg;
  cfg.seed = 14;
  PitchTrack a = estimate_pitch_track(w, plan, mask, cfg);
  Waveform scaled = w;
  for (auto& s : scaled.samples) s *= 3.0;
  PitchTrack b = estimate_pitch_track(scaled, plan, mask, cfg);
  for (int q = 0; q < plan.frame_count; ++q) {
    REQUIRE(a.f0_hz[q].has_value() == b.f0_hz[q].has_value());
    if (a.f0_hz[q])
      CHECK(*a.f0_hz[q] == doctest::Approx(*b.f0_hz[q]).epsilon(1e-6));
  }
}

TEST_CASE("pitch track is deterministic given the seed") {
  Waveform w = synth::harmonic_complex(200.0, 6, 0.6, kFs, 0.3);
  FramePlan plan = plan_frames(w);
  VoicedMask mask;
  mask.voiced.assign(plan.frame_count, true);
  EemdConfig cfg;
  cfg.ensemble_size = 10;
  cfg.seed = 77;
  PitchTrack a = estimate_pitch_track(w, plan, mask, cfg);
  PitchTrack b = estimate_pitch_track(w, plan, mask, cfg);
  for (int q = 0; q < plan.frame_count; ++q) {
    REQUIRE(a.f0_hz[q].has_value() == b.f0_hz[q].has_value());
    if (a.f0_hz[q]) CHECK(*a.f0_hz[q] == *b.f0_hz[q]);
  }
}

TEST_CASE("a hop shift permutes the frame estimates") {
  // Long stationary input: frame q of the shifted signal sees what frame
  // q+1 of the original saw.
  Waveform w = synth::harmonic_complex(140.0, 9, 1.6, kFs, 0.35);
  FramePlan plan = plan_frames(w);
  Waveform shifted;
  shifted.sample_rate = kFs;
  shifted.samples.assign(w.samples.begin() + plan.hop, w.samples.end());
  FramePlan splan = plan_frames(shifted);

  VoicedMask mask;
  mask.voiced.assign(plan.frame_count, true);
  VoicedMask smask;
  smask.voiced.assign(splan.frame_count, true);

  // Per-frame seeds differ between the two runs, so compare against the
  // known constant truth rather than frame-by-frame equality.
  EemdConfig cfg;
  cfg.seed = 15;
  PitchTrack a = estimate_pitch_track(w, plan, mask, cfg);
  PitchTrack b = estimate_pitch_track(shifted, splan, smask, cfg);
  int aligned = 0, total = 0;
  for (int q = 10; q < splan.frame_count - 10; ++q) {
    if (!a.f0_hz[q + 1] || !b.f0_hz[q]) continue;
    ++total;
    if (std::abs(*a.f0_hz[q + 1] - *b.f0_hz[q]) < 0.1 * 140.0) ++aligned;
  }
  REQUIRE(total > 20);
  CHECK(static_cast<double>(aligned) / total > 0.9);
}

TEST_SUITE_END();
