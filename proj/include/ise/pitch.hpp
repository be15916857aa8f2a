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

#ifndef ISE_PITCH_HPP_
#define ISE_PITCH_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ise/audio.hpp"
#include "ise/emd.hpp"
#include "ise/types.hpp"

namespace ise {

/// One per-IMF pitch hypothesis: the lowest qualifying peak of the
/// amplitude-envelope autocorrelation.
struct PitchCandidate {
  int imf_index = 0;      // 0-based decomposition mode
  int lag = 0;            // tau0, samples
  double f0_hz = 0.0;     // sample_rate / tau0
  double acf_peak = 0.0;  // normalized correlation at tau0
};

struct PitchConfig {
  double f_min_hz = 50.0;
  double f_max_hz = 400.0;
  // Minimum normalized ACF value for a local maximum to qualify.
  double peak_floor = 0.3;
};

struct PitchTrack {
  std::vector<std::optional<double>> f0_hz;  // engaged only on voiced frames
  std::vector<std::vector<PitchCandidate>> candidates;
  std::vector<bool> fallback;  // estimate inherited rather than measured

  int frame_count() const { return static_cast<int>(f0_hz.size()); }
  int estimated_count() const;
  int fallback_count() const;
};

/// Per-IMF instantaneous amplitude a_k(t) = |analytic signal of IMF_k|.
std::vector<std::vector<double>> instantaneous_amplitudes(
    const ImfDecomposition& dec);

struct AcfResult {
  std::vector<double> r;  // normalized so r[0] == 1
  bool zero_variance = false;
};

/// Autocorrelation of an amplitude envelope after mean removal, normalized
/// by lag-zero. Constant input sets zero_variance instead.
AcfResult amplitude_acf(std::span<const double> a);

/// Lowest-lag qualifying ACF peak within the lag band implied by
/// [f_min, f_max]. Plateaus resolve to their leftmost sample.
std::optional<PitchCandidate> extract_candidate(std::span<const double> r,
                                                int sample_rate,
                                                const PitchConfig& cfg = {});

/// Best candidate = greatest normalized peak; ties go to the lower IMF index.
std::optional<double> select_f0(const std::vector<PitchCandidate>& candidates);

/// Full per-utterance amplitude-envelope pitch track: EEMD -> envelopes ->
/// envelope ACF -> candidate per IMF -> selection, for every voiced frame.
/// Voiced frames without a candidate inherit the previous voiced estimate,
/// else the global median. Throws pitch_unavailable_error when no frame
/// yields a candidate.
PitchTrack estimate_pitch_track(const Waveform& w, const FramePlan& plan,
                                const VoicedMask& mask,
                                const EemdConfig& eemd_cfg,
                                const PitchConfig& pitch_cfg = {});

/// CSV columns: frame_index, start_sec, voiced, f0_hz (empty if none).
void write_pitch_csv(const std::string& path, const PitchTrack& track,
                     const FramePlan& plan, const VoicedMask& mask);

}  // namespace ise

#endif  // ISE_PITCH_HPP_
