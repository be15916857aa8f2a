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

#ifndef ISE_ENHANCE_HPP_
#define ISE_ENHANCE_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ise/audio.hpp"
#include "ise/gammatone.hpp"
#include "ise/pitch.hpp"
#include "ise/types.hpp"

namespace ise {

/// Ordered per-harmonic gain factors G_k. Gains live on the 0.25 grid
/// within [1, 10].
struct GainProfile {
  std::string name;
  std::vector<double> gains;

  int filter_count() const { return static_cast<int>(gains.size()); }
};

/// Throws std::invalid_argument when a gain leaves [1, 10] or the 0.25 grid.
void validate(const GainProfile& profile);

GainProfile unit_profile(int filter_count = 10);

/// The fixed built-in profiles: ise_asd (10 gains), gtf_f0 (4 gains), and
/// unit (all ones) for identity testing.
std::vector<GainProfile> builtin_profiles();
std::optional<GainProfile> find_builtin_profile(std::string_view name);

struct EnhancementConfig {
  GainProfile profile;  // defaults to ise_asd
  EemdConfig eemd;
  PitchConfig pitch;
  BandwidthRule bandwidth_rule = BandwidthRule::fixed;

  EnhancementConfig();
};

struct FrameEnhanceResult {
  std::vector<double> samples;
  int filters_used = 0;
  bool clamped = false;  // Nyquist reduced the filter count
};

/// Gain-weighted reconstruction of one voiced frame: cascade the harmonic
/// filterbank at f0 and return sum(G_k * y^k) + residual. The filter count
/// is clamped so every center frequency stays below Nyquist.
FrameEnhanceResult enhance_frame(std::span<const double> frame, double f0_hz,
                                 const GainProfile& profile, int sample_rate,
                                 BandwidthRule rule = BandwidthRule::fixed);

struct EnhancementReport {
  int voiced_frames = 0;
  int estimated_frames = 0;
  int fallback_frames = 0;
  int clamped_frames = 0;
  double median_f0_hz = 0.0;
  bool pitch_unavailable = false;
  std::vector<std::string> warnings;
};

struct EnhancementResult {
  Waveform output;
  EnhancementReport report;
};

/// Per-frame cascade outputs for the voiced frames (disengaged elsewhere);
/// lets callers re-assemble under different gain vectors without refiltering.
std::vector<std::optional<CascadeOutput>> cascade_voiced_frames(
    const Waveform& w, const FramePlan& plan, const VoicedMask& mask,
    const PitchTrack& track, int filter_count, BandwidthRule rule,
    int* clamped_frames = nullptr);

/// Overlap-add reassembly: voiced frames are rebuilt as
/// sum(G_k * band_k) + residual, unvoiced frames pass through; samples
/// covered only by unvoiced frames stay bit-identical to the input.
Waveform assemble_utterance(const Waveform& w, const FramePlan& plan,
                            const VoicedMask& mask,
                            const std::vector<std::optional<CascadeOutput>>& cascades,
                            std::span<const double> gains);

/// Full utterance enhancement given a precomputed pitch track.
EnhancementResult enhance_utterance(const Waveform& w, const FramePlan& plan,
                                    const VoicedMask& mask,
                                    const PitchTrack& track,
                                    const EnhancementConfig& cfg);

/// Convenience pipeline: plan, mask (detector fallback), pitch track, then
/// enhancement. A pitch-unavailable utterance is returned unmodified with a
/// warning record instead of failing.
EnhancementResult enhance_pipeline(const Waveform& w,
                                   const std::optional<VoicedMask>& mask,
                                   const EnhancementConfig& cfg);

}  // namespace ise

#endif  // ISE_ENHANCE_HPP_
