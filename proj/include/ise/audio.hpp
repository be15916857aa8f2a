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

#ifndef ISE_AUDIO_HPP_
#define ISE_AUDIO_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ise/types.hpp"

namespace ise {

/// 32 ms / 50%-overlap analysis grid over a signal. Frame q starts at
/// q * hop; the last frame is zero padded so the frames tile every sample.
struct FramePlan {
  int frame_length = 0;  // round(0.032 * sample_rate)
  int hop = 0;           // frame_length / 2, exactly
  int frame_count = 0;
  long signal_length = 0;
  int sample_rate = 0;

  long frame_start(int q) const { return static_cast<long>(q) * hop; }
};

enum class VuvSource { external_file, detector };

/// Per-frame voiced/unvoiced labels; partitions frames into the voiced set
/// and its complement.
struct VoicedMask {
  std::vector<bool> voiced;
  VuvSource source = VuvSource::detector;

  int voiced_count() const;
};

enum class NoiseOffsetPolicy { fixed, random };

struct MixSpec {
  double target_snr_db = 0.0;
  Waveform noise;
  NoiseOffsetPolicy offset_policy = NoiseOffsetPolicy::fixed;
  long fixed_offset = 0;
  unsigned long long seed = 0;
};

struct MixResult {
  Waveform mixed;
  double achieved_snr_db = 0.0;
  double noise_scale = 0.0;
  long noise_offset = 0;
};

/// Reads a RIFF PCM 16-bit mono WAV. Samples are scaled by 1/32768 so the
/// full 16-bit range maps into [-1, 1).
Waveform load_wav(const std::string& path);

/// Writes PCM 16-bit mono. If the peak exceeds full scale the signal is
/// peak-normalized first; returns the scale factor applied (1.0 otherwise).
double save_wav(const std::string& path, const Waveform& w);

FramePlan plan_frames(const Waveform& w);

std::vector<std::vector<double>> split_frames(const Waveform& w,
                                              const FramePlan& plan);

/// Constant-overlap-add reassembly with a triangular synthesis cross-fade.
/// Feeding back unmodified analysis frames reproduces the input.
Waveform overlap_add(const std::vector<std::vector<double>>& frames,
                     const FramePlan& plan);

/// speech + alpha * noise_segment, alpha chosen so the global power ratio
/// hits the target SNR. Noise shorter than the speech is looped with a
/// 10 ms cross-fade at the seam.
MixResult mix_at_snr(const Waveform& speech, const MixSpec& spec);

/// Label file format: one region per line, `start_sec end_sec V|U`.
/// A frame is voiced iff more than half its samples fall in a V region;
/// unlabeled time counts as unvoiced. A file with no parseable region
/// raises labels_incomplete_error.
VoicedMask load_vuv_labels(const std::string& path, const FramePlan& plan);

/// Energy + zero-crossing heuristic: voiced iff frame RMS > 0.3 * median
/// RMS of active frames and ZCR < 0.25.
VoicedMask detect_vuv(const Waveform& w, const FramePlan& plan);

/// Windowed-sinc resampler, 64-tap kernel.
Waveform resample(const Waveform& w, int new_rate);

}  // namespace ise

#endif  // ISE_AUDIO_HPP_
