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

#ifndef ISE_GAMMATONE_HPP_
#define ISE_GAMMATONE_HPP_

#include <span>
#include <vector>

#include "ise/types.hpp"

namespace ise {

struct GammatoneSpec {
  int order = 4;
  double center_hz = 0.0;
  double bandwidth_hz = 0.0;
  double phase_compensation_sec = 0.0;  // (order - 1) / (2 pi b)
  double amplitude = 1.0;               // normalizer for unit gain at center
  int truncation_length = 0;
};

/// Phase-compensated gammatone filter: the sampled non-causal response on a
/// causal index grid. ir[peak_index] is the sample at t = 0, where all
/// filters' envelope peaks align.
struct GammatoneFilter {
  GammatoneSpec spec;
  std::vector<double> ir;
  int peak_index = 0;
  int sample_rate = 0;
};

/// Whether the per-harmonic bandwidth stays fixed at 0.25 * f0 or scales with
/// the harmonic index (0.25 * k * f0).
enum class BandwidthRule { fixed, harmonic_scaled };

struct CascadeOutput {
  std::vector<std::vector<double>> bands;  // y^k, aligned with the frame
  std::vector<double> residual;            // x^L
};

/// Builds the order-4 filter at f_c = harmonic * f0 with the envelope peak
/// at t = 0 and the frequency-response magnitude at f_c normalized to 1.
/// The response is truncated 60 dB below its envelope peak (at most 4/b s).
/// Throws filter_out_of_band_error when f_c reaches the Nyquist frequency.
GammatoneFilter build_filter(double f0_hz, int harmonic, int sample_rate,
                             BandwidthRule rule = BandwidthRule::fixed);

/// Recursive band split: y^k = x^{k-1} * h_k, x^k = x^{k-1} - y^k. Band
/// signals are trimmed at the compensation offset so they align with the
/// frame; the bands plus residual always sum back to the input.
CascadeOutput cascade_filter(std::span<const double> frame,
                             const std::vector<GammatoneFilter>& filters);

/// Discrete-time frequency-response magnitude of the filter at freq_hz.
double response_magnitude(const GammatoneFilter& filter, double freq_hz);

}  // namespace ise

#endif  // ISE_GAMMATONE_HPP_
