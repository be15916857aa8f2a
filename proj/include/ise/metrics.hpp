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

#ifndef ISE_METRICS_HPP_
#define ISE_METRICS_HPP_

#include <string>
#include <vector>

#include "ise/types.hpp"

namespace ise {

/// All ESTOI front-end constants, pinned for reproducibility.
struct EstoiConfig {
  int metric_rate_hz = 10000;
  int frame_length = 256;        // 25.6 ms at 10 kHz
  int hop = 128;                 // 50% overlap
  int fft_size = 512;
  int band_count = 15;           // 1/3-octave bands
  double lowest_center_hz = 150.0;
  int segment_frames = 30;       // 384 ms
  double dyn_range_db = 40.0;    // clean-side silent-frame removal
};

/// Extended short-time objective intelligibility of `degraded` against the
/// clean reference. Deterministic; identical non-degenerate inputs score 1.
/// Throws metric_undefined_error when the clean reference is silent or the
/// overlap is too short for one analysis segment.
double estoi(const Waveform& clean, const Waveform& degraded,
             const EstoiConfig& cfg = {});

enum class StiCategory { bad, poor, fair, good, excellent };

/// Reporting convention: bad < 0.30 <= poor < 0.45 <= fair < 0.60 <= good
/// < 0.75 <= excellent (boundaries lower-inclusive).
StiCategory sti_category(double score);
std::string to_string(StiCategory category);

struct AnovaResult {
  double f_statistic = 0.0;
  double p_value = 1.0;
  int group_count = 0;
  int total_observations = 0;
};

/// Classical one-way ANOVA: F = between-group MS / within-group MS with its
/// upper-tail p value. Needs >= 2 groups of >= 2 observations; zero
/// within-group variance raises degenerate_variance_error.
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

struct EvalRecord {
  std::string utterance;
  std::string noise;
  double snr_db = 0.0;
  std::string method;
  double estoi = 0.0;
  double delta_estoi = 0.0;
  StiCategory sti = StiCategory::bad;
};

struct SummaryRow {
  std::string noise;
  double snr_db = 0.0;
  std::string method;
  int count = 0;
  double estoi_mean, estoi_median, estoi_q1, estoi_q3, estoi_min, estoi_max;
  double delta_mean, delta_median, delta_q1, delta_q3, delta_min, delta_max;
};

/// Per (noise, snr, method) aggregates of ESTOI and delta-ESTOI, in
/// deterministic key order. Quartiles use linear interpolation.
std::vector<SummaryRow> summarize(const std::vector<EvalRecord>& records);

struct AnovaRow {
  std::string noise;
  double snr_db = 0.0;
  std::string metric;
  double f_stat = 0.0;
  double p_value = 1.0;
};

void write_records_csv(const std::string& path,
                       const std::vector<EvalRecord>& records);
void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows);
void write_anova_csv(const std::string& path, const std::vector<AnovaRow>& rows);

// ESTOI front-end internals, exposed so calibration can cache the clean-side
// analysis and tests can probe each stage.
namespace estoi_detail {

/// Frames (clean side) whose windowed energy is within dyn_range_db of the
/// loudest frame.
std::vector<bool> silent_frame_mask(const std::vector<double>& clean,
                                    const EstoiConfig& cfg);

/// Drops masked-out frames and overlap-adds the survivors back to back.
std::vector<double> remove_silent_frames(const std::vector<double>& x,
                                         const std::vector<bool>& keep,
                                         const EstoiConfig& cfg);

/// 1/3-octave band magnitudes, [band][frame].
std::vector<std::vector<double>> band_spectrogram(const std::vector<double>& x,
                                                  const EstoiConfig& cfg);

/// Mean inter-segment correlation of row- then column-normalized
/// spectrogram segments.
double estoi_from_bands(const std::vector<std::vector<double>>& clean_bands,
                        const std::vector<std::vector<double>>& degraded_bands,
                        const EstoiConfig& cfg);

/// Inclusive-exclusive FFT-bin ranges [lo, hi) of each 1/3-octave band.
std::vector<std::pair<int, int>> band_edges(const EstoiConfig& cfg);

}  // namespace estoi_detail

}  // namespace ise

#endif  // ISE_METRICS_HPP_
