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

#ifndef ISE_CALIBRATE_HPP_
#define ISE_CALIBRATE_HPP_

#include <string>
#include <vector>

#include "ise/enhance.hpp"
#include "ise/metrics.hpp"
#include "ise/types.hpp"

namespace ise {

struct TrainingItem {
  std::string clean_path;
  std::string noise_path;
  double snr_db = 0.0;
};

/// CSV manifest: `clean_path,noise_path,snr_db`, one item per line.
/// Lines starting with '#' and a header line are skipped.
std::vector<TrainingItem> load_training_manifest(const std::string& path);

struct SweepPoint {
  double gain = 0.0;
  double mean_estoi = 0.0;
};

struct CalibrationRun {
  std::vector<TrainingItem> manifest;
  double grid_step = 0.25;
  double gain_min = 1.0;
  double gain_max = 10.0;
  std::vector<std::vector<SweepPoint>> traces;  // per filter, in sweep order
  GainProfile profile;
  double allones_mean_estoi = 0.0;
  double final_mean_estoi = 0.0;
};

struct CalibrateConfig {
  EemdConfig eemd;
  PitchConfig pitch;
  BandwidthRule bandwidth_rule = BandwidthRule::fixed;
  EstoiConfig estoi;
  double grid_step = 0.25;
  double gain_min = 1.0;
  double gain_max = 10.0;
  unsigned long long seed = 0;
};

/// Greedy per-filter gain characterization: for k = 1..L sweep G_k over the
/// grid with earlier gains fixed at their chosen values and later gains at 1,
/// then fix G_k at the mean-ESTOI argmax (ties to the smaller gain).
/// Throws calibration_impossible_error when no training item yields voiced
/// content with a usable pitch track.
CalibrationRun calibrate_gains(const std::vector<TrainingItem>& training,
                               const CalibrateConfig& cfg, int filter_count);

/// Profile JSON: {"name": ..., "gains": [...]}.
void write_profile_json(const std::string& path, const GainProfile& profile);
GainProfile load_profile_json(const std::string& path);

/// Trace CSV: `filter,gain,mean_estoi` in evaluation order.
void write_trace_csv(const std::string& path, const CalibrationRun& run);

}  // namespace ise

#endif  // ISE_CALIBRATE_HPP_
