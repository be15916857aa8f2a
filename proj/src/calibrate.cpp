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

#include "ise/calibrate.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace ise {

std::vector<TrainingItem> load_training_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open manifest: " + path);
  std::vector<TrainingItem> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    TrainingItem item;
    std::string snr;
    if (!std::getline(ls, item.clean_path, ',')) continue;
    if (!std::getline(ls, item.noise_path, ',')) continue;
    if (!std::getline(ls, snr, ',')) continue;
    if (item.clean_path == "clean_path") continue;  // header
    try {
      item.snr_db = std::stod(snr);
    } catch (const std::exception&) {
      continue;
    }
    items.push_back(std::move(item));
  }
  return items;
}

namespace {

// Everything gain-independent about one training item, computed once:
// the mixed signal's voiced-frame cascades and the clean-side metric state.
struct PreparedItem {
  Waveform mixed;
  FramePlan plan;
  VoicedMask mask;
  std::vector<std::optional<CascadeOutput>> cascades;
  std::vector<double> clean10k;
  std::vector<bool> silent_mask;
  std::vector<std::vector<double>> clean_bands;
};

double score_item(const PreparedItem& item, std::span<const double> gains,
                  const EstoiConfig& estoi_cfg) {
  Waveform enhanced = assemble_utterance(item.mixed, item.plan, item.mask,
                                         item.cascades, gains);
  Waveform y10 = resample(enhanced, estoi_cfg.metric_rate_hz);
  y10.samples.resize(item.clean10k.size());
  auto y_act =
      estoi_detail::remove_silent_frames(y10.samples, item.silent_mask, estoi_cfg);
  auto y_bands = estoi_detail::band_spectrogram(y_act, estoi_cfg);
  return estoi_detail::estoi_from_bands(item.clean_bands, y_bands, estoi_cfg);
}

}  // namespace

CalibrationRun calibrate_gains(const std::vector<TrainingItem>& training,
                               const CalibrateConfig& cfg, int filter_count) {
  if (training.empty())
    throw std::invalid_argument("calibrate_gains: empty training set");
  if (filter_count < 1)
    throw std::invalid_argument("calibrate_gains: filter_count must be >= 1");

  std::vector<PreparedItem> items;
  for (std::size_t idx = 0; idx < training.size(); ++idx) {
    const TrainingItem& t = training[idx];
    Waveform clean = load_wav(t.clean_path);
    Waveform noise = load_wav(t.noise_path);
    if (noise.sample_rate != clean.sample_rate)
      noise = resample(noise, clean.sample_rate);

    MixSpec spec;
    spec.target_snr_db = t.snr_db;
    spec.noise = std::move(noise);
    spec.offset_policy = NoiseOffsetPolicy::random;
    spec.seed = mix_seed(cfg.seed, 2 * idx);

    PreparedItem item;
    item.mixed = mix_at_snr(clean, spec).mixed;
    item.plan = plan_frames(item.mixed);
    item.mask = detect_vuv(clean, item.plan);
    if (item.mask.voiced_count() == 0) {
      std::cerr << "calibrate: no voiced frames in " << t.clean_path
                << ", skipping\n";
      continue;
    }
    EemdConfig eemd_cfg = cfg.eemd;
    eemd_cfg.seed = mix_seed(cfg.seed, 2 * idx + 1);
    PitchTrack track;
    try {
      track = estimate_pitch_track(item.mixed, item.plan, item.mask, eemd_cfg,
                                   cfg.pitch);
    } catch (const pitch_unavailable_error&) {
      std::cerr << "calibrate: pitch unavailable for " << t.clean_path
                << ", skipping\n";
      continue;
    }
    item.cascades = cascade_voiced_frames(item.mixed, item.plan, item.mask,
                                          track, filter_count,
                                          cfg.bandwidth_rule);

    Waveform clean10 = resample(clean, cfg.estoi.metric_rate_hz);
    Waveform mixed10 = resample(item.mixed, cfg.estoi.metric_rate_hz);
    const std::size_t len =
        std::min(clean10.samples.size(), mixed10.samples.size());
    clean10.samples.resize(len);
    item.clean10k = clean10.samples;
    item.silent_mask = estoi_detail::silent_frame_mask(item.clean10k, cfg.estoi);
    auto x_act = estoi_detail::remove_silent_frames(item.clean10k,
                                                    item.silent_mask, cfg.estoi);
    item.clean_bands = estoi_detail::band_spectrogram(x_act, cfg.estoi);
    items.push_back(std::move(item));
  }
  if (items.empty())
    throw calibration_impossible_error(
        "calibrate_gains: no training item has usable voiced content");

  CalibrationRun run;
  run.manifest = training;
  run.grid_step = cfg.grid_step;
  run.gain_min = cfg.gain_min;
  run.gain_max = cfg.gain_max;
  run.traces.resize(static_cast<std::size_t>(filter_count));

  std::vector<double> gains(static_cast<std::size_t>(filter_count), 1.0);
  const int grid_points = static_cast<int>(
      std::lround((cfg.gain_max - cfg.gain_min) / cfg.grid_step)) + 1;

  auto mean_score = [&](std::span<const double> g) {
    double total = 0.0;
    for (const auto& item : items) total += score_item(item, g, cfg.estoi);
    return total / static_cast<double>(items.size());
  };

  for (int k = 0; k < filter_count; ++k) {
    double best_gain = cfg.gain_min;
    double best_score = -2.0;
    for (int gi = 0; gi < grid_points; ++gi) {
      const double g = cfg.gain_min + gi * cfg.grid_step;
      gains[static_cast<std::size_t>(k)] = g;
      const double score = mean_score(gains);
      run.traces[static_cast<std::size_t>(k)].push_back({g, score});
      if (score > best_score) {  // ties keep the smaller gain
        best_score = score;
        best_gain = g;
      }
      if (k == 0 && gi == 0) run.allones_mean_estoi = score;
    }
    gains[static_cast<std::size_t>(k)] = best_gain;
    run.final_mean_estoi = best_score;
  }

  run.profile.name = "calibrated";
  run.profile.gains = gains;
  return run;
}

void write_profile_json(const std::string& path, const GainProfile& profile) {
  nlohmann::json j;
  j["name"] = profile.name;
  j["gains"] = profile.gains;
  std::ofstream out(path);
  if (!out) throw io_error("cannot write profile json: " + path);
  out << j.dump(2) << '\n';
}

GainProfile load_profile_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open profile json: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error("bad profile json " + path + ": " + e.what());
  }
  GainProfile p;
  p.name = j.value("name", "custom");
  if (!j.contains("gains") || !j["gains"].is_array())
    throw format_error("profile json missing gains array: " + path);
  for (const auto& g : j["gains"]) p.gains.push_back(g.get<double>());
  validate(p);
  return p;
}

void write_trace_csv(const std::string& path, const CalibrationRun& run) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write trace csv: " + path);
  out << "filter,gain,mean_estoi\n";
  for (std::size_t k = 0; k < run.traces.size(); ++k) {
    for (const auto& pt : run.traces[k]) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f", pt.mean_estoi);
      out << (k + 1) << ',' << pt.gain << ',' << buf << '\n';
    }
  }
}

}  // namespace ise
