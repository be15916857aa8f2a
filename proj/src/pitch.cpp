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

#include "ise/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ise/fft.hpp"

namespace ise {

int PitchTrack::estimated_count() const {
  int count = 0;
  for (std::size_t q = 0; q < f0_hz.size(); ++q) {
    if (f0_hz[q].has_value() && !fallback[q]) ++count;
  }
  return count;
}

int PitchTrack::fallback_count() const {
  return static_cast<int>(std::count(fallback.begin(), fallback.end(), true));
}

std::vector<std::vector<double>> instantaneous_amplitudes(
    const ImfDecomposition& dec) {
  std::vector<std::vector<double>> amps(dec.imfs.size());
  for (std::size_t k = 0; k < dec.imfs.size(); ++k) {
    fft::cvec z = fft::analytic_signal(dec.imfs[k]);
    amps[k].resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) amps[k][i] = std::abs(z[i]);
  }
  return amps;
}

AcfResult amplitude_acf(std::span<const double> a) {
  if (a.empty()) throw std::invalid_argument("amplitude_acf: empty sequence");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (double v : a) mean += v;
  mean /= static_cast<double>(n);

  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = a[i] - mean;

  AcfResult res;
  res.r.assign(n, 0.0);
  double r0 = 0.0;
  for (double v : centered) r0 += v * v;
  if (r0 <= 1e-300) {
    res.zero_variance = true;
    return res;
  }
  for (std::size_t tau = 0; tau < n; ++tau) {
    double acc = 0.0;
    for (std::size_t t = 0; t + tau < n; ++t) acc += centered[t] * centered[t + tau];
    res.r[tau] = acc / r0;
  }
  return res;
}

std::optional<PitchCandidate> extract_candidate(std::span<const double> r,
                                                int sample_rate,
                                                const PitchConfig& cfg) {
  if (sample_rate <= 0)
    throw std::invalid_argument("extract_candidate: bad sample rate");
  const int n = static_cast<int>(r.size());
  const int tau_min =
      std::max(1, static_cast<int>(std::floor(sample_rate / cfg.f_max_hz)));
  const int tau_max = std::min(
      n - 2, static_cast<int>(std::ceil(sample_rate / cfg.f_min_hz)));

  int tau = tau_min;
  while (tau <= tau_max) {
    if (r[tau] > r[tau - 1]) {
      int j = tau;
      while (j + 1 < n && r[j + 1] == r[tau]) ++j;
      if (j + 1 < n && r[j + 1] < r[tau]) {
        const double f0 = static_cast<double>(sample_rate) / tau;
        if (r[tau] > cfg.peak_floor && f0 >= cfg.f_min_hz &&
            f0 <= cfg.f_max_hz) {
          PitchCandidate cand;
          cand.lag = tau;
          cand.f0_hz = f0;
          cand.acf_peak = r[tau];
          return cand;
        }
      }
      tau = j + 1;
    } else {
      ++tau;
    }
  }
  return std::nullopt;
}

std::optional<double> select_f0(const std::vector<PitchCandidate>& candidates) {
  if (candidates.empty()) return std::nullopt;
  const PitchCandidate* best = &candidates.front();
  for (const auto& c : candidates) {
    if (c.acf_peak > best->acf_peak) best = &c;
  }
  return best->f0_hz;
}

PitchTrack estimate_pitch_track(const Waveform& w, const FramePlan& plan,
                                const VoicedMask& mask,
                                const EemdConfig& eemd_cfg,
                                const PitchConfig& pitch_cfg) {
  if (static_cast<int>(mask.voiced.size()) != plan.frame_count)
    throw std::invalid_argument("estimate_pitch_track: mask does not match plan");

  auto frames = split_frames(w, plan);
  PitchTrack track;
  track.f0_hz.resize(plan.frame_count);
  track.candidates.resize(plan.frame_count);
  track.fallback.assign(plan.frame_count, false);

  for (int q = 0; q < plan.frame_count; ++q) {
    if (!mask.voiced[q]) continue;
    EemdConfig frame_cfg = eemd_cfg;
    frame_cfg.seed = mix_seed(eemd_cfg.seed, static_cast<unsigned long long>(q));
    ImfDecomposition dec = eemd(frames[q], frame_cfg);
    auto amps = instantaneous_amplitudes(dec);
    for (std::size_t k = 0; k < amps.size(); ++k) {
      AcfResult acf = amplitude_acf(amps[k]);
      if (acf.zero_variance) continue;
      auto cand = extract_candidate(acf.r, plan.sample_rate, pitch_cfg);
      if (cand.has_value()) {
        cand->imf_index = static_cast<int>(k);
        track.candidates[q].push_back(*cand);
      }
    }
    track.f0_hz[q] = select_f0(track.candidates[q]);
  }

  // Fill candidate-less voiced frames: previous voiced estimate, else the
  // global median of measured estimates.
  std::vector<double> found;
  for (int q = 0; q < plan.frame_count; ++q) {
    if (track.f0_hz[q].has_value()) found.push_back(*track.f0_hz[q]);
  }
  if (found.empty())
    throw pitch_unavailable_error(
        "estimate_pitch_track: no voiced frame yielded a pitch candidate");

  std::sort(found.begin(), found.end());
  const double median = found[found.size() / 2];
  std::optional<double> previous;
  for (int q = 0; q < plan.frame_count; ++q) {
    if (!mask.voiced[q]) continue;
    if (track.f0_hz[q].has_value()) {
      previous = track.f0_hz[q];
    } else {
      track.f0_hz[q] = previous.has_value() ? *previous : median;
      track.fallback[q] = true;
    }
  }
  return track;
}

void write_pitch_csv(const std::string& path, const PitchTrack& track,
                     const FramePlan& plan, const VoicedMask& mask) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write pitch csv: " + path);
  out << "frame_index,start_sec,voiced,f0_hz\n";
  for (int q = 0; q < track.frame_count(); ++q) {
    out << q << ',' << static_cast<double>(plan.frame_start(q)) / plan.sample_rate
        << ',' << (mask.voiced[q] ? 1 : 0) << ',';
    if (track.f0_hz[q].has_value()) out << *track.f0_hz[q];
    out << '\n';
  }
}

}  // namespace ise
