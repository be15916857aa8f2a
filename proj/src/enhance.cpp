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

#include "ise/enhance.hpp"

#include <algorithm>
#include <cmath>

namespace ise {

void validate(const GainProfile& profile) {
  if (profile.gains.empty())
    throw std::invalid_argument("gain profile '" + profile.name + "' is empty");
  for (double g : profile.gains) {
    if (!(g >= 1.0 && g <= 10.0))
      throw std::invalid_argument("gain profile '" + profile.name +
                                  "': gain outside [1, 10]");
    if (std::abs(g * 4.0 - std::round(g * 4.0)) > 1e-9)
      throw std::invalid_argument("gain profile '" + profile.name +
                                  "': gain off the 0.25 grid");
  }
}

GainProfile unit_profile(int filter_count) {
  GainProfile p;
  p.name = "unit";
  p.gains.assign(static_cast<std::size_t>(filter_count), 1.0);
  return p;
}

std::vector<GainProfile> builtin_profiles() {
  GainProfile ise_asd;
  ise_asd.name = "ise_asd";
  ise_asd.gains = {10.0, 10.0, 4.5, 3.5, 2.5, 2.0, 1.75, 1.75, 1.5, 1.25};
  GainProfile gtf_f0;
  gtf_f0.name = "gtf_f0";
  gtf_f0.gains = {5.0, 5.0, 4.0, 2.5};
  return {ise_asd, gtf_f0, unit_profile(10)};
}

std::optional<GainProfile> find_builtin_profile(std::string_view name) {
  for (auto& p : builtin_profiles()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

EnhancementConfig::EnhancementConfig() : profile(*find_builtin_profile("ise_asd")) {}

namespace {

// Largest harmonic count with k * f0 strictly below Nyquist, at most limit.
int clamp_filter_count(double f0_hz, int sample_rate, int limit, bool* clamped) {
  int count = 0;
  while (count < limit && (count + 1) * f0_hz < 0.5 * sample_rate) ++count;
  if (clamped != nullptr) *clamped = count < limit;
  return count;
}

std::vector<GammatoneFilter> build_filterbank(double f0_hz, int count,
                                              int sample_rate,
                                              BandwidthRule rule) {
  std::vector<GammatoneFilter> filters;
  filters.reserve(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k)
    filters.push_back(build_filter(f0_hz, k, sample_rate, rule));
  return filters;
}

double synthesis_weight(int i, int hop) {
  if (i < hop) return static_cast<double>(i) / hop;
  return static_cast<double>(2 * hop - i) / hop;
}

}  // namespace

FrameEnhanceResult enhance_frame(std::span<const double> frame, double f0_hz,
                                 const GainProfile& profile, int sample_rate,
                                 BandwidthRule rule) {
  validate(profile);
  FrameEnhanceResult res;
  res.filters_used = clamp_filter_count(f0_hz, sample_rate,
                                        profile.filter_count(), &res.clamped);
  if (res.filters_used == 0) {
    res.samples.assign(frame.begin(), frame.end());
    return res;
  }
  auto filters = build_filterbank(f0_hz, res.filters_used, sample_rate, rule);
  CascadeOutput cascade = cascade_filter(frame, filters);
  res.samples = cascade.residual;
  for (int k = 0; k < res.filters_used; ++k) {
    const double gain = profile.gains[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < res.samples.size(); ++i)
      res.samples[i] += gain * cascade.bands[static_cast<std::size_t>(k)][i];
  }
  return res;
}

std::vector<std::optional<CascadeOutput>> cascade_voiced_frames(
    const Waveform& w, const FramePlan& plan, const VoicedMask& mask,
    const PitchTrack& track, int filter_count, BandwidthRule rule,
    int* clamped_frames) {
  if (static_cast<int>(mask.voiced.size()) != plan.frame_count ||
      track.frame_count() != plan.frame_count)
    throw std::invalid_argument("cascade_voiced_frames: misaligned inputs");

  auto frames = split_frames(w, plan);
  std::vector<std::optional<CascadeOutput>> out(frames.size());
  int clamped = 0;
  for (int q = 0; q < plan.frame_count; ++q) {
    if (!mask.voiced[q] || !track.f0_hz[q].has_value()) continue;
    bool was_clamped = false;
    const int count = clamp_filter_count(*track.f0_hz[q], plan.sample_rate,
                                         filter_count, &was_clamped);
    if (was_clamped) ++clamped;
    if (count == 0) continue;  // nothing below Nyquist; frame passes through
    auto filters =
        build_filterbank(*track.f0_hz[q], count, plan.sample_rate, rule);
    out[q] = cascade_filter(frames[q], filters);
  }
  if (clamped_frames != nullptr) *clamped_frames = clamped;
  return out;
}

Waveform assemble_utterance(
    const Waveform& w, const FramePlan& plan, const VoicedMask& mask,
    const std::vector<std::optional<CascadeOutput>>& cascades,
    std::span<const double> gains) {
  if (static_cast<int>(cascades.size()) != plan.frame_count)
    throw std::invalid_argument("assemble_utterance: cascade count mismatch");

  auto frames = split_frames(w, plan);
  const long padded = plan.frame_start(plan.frame_count - 1) + plan.frame_length;
  std::vector<double> acc(padded, 0.0);
  std::vector<double> wsum(padded, 0.0);
  std::vector<char> voiced_touched(padded, 0);

  std::vector<double> rebuilt;
  for (int q = 0; q < plan.frame_count; ++q) {
    const std::vector<double>* data = &frames[q];
    if (mask.voiced[q] && cascades[q].has_value()) {
      const CascadeOutput& c = *cascades[q];
      rebuilt = c.residual;
      const std::size_t used = std::min(gains.size(), c.bands.size());
      for (std::size_t k = 0; k < used; ++k) {
        for (std::size_t i = 0; i < rebuilt.size(); ++i)
          rebuilt[i] += gains[k] * c.bands[k][i];
      }
      data = &rebuilt;
    }
    const long start = plan.frame_start(q);
    for (int i = 0; i < plan.frame_length; ++i) {
      const double wgt = synthesis_weight(i, plan.hop);
      acc[start + i] += wgt * (*data)[i];
      wsum[start + i] += wgt;
      if (mask.voiced[q]) voiced_touched[start + i] = 1;
    }
  }

  Waveform out;
  out.sample_rate = plan.sample_rate;
  out.samples = w.samples;  // unvoiced-only samples stay bit-identical
  for (long i = 0; i < plan.signal_length; ++i) {
    if (voiced_touched[i] && wsum[i] > 1e-12) out.samples[i] = acc[i] / wsum[i];
  }
  return out;
}

EnhancementResult enhance_utterance(const Waveform& w, const FramePlan& plan,
                                    const VoicedMask& mask,
                                    const PitchTrack& track,
                                    const EnhancementConfig& cfg) {
  validate(cfg.profile);
  EnhancementResult res;
  res.report.voiced_frames = mask.voiced_count();
  res.report.estimated_frames = track.estimated_count();
  res.report.fallback_frames = track.fallback_count();

  std::vector<double> f0s;
  for (const auto& f0 : track.f0_hz)
    if (f0.has_value()) f0s.push_back(*f0);
  if (!f0s.empty()) {
    std::sort(f0s.begin(), f0s.end());
    res.report.median_f0_hz = f0s[f0s.size() / 2];
  }

  auto cascades = cascade_voiced_frames(w, plan, mask, track,
                                        cfg.profile.filter_count(),
                                        cfg.bandwidth_rule,
                                        &res.report.clamped_frames);
  res.output = assemble_utterance(w, plan, mask, cascades, cfg.profile.gains);
  return res;
}

EnhancementResult enhance_pipeline(const Waveform& w,
                                   const std::optional<VoicedMask>& mask,
                                   const EnhancementConfig& cfg) {
  FramePlan plan = plan_frames(w);
  VoicedMask voiced = mask.has_value() ? *mask : detect_vuv(w, plan);
  if (static_cast<int>(voiced.voiced.size()) != plan.frame_count)
    throw std::invalid_argument("enhance_pipeline: mask does not match signal");

  EnhancementResult res;
  if (voiced.voiced_count() == 0) {
    res.output = w;
    res.report.warnings.push_back("no voiced frames; utterance unmodified");
    return res;
  }
  try {
    PitchTrack track = estimate_pitch_track(w, plan, voiced, cfg.eemd, cfg.pitch);
    return enhance_utterance(w, plan, voiced, track, cfg);
  } catch (const pitch_unavailable_error& e) {
    res.output = w;
    res.report.voiced_frames = voiced.voiced_count();
    res.report.pitch_unavailable = true;
    res.report.warnings.push_back(std::string("pitch unavailable: ") + e.what());
    return res;
  }
}

}  // namespace ise
