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

#include "ise/audio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace ise {

void validate(const Waveform& w) {
  if (w.sample_rate <= 0)
    throw std::invalid_argument("waveform: sample_rate must be positive");
  if (w.samples.empty())
    throw std::invalid_argument("waveform: at least one sample required");
  for (double s : w.samples) {
    if (!std::isfinite(s))
      throw std::invalid_argument("waveform: non-finite sample");
  }
}

double rms(const std::vector<double>& x) {
  return std::sqrt(mean_power(x));
}

double mean_power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

int VoicedMask::voiced_count() const {
  return static_cast<int>(std::count(voiced.begin(), voiced.end(), true));
}

// ---------------------------------------------------------------------------
// WAV I/O (RIFF PCM 16-bit mono)

namespace {

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

Waveform load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open wav file: " + path);

  char tag[5] = {0};
  in.read(tag, 4);
  if (!in || std::strncmp(tag, "RIFF", 4) != 0)
    throw format_error("not a RIFF file: " + path);
  read_u32(in);  // riff chunk size, unused
  in.read(tag, 4);
  if (!in || std::strncmp(tag, "WAVE", 4) != 0)
    throw format_error("not a WAVE file: " + path);

  bool have_fmt = false;
  int sample_rate = 0;
  std::vector<double> samples;

  while (in.read(tag, 4)) {
    std::uint32_t chunk_size = read_u32(in);
    if (!in) throw io_error("truncated wav chunk header: " + path);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw format_error("fmt chunk too small: " + path);
      std::uint16_t audio_format = read_u16(in);
      std::uint16_t channels = read_u16(in);
      std::uint32_t rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      std::uint16_t bits = read_u16(in);
      in.ignore(chunk_size - 16);
      if (audio_format != 1)
        throw format_error("unsupported wav codec (PCM required): " + path);
      if (channels != 1)
        throw format_error("unsupported channel count (mono required): " + path);
      if (bits != 16)
        throw format_error("unsupported sample width (16-bit required): " + path);
      sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (std::strncmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw format_error("data chunk before fmt: " + path);
      const std::size_t count = chunk_size / 2;
      std::vector<std::int16_t> raw(count);
      in.read(reinterpret_cast<char*>(raw.data()),
              static_cast<std::streamsize>(count * 2));
      if (static_cast<std::size_t>(in.gcount()) != count * 2)
        throw io_error("truncated wav data: " + path);
      samples.resize(count);
      for (std::size_t i = 0; i < count; ++i)
        samples[i] = static_cast<double>(raw[i]) / 32768.0;
      return Waveform(std::move(samples), sample_rate);
    } else {
      in.ignore(chunk_size + (chunk_size & 1));  // chunks are word aligned
    }
  }
  throw format_error("wav file has no data chunk: " + path);
}

double save_wav(const std::string& path, const Waveform& w) {
  validate(w);
  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::abs(s));
  const double limit = 32767.0 / 32768.0;
  const double scale = peak > limit ? limit / peak : 1.0;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write wav file: " + path);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  write_u32(out, static_cast<std::uint32_t>(w.sample_rate * 2));
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (double s : w.samples) {
    double v = std::round(s * scale * 32768.0);
    v = std::clamp(v, -32768.0, 32767.0);
    write_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  if (!out) throw io_error("short write: " + path);
  return scale;
}

// ---------------------------------------------------------------------------
// Framing and overlap-add

FramePlan plan_frames(const Waveform& w) {
  validate(w);
  FramePlan plan;
  plan.sample_rate = w.sample_rate;
  plan.frame_length = static_cast<int>(std::lround(0.032 * w.sample_rate));
  if (plan.frame_length % 2 != 0) ++plan.frame_length;  // hop must be exact
  plan.hop = plan.frame_length / 2;
  plan.signal_length = static_cast<long>(w.samples.size());
  const long len = plan.signal_length;
  if (len <= plan.frame_length) {
    plan.frame_count = 1;  // short signal: single zero-padded frame
  } else {
    const long num = len - plan.frame_length;
    plan.frame_count = static_cast<int>((num + plan.hop - 1) / plan.hop) + 1;
  }
  return plan;
}

std::vector<std::vector<double>> split_frames(const Waveform& w,
                                              const FramePlan& plan) {
  if (static_cast<long>(w.samples.size()) != plan.signal_length)
    throw std::invalid_argument("split_frames: plan does not match signal");
  std::vector<std::vector<double>> frames(plan.frame_count);
  for (int q = 0; q < plan.frame_count; ++q) {
    frames[q].assign(plan.frame_length, 0.0);
    const long start = plan.frame_start(q);
    const long end = std::min<long>(start + plan.frame_length, plan.signal_length);
    for (long i = start; i < end; ++i) frames[q][i - start] = w.samples[i];
  }
  return frames;
}

namespace {

// Triangular synthesis window; adjacent windows sum to exactly 1 at 50%
// overlap (hop = frame_length / 2).
double synthesis_weight(int i, int hop) {
  if (i < hop) return static_cast<double>(i) / hop;
  return static_cast<double>(2 * hop - i) / hop;
}

}  // namespace

Waveform overlap_add(const std::vector<std::vector<double>>& frames,
                     const FramePlan& plan) {
  if (static_cast<int>(frames.size()) != plan.frame_count)
    throw std::invalid_argument("overlap_add: frame count does not match plan");
  for (const auto& f : frames) {
    if (static_cast<int>(f.size()) != plan.frame_length)
      throw std::invalid_argument("overlap_add: frame length does not match plan");
  }
  const long padded = plan.frame_start(plan.frame_count - 1) + plan.frame_length;
  std::vector<double> acc(padded, 0.0);
  std::vector<double> wsum(padded, 0.0);
  for (int q = 0; q < plan.frame_count; ++q) {
    const long start = plan.frame_start(q);
    for (int i = 0; i < plan.frame_length; ++i) {
      const double wgt = synthesis_weight(i, plan.hop);
      acc[start + i] += wgt * frames[q][i];
      wsum[start + i] += wgt;
    }
  }
  Waveform out;
  out.sample_rate = plan.sample_rate;
  out.samples.resize(plan.signal_length);
  for (long i = 0; i < plan.signal_length; ++i) {
    // The very first sample has zero window weight; take it verbatim.
    out.samples[i] = wsum[i] > 1e-12 ? acc[i] / wsum[i] : frames[0][i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Noise mixing

namespace {

// Loops `noise` (starting at `offset`) out to `needed` samples, cross-fading
// 10 ms across each wrap seam.
std::vector<double> noise_segment(const std::vector<double>& noise, long offset,
                                  long needed, int sample_rate) {
  const long n = static_cast<long>(noise.size());
  offset = ((offset % n) + n) % n;
  std::vector<double> seg;
  seg.reserve(needed + n);
  for (long i = offset; i < n && static_cast<long>(seg.size()) < needed; ++i)
    seg.push_back(noise[i]);
  const long fade = std::min<long>(std::lround(0.010 * sample_rate), n / 2);
  while (static_cast<long>(seg.size()) < needed) {
    const std::size_t join = seg.size() >= static_cast<std::size_t>(fade)
                                 ? seg.size() - fade
                                 : 0;
    const long actual_fade = static_cast<long>(seg.size() - join);
    for (long j = 0; j < actual_fade; ++j) {
      const double t = static_cast<double>(j + 1) / (actual_fade + 1);
      seg[join + j] = seg[join + j] * (1.0 - t) + noise[j] * t;
    }
    for (long i = actual_fade; i < n; ++i) seg.push_back(noise[i]);
  }
  seg.resize(needed);
  return seg;
}

}  // namespace

MixResult mix_at_snr(const Waveform& speech, const MixSpec& spec) {
  validate(speech);
  validate(spec.noise);
  if (spec.noise.sample_rate != speech.sample_rate)
    throw std::invalid_argument(
        "mix_at_snr: sample rates differ (resample the noise first)");

  long offset = spec.fixed_offset;
  if (spec.offset_policy == NoiseOffsetPolicy::random) {
    std::mt19937_64 rng(spec.seed);
    offset = static_cast<long>(rng() % spec.noise.samples.size());
  }
  const long needed = static_cast<long>(speech.samples.size());
  std::vector<double> seg =
      noise_segment(spec.noise.samples, offset, needed, speech.sample_rate);

  const double p_speech = mean_power(speech.samples);
  const double p_noise = mean_power(seg);
  if (p_speech <= 0.0)
    throw degenerate_input_error("mix_at_snr: zero-power speech");
  if (p_noise <= 0.0)
    throw degenerate_input_error("mix_at_snr: zero-power noise segment");

  const double alpha =
      std::sqrt(p_speech / p_noise) * std::pow(10.0, -spec.target_snr_db / 20.0);

  MixResult res;
  res.noise_scale = alpha;
  res.noise_offset = offset;
  res.mixed.sample_rate = speech.sample_rate;
  res.mixed.samples.resize(needed);
  for (long i = 0; i < needed; ++i)
    res.mixed.samples[i] = speech.samples[i] + alpha * seg[i];
  res.achieved_snr_db = 10.0 * std::log10(p_speech / (alpha * alpha * p_noise));
  return res;
}

// ---------------------------------------------------------------------------
// V/UV labels

VoicedMask load_vuv_labels(const std::string& path, const FramePlan& plan) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open label file: " + path);

  struct Region {
    double start, end;
    bool voiced;
  };
  std::vector<Region> regions;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double start = 0, end = 0;
    std::string label;
    if (!(ls >> start >> end >> label)) continue;
    if (end < start || label.empty()) continue;
    const char c = static_cast<char>(std::toupper(label[0]));
    if (c != 'V' && c != 'U') continue;
    regions.push_back({start, end, c == 'V'});
  }
  if (regions.empty())
    throw labels_incomplete_error("label file has no usable region: " + path);

  VoicedMask mask;
  mask.source = VuvSource::external_file;
  mask.voiced.resize(plan.frame_count, false);
  const double fs = plan.sample_rate;
  for (int q = 0; q < plan.frame_count; ++q) {
    const double fstart = plan.frame_start(q) / fs;
    const double fend = (plan.frame_start(q) + plan.frame_length) / fs;
    double voiced_time = 0.0;
    for (const auto& r : regions) {
      if (!r.voiced) continue;
      voiced_time += std::max(0.0, std::min(fend, r.end) - std::max(fstart, r.start));
    }
    mask.voiced[q] = voiced_time > 0.5 * (fend - fstart);
  }
  return mask;
}

VoicedMask detect_vuv(const Waveform& w, const FramePlan& plan) {
  auto frames = split_frames(w, plan);
  std::vector<double> frame_rms(frames.size());
  for (std::size_t q = 0; q < frames.size(); ++q) frame_rms[q] = rms(frames[q]);

  std::vector<double> active;
  for (double r : frame_rms)
    if (r > 1e-8) active.push_back(r);
  double median_rms = 0.0;
  if (!active.empty()) {
    std::sort(active.begin(), active.end());
    median_rms = active[active.size() / 2];
  }

  VoicedMask mask;
  mask.source = VuvSource::detector;
  mask.voiced.resize(plan.frame_count, false);
  for (int q = 0; q < plan.frame_count; ++q) {
    const auto& f = frames[q];
    int crossings = 0;
    for (std::size_t i = 1; i < f.size(); ++i) {
      if ((f[i - 1] >= 0.0) != (f[i] >= 0.0)) ++crossings;
    }
    const double zcr = static_cast<double>(crossings) / (f.size() - 1);
    mask.voiced[q] = median_rms > 0.0 && frame_rms[q] > 0.3 * median_rms &&
                     zcr < 0.25;
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Resampling

Waveform resample(const Waveform& w, int new_rate) {
  validate(w);
  if (new_rate <= 0) throw std::invalid_argument("resample: bad target rate");
  if (new_rate == w.sample_rate) return w;

  constexpr int kTaps = 64;
  constexpr int kHalf = kTaps / 2;
  const double ratio = static_cast<double>(w.sample_rate) / new_rate;
  const double cutoff = std::min(1.0, 1.0 / ratio);  // vs input Nyquist
  const long out_len =
      static_cast<long>(std::floor((w.samples.size() - 1) / ratio)) + 1;

  Waveform out;
  out.sample_rate = new_rate;
  out.samples.resize(out_len);
  const long in_len = static_cast<long>(w.samples.size());
  for (long n = 0; n < out_len; ++n) {
    const double center = n * ratio;
    const long m0 = static_cast<long>(std::floor(center)) - kHalf + 1;
    double acc = 0.0;
    for (long m = m0; m < m0 + kTaps; ++m) {
      if (m < 0 || m >= in_len) continue;
      const double u = m - center;
      double h;
      if (std::abs(u) < 1e-12) {
        h = cutoff;
      } else {
        h = cutoff * std::sin(std::numbers::pi * cutoff * u) /
            (std::numbers::pi * cutoff * u);
      }
      // Hann taper over the 64-tap support.
      h *= 0.5 * (1.0 + std::cos(std::numbers::pi * u / kHalf));
      acc += w.samples[m] * h;
    }
    out.samples[n] = acc;
  }
  return out;
}

}  // namespace ise
