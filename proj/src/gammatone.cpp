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

#include "ise/gammatone.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "ise/fft.hpp"

namespace ise {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double envelope(double t_plus_tc, int order, double bandwidth_hz) {
  return std::pow(t_plus_tc, order - 1) * std::exp(-kTwoPi * bandwidth_hz * t_plus_tc);
}

}  // namespace

GammatoneFilter build_filter(double f0_hz, int harmonic, int sample_rate,
                             BandwidthRule rule) {
  if (harmonic < 1) throw std::invalid_argument("build_filter: harmonic must be >= 1");
  if (sample_rate <= 0) throw std::invalid_argument("build_filter: bad sample rate");
  if (!(f0_hz > 0.0)) throw std::invalid_argument("build_filter: f0 must be positive");

  const double fc = harmonic * f0_hz;
  if (!(fc < 0.5 * sample_rate))
    throw filter_out_of_band_error("build_filter: center frequency " +
                                   std::to_string(fc) + " Hz reaches Nyquist");

  GammatoneFilter filter;
  filter.sample_rate = sample_rate;
  GammatoneSpec& spec = filter.spec;
  spec.order = 4;
  spec.center_hz = fc;
  spec.bandwidth_hz =
      rule == BandwidthRule::fixed ? 0.25 * f0_hz : 0.25 * harmonic * f0_hz;
  spec.phase_compensation_sec = (spec.order - 1) / (kTwoPi * spec.bandwidth_hz);

  const double tc = spec.phase_compensation_sec;
  const double fs = sample_rate;
  const int peak = static_cast<int>(std::floor(tc * fs));
  const double env_peak = envelope(tc, spec.order, spec.bandwidth_hz);
  const double cutoff = 1e-3 * env_peak;  // -60 dB
  const int max_len = static_cast<int>(std::lround(4.0 / spec.bandwidth_hz * fs));

  filter.peak_index = peak;
  filter.ir.reserve(static_cast<std::size_t>(peak) + 64);
  for (int i = 0; i < max_len; ++i) {
    const double t = (i - peak) / fs;
    const double env = envelope(t + tc, spec.order, spec.bandwidth_hz);
    if (i > peak && env <= cutoff) break;
    filter.ir.push_back(env * std::cos(kTwoPi * fc * t));
  }

  // Unit magnitude at the center frequency.
  const double mag = response_magnitude(filter, fc);
  if (mag <= 0.0) throw std::runtime_error("build_filter: degenerate response");
  spec.amplitude = 1.0 / mag;
  for (double& v : filter.ir) v *= spec.amplitude;
  spec.truncation_length = static_cast<int>(filter.ir.size());
  return filter;
}

CascadeOutput cascade_filter(std::span<const double> frame,
                             const std::vector<GammatoneFilter>& filters) {
  if (filters.empty())
    throw std::invalid_argument("cascade_filter: at least one filter required");
  const std::size_t n = frame.size();

  CascadeOutput out;
  out.residual.assign(frame.begin(), frame.end());
  out.bands.reserve(filters.size());
  for (const auto& filter : filters) {
    std::vector<double> full = fft::convolve_fft(out.residual, filter.ir);
    std::vector<double> band(n);
    for (std::size_t i = 0; i < n; ++i)
      band[i] = full[i + static_cast<std::size_t>(filter.peak_index)];
    for (std::size_t i = 0; i < n; ++i) out.residual[i] -= band[i];
    out.bands.push_back(std::move(band));
  }
  return out;
}

double response_magnitude(const GammatoneFilter& filter, double freq_hz) {
  const double omega = kTwoPi * freq_hz / filter.sample_rate;
  std::complex<double> acc = 0.0;
  for (std::size_t m = 0; m < filter.ir.size(); ++m) {
    acc += filter.ir[m] *
           std::exp(std::complex<double>(0.0, -omega * static_cast<double>(m)));
  }
  return std::abs(acc);
}

}  // namespace ise
