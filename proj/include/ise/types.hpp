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

#ifndef ISE_TYPES_HPP_
#define ISE_TYPES_HPP_

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ise {

/// Mono audio buffer. Samples are dimensionless, nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  Waveform() = default;
  Waveform(std::vector<double> s, int rate)
      : samples(std::move(s)), sample_rate(rate) {}

  std::size_t size() const { return samples.size(); }
  double duration_sec() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

/// Throws std::invalid_argument if w violates the Waveform invariants
/// (positive rate, at least one sample, all samples finite).
void validate(const Waveform& w);

double rms(const std::vector<double>& x);
double mean_power(const std::vector<double>& x);

// Domain error hierarchy. I/O and format problems are distinct from
// pipeline-level failures so the CLI can map them to different exit codes.

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class labels_incomplete_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class degenerate_input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class pitch_unavailable_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class filter_out_of_band_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class metric_undefined_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class degenerate_variance_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class calibration_impossible_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// splitmix64 bit mixer; used to derive independent per-frame / per-cell
/// RNG seeds from one user-facing seed.
inline unsigned long long mix_seed(unsigned long long seed,
                                   unsigned long long salt) {
  unsigned long long z = seed + 0x9E3779B97f4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace ise

#endif  // ISE_TYPES_HPP_
