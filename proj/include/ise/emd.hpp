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

#ifndef ISE_EMD_HPP_
#define ISE_EMD_HPP_

#include <span>
#include <vector>

#include "ise/types.hpp"

namespace ise {

/// Result of decomposing one frame into intrinsic mode functions plus a
/// residual. The IMFs and residual always sum back to the input frame.
struct ImfDecomposition {
  std::vector<std::vector<double>> imfs;
  std::vector<double> residual;
  int ensemble_size = 1;
  double noise_std_ratio = 0.0;

  int imf_count() const { return static_cast<int>(imfs.size()); }
};

struct EemdConfig {
  int ensemble_size = 50;
  double noise_std_ratio = 0.2;
  unsigned long long seed = 0;
  // Sifting stop: SD between successive sifts below this, at most max_sifts.
  double sift_sd_threshold = 0.2;
  int max_sifts = 10;
};

/// Plain EMD by sifting with natural cubic-spline envelopes; boundary
/// extrema are mirrored across the frame edges. A frame with fewer than two
/// maxima or two minima comes back whole as the residual (no IMFs).
ImfDecomposition emd(std::span<const double> frame,
                     double sift_sd_threshold = 0.2, int max_sifts = 10);

/// Ensemble EMD: each member decomposes frame + white noise of
/// std = noise_std_ratio * std(frame); IMFs are averaged index-wise with
/// shorter members zero-extended. Deterministic given the seed. A
/// zero-variance frame falls back to plain EMD.
ImfDecomposition eemd(std::span<const double> frame, const EemdConfig& cfg);

/// Extrema count and zero-crossing count of a sequence; an IMF satisfies
/// |extrema - zero crossings| <= 1.
int count_extrema(std::span<const double> x);
int count_zero_crossings(std::span<const double> x);

void write_imf_csv(const std::string& path, const ImfDecomposition& dec);

}  // namespace ise

#endif  // ISE_EMD_HPP_
