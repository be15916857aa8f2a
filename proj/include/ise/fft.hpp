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

#ifndef ISE_FFT_HPP_
#define ISE_FFT_HPP_

#include <complex>
#include <span>
#include <vector>

namespace ise::fft {

using cvec = std::vector<std::complex<double>>;

/// Forward DFT, any length. Backed by FFTW3 with a process-wide plan cache;
/// safe to call from multiple threads.
cvec forward(const cvec& in);

/// Inverse DFT scaled by 1/N.
cvec inverse(const cvec& in);

cvec forward_real(std::span<const double> in);

/// Analytic signal via one-sided spectrum construction: zero the negative
/// frequencies, double the positive ones, keep DC (and Nyquist for even N).
cvec analytic_signal(std::span<const double> x);

/// Linear convolution, output length a.size() + b.size() - 1.
std::vector<double> convolve_fft(std::span<const double> a,
                                 std::span<const double> b);

/// O(n*m) reference convolution; the independent route for equivalence tests.
std::vector<double> convolve_direct(std::span<const double> a,
                                    std::span<const double> b);

}  // namespace ise::fft

#endif  // ISE_FFT_HPP_
