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

#include "ise/fft.hpp"

#include <fftw3.h>

#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>

namespace ise::fft {

namespace {

// fftw planning is not thread safe; execution through the new-array API is.
// Plans are created once per (size, direction) with FFTW_UNALIGNED so they
// can run on arbitrary caller buffers.
class PlanCache {
 public:
  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    cvec in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
    fftw_plan p = fftw_plan_dft_1d(
        n, reinterpret_cast<fftw_complex*>(in.data()),
        reinterpret_cast<fftw_complex*>(out.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw std::runtime_error("fftw plan creation failed");
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

cvec execute(const cvec& in, int sign) {
  if (in.empty()) return {};
  const int n = static_cast<int>(in.size());
  fftw_plan p = cache().get(n, sign);
  cvec tmp(in);  // fftw may clobber input
  cvec out(in.size());
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(tmp.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

cvec forward(const cvec& in) { return execute(in, FFTW_FORWARD); }

cvec inverse(const cvec& in) {
  cvec out = execute(in, FFTW_BACKWARD);
  const double scale = out.empty() ? 1.0 : 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= scale;
  return out;
}

cvec forward_real(std::span<const double> in) {
  cvec c(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) c[i] = in[i];
  return forward(c);
}

cvec analytic_signal(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  cvec spec = forward_real(x);
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) spec[k] *= 2.0;
  // DC stays; for even n the Nyquist bin spec[half] stays as well.
  for (std::size_t k = half + 1; k < n; ++k) spec[k] = 0.0;
  if (n % 2 != 0) {
    for (std::size_t k = (n + 1) / 2; k < n; ++k) spec[k] = 0.0;
  }
  return inverse(spec);
}

std::vector<double> convolve_fft(std::span<const double> a,
                                 std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t n = next_pow2(out_len);
  cvec fa(n), fb(n);
  for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
  fa = forward(fa);
  fb = forward(fb);
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  fa = inverse(fa);
  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
  return out;
}

std::vector<double> convolve_direct(std::span<const double> a,
                                    std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
  }
  return out;
}

}  // namespace ise::fft
