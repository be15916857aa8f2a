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

#include "ise/emd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace ise {

namespace {

struct Extrema {
  std::vector<double> pos;  // sample indices (integer-valued)
  std::vector<double> val;
};

// Local maxima (or minima when invert) with plateaus collapsed to their
// leftmost sample. Endpoints never count.
Extrema find_extrema(std::span<const double> x, bool minima) {
  Extrema e;
  const std::size_t n = x.size();
  if (n < 3) return e;
  const double sign = minima ? -1.0 : 1.0;
  std::size_t i = 1;
  while (i + 1 < n) {
    const double prev = sign * x[i - 1];
    const double cur = sign * x[i];
    if (cur > prev) {
      std::size_t j = i;
      while (j + 1 < n && sign * x[j + 1] == cur) ++j;
      if (j + 1 < n && sign * x[j + 1] < cur) {
        e.pos.push_back(static_cast<double>(i));
        e.val.push_back(x[i]);
      }
      i = j + 1;
    } else {
      ++i;
    }
  }
  return e;
}

// Mirrors up to two extrema across each frame edge to anchor the spline.
Extrema mirror_boundaries(const Extrema& e, std::size_t n) {
  Extrema out;
  const std::size_t m = e.pos.size();
  const double last = static_cast<double>(n - 1);
  const std::size_t reflect = std::min<std::size_t>(2, m);
  for (std::size_t r = reflect; r > 0; --r) {
    const double p = -e.pos[r - 1];
    if (p < 0.0) {
      out.pos.push_back(p);
      out.val.push_back(e.val[r - 1]);
    }
  }
  out.pos.insert(out.pos.end(), e.pos.begin(), e.pos.end());
  out.val.insert(out.val.end(), e.val.begin(), e.val.end());
  for (std::size_t r = 0; r < reflect; ++r) {
    const double p = 2.0 * last - e.pos[m - 1 - r];
    if (p > last) {
      out.pos.push_back(p);
      out.val.push_back(e.val[m - 1 - r]);
    }
  }
  return out;
}

// Natural cubic spline through (xs, ys), evaluated at 0..n-1.
std::vector<double> spline_envelope(const std::vector<double>& xs,
                                    const std::vector<double>& ys,
                                    std::size_t n) {
  const std::size_t m = xs.size();
  std::vector<double> out(n, 0.0);
  if (m == 1) {
    std::fill(out.begin(), out.end(), ys[0]);
    return out;
  }
  if (m == 2) {
    const double slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = ys[0] + slope * (static_cast<double>(i) - xs[0]);
    return out;
  }

  // Second derivatives from the natural-spline tridiagonal system.
  std::vector<double> d2(m, 0.0);
  std::vector<double> diag(m - 2), off(m > 3 ? m - 3 : 0), rhs(m - 2);
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double hm = xs[i] - xs[i - 1];
    const double hp = xs[i + 1] - xs[i];
    diag[i - 1] = (hm + hp) / 3.0;
    rhs[i - 1] = (ys[i + 1] - ys[i]) / hp - (ys[i] - ys[i - 1]) / hm;
    if (i + 2 < m) off[i - 1] = hp / 6.0;
  }
  for (std::size_t i = 1; i < rhs.size(); ++i) {
    const double q = off[i - 1] / diag[i - 1];
    diag[i] -= q * off[i - 1];
    rhs[i] -= q * rhs[i - 1];
  }
  for (std::size_t i = rhs.size(); i-- > 1;) {
    rhs[i - 1] -= off[i - 1] / diag[i] * rhs[i];
    // Note: this back substitution uses the updated diag from the forward pass.
  }
  for (std::size_t i = 0; i < rhs.size(); ++i) d2[i + 1] = rhs[i] / diag[i];

  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    while (seg + 2 < m && xs[seg + 1] <= t) ++seg;
    const double h = xs[seg + 1] - xs[seg];
    const double u = (xs[seg + 1] - t) / h;
    const double v = 1.0 - u;
    out[i] = u * ys[seg] + v * ys[seg + 1] +
             ((u * u * u - u) * d2[seg] + (v * v * v - v) * d2[seg + 1]) *
                 (h * h) / 6.0;
  }
  return out;
}

double sift_difference(const std::vector<double>& prev,
                       const std::vector<double>& cur) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const double d = prev[i] - cur[i];
    num += d * d;
    den += prev[i] * prev[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

bool imf_property_holds(std::span<const double> x) {
  return std::abs(count_extrema(x) - count_zero_crossings(x)) <= 1;
}

// One sifting pass: subtract the mean of the spline envelopes. Returns false
// when the signal no longer has enough extrema to envelope.
bool sift_once(const std::vector<double>& h, std::vector<double>* out) {
  const std::size_t n = h.size();
  Extrema maxima = find_extrema(h, /*minima=*/false);
  Extrema minima = find_extrema(h, /*minima=*/true);
  if (maxima.pos.size() < 2 || minima.pos.size() < 2) return false;
  Extrema mu = mirror_boundaries(maxima, n);
  Extrema ml = mirror_boundaries(minima, n);
  std::vector<double> upper = spline_envelope(mu.pos, mu.val, n);
  std::vector<double> lower = spline_envelope(ml.pos, ml.val, n);
  out->resize(n);
  for (std::size_t i = 0; i < n; ++i)
    (*out)[i] = h[i] - 0.5 * (upper[i] + lower[i]);
  return true;
}

}  // namespace

int count_extrema(std::span<const double> x) {
  return static_cast<int>(find_extrema(x, false).pos.size() +
                          find_extrema(x, true).pos.size());
}

int count_zero_crossings(std::span<const double> x) {
  int count = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if ((x[i - 1] >= 0.0) != (x[i] >= 0.0)) ++count;
  }
  return count;
}

ImfDecomposition emd(std::span<const double> frame, double sift_sd_threshold,
                     int max_sifts) {
  if (frame.size() < 8)
    throw std::invalid_argument("emd: frame length must be at least 8");
  for (double v : frame) {
    if (!std::isfinite(v)) throw std::invalid_argument("emd: non-finite sample");
  }

  ImfDecomposition dec;
  std::vector<double> residual(frame.begin(), frame.end());
  const int k_cap = static_cast<int>(
      std::ceil(std::log2(static_cast<double>(frame.size()))));

  while (dec.imf_count() < k_cap) {
    std::vector<double> h = residual;
    std::vector<double> sifted;
    if (!sift_once(h, &sifted)) break;  // residual is monotone enough

    int sifts = 1;
    while (sifts < max_sifts) {
      const double sd = sift_difference(h, sifted);
      if (sd < sift_sd_threshold && imf_property_holds(sifted)) break;
      h = std::move(sifted);
      if (!sift_once(h, &sifted)) {
        sifted = h;
        break;
      }
      ++sifts;
    }

    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= sifted[i];
    dec.imfs.push_back(std::move(sifted));
  }

  dec.residual = std::move(residual);
  return dec;
}

ImfDecomposition eemd(std::span<const double> frame, const EemdConfig& cfg) {
  if (cfg.ensemble_size < 1)
    throw std::invalid_argument("eemd: ensemble_size must be >= 1");
  if (!(cfg.noise_std_ratio > 0.0) || cfg.noise_std_ratio > 1.0)
    throw std::invalid_argument("eemd: noise_std_ratio must be in (0, 1]");

  const std::size_t n = frame.size();
  double mean = 0.0;
  for (double v : frame) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : frame) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double sigma = std::sqrt(var);

  if (sigma == 0.0) {
    ImfDecomposition dec = emd(frame, cfg.sift_sd_threshold, cfg.max_sifts);
    dec.ensemble_size = cfg.ensemble_size;
    dec.noise_std_ratio = cfg.noise_std_ratio;
    return dec;
  }

  std::vector<std::vector<double>> sum;
  std::vector<double> noisy(n);
  for (int member = 0; member < cfg.ensemble_size; ++member) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<unsigned long long>(member)));
    std::normal_distribution<double> noise(0.0, cfg.noise_std_ratio * sigma);
    for (std::size_t i = 0; i < n; ++i) noisy[i] = frame[i] + noise(rng);
    ImfDecomposition d = emd(noisy, cfg.sift_sd_threshold, cfg.max_sifts);
    if (d.imf_count() > static_cast<int>(sum.size()))
      sum.resize(d.imfs.size(), std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < d.imfs.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) sum[k][i] += d.imfs[k][i];
    }
  }

  ImfDecomposition dec;
  dec.ensemble_size = cfg.ensemble_size;
  dec.noise_std_ratio = cfg.noise_std_ratio;
  dec.imfs.resize(sum.size());
  const double inv = 1.0 / cfg.ensemble_size;
  for (std::size_t k = 0; k < sum.size(); ++k) {
    dec.imfs[k].resize(n);
    for (std::size_t i = 0; i < n; ++i) dec.imfs[k][i] = sum[k][i] * inv;
  }
  // The residual completes the decomposition exactly; averaging the member
  // residuals would leave an O(noise/sqrt(ensemble)) bias instead.
  dec.residual.assign(frame.begin(), frame.end());
  for (const auto& imf : dec.imfs) {
    for (std::size_t i = 0; i < n; ++i) dec.residual[i] -= imf[i];
  }
  return dec;
}

void write_imf_csv(const std::string& path, const ImfDecomposition& dec) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write imf csv: " + path);
  out << "sample";
  for (int k = 0; k < dec.imf_count(); ++k) out << ",imf" << (k + 1);
  out << ",residual\n";
  for (std::size_t i = 0; i < dec.residual.size(); ++i) {
    out << i;
    for (const auto& imf : dec.imfs) out << ',' << imf[i];
    out << ',' << dec.residual[i] << '\n';
  }
}

}  // namespace ise
