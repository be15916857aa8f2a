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

#include "ise/metrics.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <tuple>

#include "ise/audio.hpp"
#include "ise/fft.hpp"

namespace ise {

namespace estoi_detail {

namespace {

// Symmetric Hann window without zero endpoints (the hanning() convention the
// canonical metric front end uses).
std::vector<double> hanning(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * (i + 1) / (n + 1)));
  }
  return w;
}

std::vector<long> frame_starts(std::size_t len, const EstoiConfig& cfg) {
  std::vector<long> starts;
  if (len <= static_cast<std::size_t>(cfg.frame_length)) return starts;
  for (long s = 0; s + cfg.frame_length < static_cast<long>(len); s += cfg.hop)
    starts.push_back(s);
  return starts;
}

}  // namespace

std::vector<bool> silent_frame_mask(const std::vector<double>& clean,
                                    const EstoiConfig& cfg) {
  const auto starts = frame_starts(clean.size(), cfg);
  const auto w = hanning(cfg.frame_length);
  std::vector<double> energy_db(starts.size());
  double max_db = -1e300;
  for (std::size_t j = 0; j < starts.size(); ++j) {
    double e = 0.0;
    for (int i = 0; i < cfg.frame_length; ++i) {
      const double v = clean[starts[j] + i] * w[static_cast<std::size_t>(i)];
      e += v * v;
    }
    energy_db[j] = 10.0 * std::log10(e / cfg.frame_length + 1e-300);
    max_db = std::max(max_db, energy_db[j]);
  }
  std::vector<bool> keep(starts.size());
  for (std::size_t j = 0; j < starts.size(); ++j)
    keep[j] = energy_db[j] - max_db + cfg.dyn_range_db > 0.0;
  return keep;
}

std::vector<double> remove_silent_frames(const std::vector<double>& x,
                                         const std::vector<bool>& keep,
                                         const EstoiConfig& cfg) {
  const auto starts = frame_starts(x.size(), cfg);
  if (starts.size() != keep.size())
    throw std::invalid_argument("remove_silent_frames: mask size mismatch");
  const auto w = hanning(cfg.frame_length);
  std::size_t kept = 0;
  for (bool k : keep) kept += k ? 1 : 0;
  if (kept == 0) return {};
  std::vector<double> out((kept - 1) * cfg.hop + cfg.frame_length, 0.0);
  std::size_t slot = 0;
  for (std::size_t j = 0; j < starts.size(); ++j) {
    if (!keep[j]) continue;
    const long dst = static_cast<long>(slot) * cfg.hop;
    for (int i = 0; i < cfg.frame_length; ++i)
      out[dst + i] += x[starts[j] + i] * w[static_cast<std::size_t>(i)];
    ++slot;
  }
  return out;
}

std::vector<std::pair<int, int>> band_edges(const EstoiConfig& cfg) {
  const int bins = cfg.fft_size / 2 + 1;
  const double bin_hz =
      static_cast<double>(cfg.metric_rate_hz) / cfg.fft_size;
  auto nearest_bin = [&](double freq) {
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < bins; ++k) {
      const double d = std::abs(k * bin_hz - freq);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  std::vector<std::pair<int, int>> edges(static_cast<std::size_t>(cfg.band_count));
  for (int j = 0; j < cfg.band_count; ++j) {
    const double cf = std::pow(2.0, j / 3.0) * cfg.lowest_center_hz;
    const int lo = nearest_bin(cf * std::pow(2.0, -1.0 / 6.0));
    const int hi = nearest_bin(cf * std::pow(2.0, 1.0 / 6.0));
    edges[static_cast<std::size_t>(j)] = {lo, hi};
  }
  return edges;
}

std::vector<std::vector<double>> band_spectrogram(const std::vector<double>& x,
                                                  const EstoiConfig& cfg) {
  const auto starts = frame_starts(x.size(), cfg);
  const auto w = hanning(cfg.frame_length);
  const auto edges = band_edges(cfg);
  std::vector<std::vector<double>> bands(
      static_cast<std::size_t>(cfg.band_count),
      std::vector<double>(starts.size(), 0.0));
  std::vector<double> padded(static_cast<std::size_t>(cfg.fft_size));
  for (std::size_t m = 0; m < starts.size(); ++m) {
    std::fill(padded.begin(), padded.end(), 0.0);
    for (int i = 0; i < cfg.frame_length; ++i)
      padded[static_cast<std::size_t>(i)] =
          x[starts[m] + i] * w[static_cast<std::size_t>(i)];
    fft::cvec spec = fft::forward_real(padded);
    for (int j = 0; j < cfg.band_count; ++j) {
      double e = 0.0;
      for (int k = edges[static_cast<std::size_t>(j)].first;
           k < edges[static_cast<std::size_t>(j)].second; ++k)
        e += std::norm(spec[static_cast<std::size_t>(k)]);
      bands[static_cast<std::size_t>(j)][m] = std::sqrt(e);
    }
  }
  return bands;
}

namespace {

// Row mean removal + row L2 normalization, then the same per column.
void normalize_segment(std::vector<std::vector<double>>* seg) {
  auto& s = *seg;
  const std::size_t rows = s.size();
  const std::size_t cols = s[0].size();
  for (std::size_t j = 0; j < rows; ++j) {
    double mean = 0.0;
    for (double v : s[j]) mean += v;
    mean /= static_cast<double>(cols);
    double norm = 0.0;
    for (std::size_t n = 0; n < cols; ++n) {
      s[j][n] -= mean;
      norm += s[j][n] * s[j][n];
    }
    norm = std::sqrt(norm) + 1e-20;
    for (std::size_t n = 0; n < cols; ++n) s[j][n] /= norm;
  }
  for (std::size_t n = 0; n < cols; ++n) {
    double mean = 0.0;
    for (std::size_t j = 0; j < rows; ++j) mean += s[j][n];
    mean /= static_cast<double>(rows);
    double norm = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
      s[j][n] -= mean;
      norm += s[j][n] * s[j][n];
    }
    norm = std::sqrt(norm) + 1e-20;
    for (std::size_t j = 0; j < rows; ++j) s[j][n] /= norm;
  }
}

}  // namespace

double estoi_from_bands(const std::vector<std::vector<double>>& clean_bands,
                        const std::vector<std::vector<double>>& degraded_bands,
                        const EstoiConfig& cfg) {
  const std::size_t rows = clean_bands.size();
  if (rows == 0 || degraded_bands.size() != rows)
    throw std::invalid_argument("estoi_from_bands: band count mismatch");
  const std::size_t frames = clean_bands[0].size();
  if (degraded_bands[0].size() != frames)
    throw std::invalid_argument("estoi_from_bands: frame count mismatch");
  const std::size_t seg_len = static_cast<std::size_t>(cfg.segment_frames);
  if (frames < seg_len)
    throw metric_undefined_error(
        "estoi: fewer active frames than one analysis segment");

  std::vector<std::vector<double>> xs(rows, std::vector<double>(seg_len));
  std::vector<std::vector<double>> ys(rows, std::vector<double>(seg_len));
  double total = 0.0;
  const std::size_t segments = frames - seg_len + 1;
  for (std::size_t m = 0; m < segments; ++m) {
    for (std::size_t j = 0; j < rows; ++j) {
      for (std::size_t n = 0; n < seg_len; ++n) {
        xs[j][n] = clean_bands[j][m + n];
        ys[j][n] = degraded_bands[j][m + n];
      }
    }
    normalize_segment(&xs);
    normalize_segment(&ys);
    double d = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
      for (std::size_t n = 0; n < seg_len; ++n) d += xs[j][n] * ys[j][n];
    }
    total += d / static_cast<double>(seg_len);
  }
  return total / static_cast<double>(segments);
}

}  // namespace estoi_detail

double estoi(const Waveform& clean, const Waveform& degraded,
             const EstoiConfig& cfg) {
  validate(clean);
  validate(degraded);
  if (clean.sample_rate != degraded.sample_rate)
    throw std::invalid_argument("estoi: sample rates differ");

  Waveform x10 = resample(clean, cfg.metric_rate_hz);
  Waveform y10 = resample(degraded, cfg.metric_rate_hz);
  const std::size_t len = std::min(x10.samples.size(), y10.samples.size());
  x10.samples.resize(len);
  y10.samples.resize(len);

  auto keep = estoi_detail::silent_frame_mask(x10.samples, cfg);
  if (keep.empty() || std::none_of(keep.begin(), keep.end(), [](bool b) { return b; }))
    throw metric_undefined_error("estoi: clean reference is silent");
  if (rms(x10.samples) <= 0.0)
    throw metric_undefined_error("estoi: clean reference is silent");

  auto x_act = estoi_detail::remove_silent_frames(x10.samples, keep, cfg);
  auto y_act = estoi_detail::remove_silent_frames(y10.samples, keep, cfg);
  auto clean_bands = estoi_detail::band_spectrogram(x_act, cfg);
  auto degraded_bands = estoi_detail::band_spectrogram(y_act, cfg);
  if (clean_bands[0].empty())
    throw metric_undefined_error("estoi: signal too short");
  return estoi_detail::estoi_from_bands(clean_bands, degraded_bands, cfg);
}

StiCategory sti_category(double score) {
  if (score < 0.30) return StiCategory::bad;
  if (score < 0.45) return StiCategory::poor;
  if (score < 0.60) return StiCategory::fair;
  if (score < 0.75) return StiCategory::good;
  return StiCategory::excellent;
}

std::string to_string(StiCategory category) {
  switch (category) {
    case StiCategory::bad: return "bad";
    case StiCategory::poor: return "poor";
    case StiCategory::fair: return "fair";
    case StiCategory::good: return "good";
    case StiCategory::excellent: return "excellent";
  }
  return "bad";
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2)
    throw std::invalid_argument("one_way_anova: need at least 2 groups");
  long total = 0;
  double grand_sum = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2)
      throw std::invalid_argument("one_way_anova: each group needs >= 2 observations");
    total += static_cast<long>(g.size());
    for (double v : g) grand_sum += v;
  }
  const double grand_mean = grand_sum / static_cast<double>(total);

  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= static_cast<double>(g.size());
    ssb += static_cast<double>(g.size()) * (mean - grand_mean) * (mean - grand_mean);
    for (double v : g) ssw += (v - mean) * (v - mean);
  }
  if (ssw <= 0.0)
    throw degenerate_variance_error("one_way_anova: zero within-group variance");

  AnovaResult res;
  res.group_count = static_cast<int>(groups.size());
  res.total_observations = static_cast<int>(total);
  const double df1 = static_cast<double>(res.group_count - 1);
  const double df2 = static_cast<double>(total - res.group_count);
  res.f_statistic = (ssb / df1) / (ssw / df2);
  boost::math::fisher_f_distribution<double> dist(df1, df2);
  res.p_value = boost::math::cdf(boost::math::complement(dist, res.f_statistic));
  return res;
}

namespace {

double quantile(std::vector<double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = (static_cast<double>(n) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

struct Stats {
  double mean, median, q1, q3, min, max;
};

Stats compute_stats(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  Stats s;
  s.mean = sum / static_cast<double>(v.size());
  s.median = quantile(v, 0.5);
  s.q1 = quantile(v, 0.25);
  s.q3 = quantile(v, 0.75);
  s.min = v.front();
  s.max = v.back();
  return s;
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<EvalRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("summarize: no records");
  using Key = std::tuple<std::string, double, std::string>;
  std::map<Key, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : records) {
    auto& bucket = groups[{r.noise, r.snr_db, r.method}];
    bucket.first.push_back(r.estoi);
    bucket.second.push_back(r.delta_estoi);
  }
  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, bucket] : groups) {
    SummaryRow row;
    row.noise = std::get<0>(key);
    row.snr_db = std::get<1>(key);
    row.method = std::get<2>(key);
    row.count = static_cast<int>(bucket.first.size());
    const Stats e = compute_stats(bucket.first);
    const Stats d = compute_stats(bucket.second);
    row.estoi_mean = e.mean;
    row.estoi_median = e.median;
    row.estoi_q1 = e.q1;
    row.estoi_q3 = e.q3;
    row.estoi_min = e.min;
    row.estoi_max = e.max;
    row.delta_mean = d.mean;
    row.delta_median = d.median;
    row.delta_q1 = d.q1;
    row.delta_q3 = d.q3;
    row.delta_min = d.min;
    row.delta_max = d.max;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt_snr(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void write_records_csv(const std::string& path,
                       const std::vector<EvalRecord>& records) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write csv: " + path);
  out << "utterance,noise,snr_db,method,estoi,delta_estoi,sti_category\n";
  for (const auto& r : records) {
    out << r.utterance << ',' << r.noise << ',' << fmt_snr(r.snr_db) << ','
        << r.method << ',' << fmt(r.estoi) << ',' << fmt(r.delta_estoi) << ','
        << to_string(r.sti) << '\n';
  }
}

void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write csv: " + path);
  out << "noise,snr_db,method,count,estoi_mean,estoi_median,estoi_q1,estoi_q3,"
         "estoi_min,estoi_max,delta_estoi_mean,delta_estoi_median,"
         "delta_estoi_q1,delta_estoi_q3,delta_estoi_min,delta_estoi_max\n";
  for (const auto& r : rows) {
    out << r.noise << ',' << fmt_snr(r.snr_db) << ',' << r.method << ','
        << r.count << ',' << fmt(r.estoi_mean) << ',' << fmt(r.estoi_median)
        << ',' << fmt(r.estoi_q1) << ',' << fmt(r.estoi_q3) << ','
        << fmt(r.estoi_min) << ',' << fmt(r.estoi_max) << ','
        << fmt(r.delta_mean) << ',' << fmt(r.delta_median) << ','
        << fmt(r.delta_q1) << ',' << fmt(r.delta_q3) << ',' << fmt(r.delta_min)
        << ',' << fmt(r.delta_max) << '\n';
  }
}

void write_anova_csv(const std::string& path, const std::vector<AnovaRow>& rows) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write csv: " + path);
  out << "noise,snr_db,metric,f_stat,p_value\n";
  for (const auto& r : rows) {
    char pbuf[64];
    std::snprintf(pbuf, sizeof(pbuf), "%.6e", r.p_value);
    out << r.noise << ',' << fmt_snr(r.snr_db) << ',' << r.metric << ','
        << fmt(r.f_stat) << ',' << pbuf << '\n';
  }
}

}  // namespace ise
