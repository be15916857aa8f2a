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

// Batch experiment front end: mix, enhance, evaluate, calibrate.
//
// Exit codes: 0 success, 1 usage, 2 I/O or format error, 3 pipeline error
// (pitch unavailable / calibration impossible), 4 partial batch failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "ise/audio.hpp"
#include "ise/calibrate.hpp"
#include "ise/enhance.hpp"
#include "ise/metrics.hpp"
#include "ise/pitch.hpp"
#include "ise/types.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitPipeline = 3;
constexpr int kExitPartial = 4;

struct CommonOptions {
  unsigned long long seed = 0;
  int jobs = 1;
};

ise::GainProfile resolve_profile(const std::string& name_or_path) {
  if (auto builtin = ise::find_builtin_profile(name_or_path)) return *builtin;
  if (name_or_path.size() > 5 &&
      name_or_path.substr(name_or_path.size() - 5) == ".json")
    return ise::load_profile_json(name_or_path);
  throw std::invalid_argument("unknown profile '" + name_or_path +
                              "' (builtins: ise_asd, gtf_f0, unit; or a .json path)");
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ise::io_error("cannot write json: " + path);
  out << j.dump(2) << '\n';
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

// ---------------------------------------------------------------------------

int cmd_mix(const std::string& clean_path, const std::string& noise_path,
            double snr_db, const std::string& out_path, long offset,
            bool random_offset, const CommonOptions& common) {
  ise::Waveform clean = ise::load_wav(clean_path);
  ise::Waveform noise = ise::load_wav(noise_path);
  if (noise.sample_rate != clean.sample_rate)
    noise = ise::resample(noise, clean.sample_rate);

  ise::MixSpec spec;
  spec.target_snr_db = snr_db;
  spec.noise = std::move(noise);
  spec.offset_policy = random_offset ? ise::NoiseOffsetPolicy::random
                                     : ise::NoiseOffsetPolicy::fixed;
  spec.fixed_offset = offset;
  spec.seed = common.seed;

  ise::MixResult res = ise::mix_at_snr(clean, spec);
  const double scale = ise::save_wav(out_path, res.mixed);

  json sidecar;
  sidecar["clean"] = clean_path;
  sidecar["noise"] = noise_path;
  sidecar["target_snr_db"] = snr_db;
  sidecar["achieved_snr_db"] = res.achieved_snr_db;
  sidecar["noise_scale"] = res.noise_scale;
  sidecar["noise_offset"] = res.noise_offset;
  sidecar["scale_factor"] = scale;
  write_json(out_path + ".json", sidecar);
  std::cout << "wrote " << out_path << " (achieved SNR "
            << res.achieved_snr_db << " dB)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_enhance(const std::string& in_path, const std::string& out_path,
                const std::string& vuv_path, const std::string& profile_name,
                const std::string& bandwidth_rule, int eemd_ensemble,
                double eemd_noise_ratio, bool verify_identity,
                const std::string& pitch_csv, const CommonOptions& common) {
  ise::Waveform input = ise::load_wav(in_path);
  ise::FramePlan plan = ise::plan_frames(input);
  ise::VoicedMask mask = vuv_path.empty()
                             ? ise::detect_vuv(input, plan)
                             : ise::load_vuv_labels(vuv_path, plan);

  ise::EnhancementConfig cfg;
  cfg.profile = resolve_profile(profile_name);
  cfg.eemd.ensemble_size = eemd_ensemble;
  cfg.eemd.noise_std_ratio = eemd_noise_ratio;
  cfg.eemd.seed = common.seed;
  cfg.bandwidth_rule = bandwidth_rule == "harmonic-scaled"
                           ? ise::BandwidthRule::harmonic_scaled
                           : ise::BandwidthRule::fixed;

  ise::EnhancementResult result;
  bool pitch_failed = false;
  if (mask.voiced_count() == 0) {
    result.output = input;
    result.report.warnings.push_back("no voiced frames; input copied through");
    pitch_failed = true;
  } else {
    try {
      ise::PitchTrack track =
          ise::estimate_pitch_track(input, plan, mask, cfg.eemd, cfg.pitch);
      if (!pitch_csv.empty()) ise::write_pitch_csv(pitch_csv, track, plan, mask);
      result = ise::enhance_utterance(input, plan, mask, track, cfg);
    } catch (const ise::pitch_unavailable_error& e) {
      result.output = input;
      result.report.pitch_unavailable = true;
      result.report.voiced_frames = mask.voiced_count();
      result.report.warnings.push_back(std::string("pitch unavailable: ") +
                                       e.what());
      pitch_failed = true;
    }
  }

  const double scale = ise::save_wav(out_path, result.output);

  json meta;
  meta["input"] = in_path;
  meta["profile"] = cfg.profile.name;
  meta["gains"] = cfg.profile.gains;
  meta["bandwidth_rule"] =
      cfg.bandwidth_rule == ise::BandwidthRule::fixed ? "fixed" : "harmonic-scaled";
  meta["vuv_source"] = vuv_path.empty() ? "detector" : "external-file";
  meta["seed"] = common.seed;
  meta["voiced_frames"] = result.report.voiced_frames;
  meta["estimated_frames"] = result.report.estimated_frames;
  meta["fallback_frames"] = result.report.fallback_frames;
  meta["clamped_frames"] = result.report.clamped_frames;
  meta["median_f0_hz"] = result.report.median_f0_hz;
  meta["scale_factor"] = scale;
  meta["warnings"] = result.report.warnings;
  write_json(out_path + ".json", meta);

  if (verify_identity) {
    double max_diff = 0.0;
    const long lo = plan.frame_length;
    const long hi = plan.signal_length - plan.frame_length;
    for (long i = lo; i < hi; ++i)
      max_diff = std::max(max_diff,
                          std::abs(result.output.samples[i] - input.samples[i]));
    std::cout << "identity check: max interior |out - in| = " << max_diff << '\n';
    if (max_diff > 1e-6) {
      std::cerr << "identity check failed (profile " << cfg.profile.name << ")\n";
      return kExitPipeline;
    }
  }
  if (pitch_failed) {
    for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
    return kExitPipeline;
  }
  std::cout << "wrote " << out_path << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ManifestRow {
  std::string clean_path;
  std::string vuv_path;  // optional
  std::string noise_path;
  double snr_db = 0.0;
  std::vector<std::string> methods;
};

// Quality scoring stays external: when a command is configured, it is run as
// `cmd <clean.wav> <degraded.wav>` and must print one float on stdout.
std::optional<double> external_quality_score(const std::string& command,
                                             const std::string& clean_path,
                                             const std::string& degraded_path) {
  const std::string cmd = command + " " + clean_path + " " + degraded_path;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return std::nullopt;
  char buf[256] = {0};
  const bool got = fgets(buf, sizeof(buf), pipe) != nullptr;
  const int rc = pclose(pipe);
  if (!got || rc != 0) return std::nullopt;
  try {
    return std::stod(buf);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<ManifestRow> load_experiment_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ise::io_error("cannot open manifest: " + path);
  std::vector<ManifestRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ManifestRow row;
    std::string snr, methods;
    if (!std::getline(ls, row.clean_path, ',')) continue;
    if (row.clean_path == "clean_path") continue;  // header
    std::getline(ls, row.vuv_path, ',');
    std::getline(ls, row.noise_path, ',');
    std::getline(ls, snr, ',');
    std::getline(ls, methods);
    row.snr_db = std::stod(snr);
    std::istringstream ms(methods);
    std::string m;
    while (std::getline(ms, m, ';'))
      if (!m.empty()) row.methods.push_back(m);
    if (row.methods.empty())
      throw ise::format_error("manifest row without methods: " + line);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ise::format_error("manifest has no rows: " + path);
  return rows;
}

int cmd_evaluate(const std::string& manifest_path, const std::string& out_dir,
                 const std::string& pesq_cmd, const CommonOptions& common) {
  const auto rows = load_experiment_manifest(manifest_path);
  for (const auto& row : rows) {
    for (const auto& m : row.methods) {
      if (m != "unprocessed" && m != "unit" && m != "gtf_f0" && m != "ise_asd")
        throw std::invalid_argument("unknown method in manifest: " + m);
    }
  }
  fs::create_directories(out_dir);
  const std::string scratch = (fs::path(out_dir) / "wav").string();
  if (!pesq_cmd.empty()) fs::create_directories(scratch);

  std::vector<std::vector<ise::EvalRecord>> per_row(rows.size());
  std::vector<std::vector<std::optional<double>>> per_row_quality(rows.size());
  std::vector<std::string> failures;
  std::mutex failures_mu;

  auto run_row = [&](std::size_t r) {
    const ManifestRow& row = rows[r];
    try {
      ise::Waveform clean = ise::load_wav(row.clean_path);
      ise::Waveform noise = ise::load_wav(row.noise_path);
      if (noise.sample_rate != clean.sample_rate)
        noise = ise::resample(noise, clean.sample_rate);

      ise::MixSpec spec;
      spec.target_snr_db = row.snr_db;
      spec.noise = std::move(noise);
      spec.offset_policy = ise::NoiseOffsetPolicy::random;
      spec.seed = ise::mix_seed(common.seed, 2 * r);
      ise::Waveform mixed = ise::mix_at_snr(clean, spec).mixed;

      ise::FramePlan plan = ise::plan_frames(mixed);
      ise::VoicedMask mask = row.vuv_path.empty()
                                 ? ise::detect_vuv(clean, plan)
                                 : ise::load_vuv_labels(row.vuv_path, plan);

      const double estoi_unp = ise::estoi(clean, mixed);

      bool needs_pitch = false;
      for (const auto& m : row.methods) needs_pitch |= (m != "unprocessed");
      std::optional<ise::PitchTrack> track;
      std::string pitch_warning;
      if (needs_pitch && mask.voiced_count() > 0) {
        ise::EemdConfig eemd_cfg;
        eemd_cfg.seed = ise::mix_seed(common.seed, 2 * r + 1);
        try {
          track = ise::estimate_pitch_track(mixed, plan, mask, eemd_cfg, {});
        } catch (const ise::pitch_unavailable_error& e) {
          pitch_warning = e.what();
        }
      }

      for (const auto& method : row.methods) {
        ise::EvalRecord rec;
        rec.utterance = stem_of(row.clean_path);
        rec.noise = stem_of(row.noise_path);
        rec.snr_db = row.snr_db;
        rec.method = method;
        const ise::Waveform* scored = &mixed;
        ise::EnhancementResult enhanced;
        if (method == "unprocessed") {
          rec.estoi = estoi_unp;
        } else if (!track.has_value()) {
          rec.estoi = estoi_unp;  // enhancement degraded to passthrough
          std::lock_guard<std::mutex> lock(failures_mu);
          failures.push_back("row " + std::to_string(r) + " method " + method +
                             ": pitch unavailable (" + pitch_warning +
                             "), scored as passthrough");
        } else {
          ise::EnhancementConfig cfg;
          cfg.profile = *ise::find_builtin_profile(method);
          enhanced = ise::enhance_utterance(mixed, plan, mask, *track, cfg);
          rec.estoi = ise::estoi(clean, enhanced.output);
          scored = &enhanced.output;
        }
        rec.delta_estoi = rec.estoi - estoi_unp;
        rec.sti = ise::sti_category(rec.estoi);
        std::optional<double> quality;
        if (!pesq_cmd.empty()) {
          char name[256];
          std::snprintf(name, sizeof(name), "%s/%s_%s_%g_%s.wav",
                        scratch.c_str(), rec.utterance.c_str(),
                        rec.noise.c_str(), rec.snr_db, method.c_str());
          ise::save_wav(name, *scored);
          quality = external_quality_score(pesq_cmd, row.clean_path, name);
          if (!quality.has_value()) {
            std::lock_guard<std::mutex> lock(failures_mu);
            failures.push_back("row " + std::to_string(r) + " method " + method +
                               ": external quality command failed");
          }
        }
        per_row_quality[r].push_back(quality);
        per_row[r].push_back(std::move(rec));
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failures_mu);
      failures.push_back("row " + std::to_string(r) + " (" + row.clean_path +
                         "): " + e.what());
    }
  };

  const int jobs = std::max(1, common.jobs);
  if (jobs == 1) {
    for (std::size_t r = 0; r < rows.size(); ++r) run_row(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int t = 0; t < jobs; ++t) {
      workers.emplace_back([&] {
        while (true) {
          const std::size_t r = next.fetch_add(1);
          if (r >= rows.size()) break;
          run_row(r);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  std::vector<std::pair<ise::EvalRecord, std::optional<double>>> cells;
  for (std::size_t r = 0; r < per_row.size(); ++r) {
    for (std::size_t i = 0; i < per_row[r].size(); ++i)
      cells.emplace_back(std::move(per_row[r][i]), per_row_quality[r][i]);
  }
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.utterance, a.first.noise, a.first.snr_db,
                    a.first.method) <
           std::tie(b.first.utterance, b.first.noise, b.first.snr_db,
                    b.first.method);
  });
  std::vector<ise::EvalRecord> records;
  records.reserve(cells.size());
  for (auto& cell : cells) records.push_back(std::move(cell.first));

  if (!records.empty()) {
    const std::string records_path = (fs::path(out_dir) / "records.csv").string();
    if (pesq_cmd.empty()) {
      ise::write_records_csv(records_path, records);
    } else {
      // Same schema plus the optional external-quality column.
      std::ofstream out(records_path);
      out << "utterance,noise,snr_db,method,estoi,delta_estoi,sti_category,pesq\n";
      for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        char line[512];
        std::snprintf(line, sizeof(line), "%s,%s,%g,%s,%.6f,%.6f,%s,",
                      rec.utterance.c_str(), rec.noise.c_str(), rec.snr_db,
                      rec.method.c_str(), rec.estoi, rec.delta_estoi,
                      ise::to_string(rec.sti).c_str());
        out << line;
        if (cells[i].second.has_value()) out << *cells[i].second;
        out << '\n';
      }
    }
    ise::write_summary_csv((fs::path(out_dir) / "summary.csv").string(),
                           ise::summarize(records));

    // One ANOVA per (noise, snr): method groups of ESTOI scores.
    std::map<std::pair<std::string, double>,
             std::map<std::string, std::vector<double>>> cells;
    for (const auto& rec : records)
      cells[{rec.noise, rec.snr_db}][rec.method].push_back(rec.estoi);
    std::vector<ise::AnovaRow> anova_rows;
    for (const auto& [key, by_method] : cells) {
      std::vector<std::vector<double>> groups;
      for (const auto& [method, scores] : by_method)
        if (scores.size() >= 2) groups.push_back(scores);
      if (groups.size() < 2) continue;
      try {
        ise::AnovaResult res = ise::one_way_anova(groups);
        anova_rows.push_back(
            {key.first, key.second, "estoi", res.f_statistic, res.p_value});
      } catch (const ise::degenerate_variance_error& e) {
        std::cerr << "anova skipped for " << key.first << " @ " << key.second
                  << " dB: " << e.what() << '\n';
      }
    }
    ise::write_anova_csv((fs::path(out_dir) / "anova.csv").string(), anova_rows);
  }

  for (const auto& f : failures) std::cerr << "cell failure: " << f << '\n';
  std::cout << "evaluated " << records.size() << " cells, " << failures.size()
            << " failures; reports in " << out_dir << '\n';
  if (!failures.empty()) return kExitPartial;
  if (records.empty()) return kExitIo;
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_calibrate(const std::string& manifest_path, int filter_count,
                  const std::string& out_dir, const CommonOptions& common) {
  const auto items = ise::load_training_manifest(manifest_path);
  if (items.empty()) throw ise::format_error("empty manifest: " + manifest_path);
  fs::create_directories(out_dir);

  ise::CalibrateConfig cfg;
  cfg.seed = common.seed;
  ise::CalibrationRun run = ise::calibrate_gains(items, cfg, filter_count);

  ise::write_profile_json((fs::path(out_dir) / "profile.json").string(),
                          run.profile);
  ise::write_trace_csv((fs::path(out_dir) / "traces.csv").string(), run);
  std::cout << "calibrated gains:";
  for (double g : run.profile.gains) std::cout << ' ' << g;
  std::cout << "\nmean ESTOI all-ones " << run.allones_mean_estoi << " -> final "
            << run.final_mean_estoi << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speech intelligibility enhancement toolkit"};
  app.require_subcommand(1);

  CommonOptions common;
  app.add_option("--seed", common.seed, "seed for all randomness");
  app.add_option("--jobs", common.jobs, "worker threads for batch commands");
  app.set_config("--config", "", "read option defaults from an INI file (flags win)");

  auto* mix = app.add_subcommand("mix", "mix speech with noise at a target SNR");
  std::string mix_clean, mix_noise, mix_out;
  double mix_snr = 0.0;
  long mix_offset = 0;
  bool mix_random_offset = false;
  mix->add_option("clean", mix_clean, "clean speech wav")->required();
  mix->add_option("noise", mix_noise, "noise wav")->required();
  mix->add_option("out", mix_out, "output wav")->required();
  mix->add_option("--snr", mix_snr, "target SNR in dB")->required();
  mix->add_option("--offset", mix_offset, "fixed noise offset in samples");
  mix->add_flag("--random-offset", mix_random_offset,
                "draw the noise offset from --seed");

  auto* enhance = app.add_subcommand("enhance", "harmonic-band enhancement");
  std::string enh_in, enh_out, enh_vuv, enh_profile = "ise_asd";
  std::string enh_rule = "fixed", enh_pitch_csv;
  int enh_ensemble = 50;
  double enh_noise_ratio = 0.2;
  bool enh_verify = false;
  enhance->add_option("input", enh_in, "input wav")->required();
  enhance->add_option("output", enh_out, "output wav")->required();
  enhance->add_option("--vuv", enh_vuv, "V/UV label file (else detector)");
  enhance->add_option("--profile", enh_profile,
                      "gain profile: ise_asd | gtf_f0 | unit | <file>.json");
  enhance->add_option("--bandwidth-rule", enh_rule,
                      "fixed | harmonic-scaled")
      ->check(CLI::IsMember({"fixed", "harmonic-scaled"}));
  enhance->add_option("--eemd-ensemble", enh_ensemble, "EEMD ensemble size");
  enhance->add_option("--eemd-noise-ratio", enh_noise_ratio,
                      "EEMD noise std ratio");
  enhance->add_flag("--verify-identity", enh_verify,
                    "fail unless output matches input on interior samples");
  enhance->add_option("--pitch-csv", enh_pitch_csv, "export the pitch track");

  auto* evaluate = app.add_subcommand("evaluate", "batch ESTOI evaluation");
  std::string eval_manifest, eval_out = "reports";
  evaluate->add_option("--manifest", eval_manifest,
                       "csv: clean_path,vuv_path,noise_path,snr_db,methods "
                       "(methods ;-separated)")
      ->required();
  evaluate->add_option("--out-dir", eval_out, "report directory");
  std::string eval_pesq_cmd;
  evaluate->add_option("--pesq-cmd", eval_pesq_cmd,
                       "external quality tool run as `cmd clean.wav "
                       "degraded.wav`; adds a pesq column to records.csv");

  auto* calibrate = app.add_subcommand("calibrate", "greedy gain search");
  std::string cal_manifest, cal_out = "calibration";
  int cal_filters = 10;
  calibrate->add_option("--manifest", cal_manifest,
                        "csv: clean_path,noise_path,snr_db")
      ->required();
  calibrate->add_option("--filters", cal_filters, "number of gains to fit");
  calibrate->add_option("--out-dir", cal_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (mix->parsed())
      return cmd_mix(mix_clean, mix_noise, mix_snr, mix_out, mix_offset,
                     mix_random_offset, common);
    if (enhance->parsed())
      return cmd_enhance(enh_in, enh_out, enh_vuv, enh_profile, enh_rule,
                         enh_ensemble, enh_noise_ratio, enh_verify,
                         enh_pitch_csv, common);
    if (evaluate->parsed())
      return cmd_evaluate(eval_manifest, eval_out, eval_pesq_cmd, common);
    if (calibrate->parsed())
      return cmd_calibrate(cal_manifest, cal_filters, cal_out, common);
  } catch (const ise::pitch_unavailable_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPipeline;
  } catch (const ise::calibration_impossible_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPipeline;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}
