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

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ise/audio.hpp"
#include "synth.hpp"

using namespace ise;
using json = nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args) {
  const std::string dir = synth::make_temp_dir("ise_cli_out");
  const std::string out_path = dir + "/stdout.txt";
  const std::string cmd =
      std::string(ISETK_BIN) + " " + args + " >" + out_path + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  res.stdout_text = ss.str();
  return res;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  json j;
  in >> j;
  return j;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("mix writes the wav and an achieved-SNR sidecar") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  auto utt = synth::utterance(301, 16000, 1.2);
  save_wav(dir + "/clean.wav", utt.wav);
  save_wav(dir + "/noise.wav", synth::white_noise(1.5, 16000, 302, 0.2));

  auto res = run_cli("mix " + dir + "/clean.wav " + dir + "/noise.wav " + dir +
                     "/mixed.wav --snr 0");
  CHECK(res.exit_code == 0);
  json sidecar = read_json(dir + "/mixed.wav.json");
  CHECK(std::abs(sidecar["achieved_snr_db"].get<double>() - 0.0) < 0.01);
  CHECK_NOTHROW(load_wav(dir + "/mixed.wav"));
}

TEST_CASE("mix with a missing noise file fails with a diagnostic") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  auto utt = synth::utterance(303, 16000, 1.0);
  save_wav(dir + "/clean.wav", utt.wav);
  auto res = run_cli("mix " + dir + "/clean.wav " + dir + "/nope.wav " + dir +
                     "/out.wav --snr 0");
  CHECK(res.exit_code == 2);
  CHECK(res.stdout_text.find("error") != std::string::npos);
}

TEST_CASE("usage errors exit with code 1") {
  auto res = run_cli("mix");
  CHECK(res.exit_code == 1);
  res = run_cli("no-such-command");
  CHECK(res.exit_code == 1);
}

TEST_CASE("enhance with the unit profile passes --verify-identity") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  auto utt = synth::utterance(304, 16000, 1.2);
  save_wav(dir + "/in.wav", utt.wav);
  synth::write_label_file(dir + "/in.lab", utt.regions);

  auto res = run_cli("--seed 3 enhance " + dir + "/in.wav " + dir +
                     "/out.wav --vuv " + dir +
                     "/in.lab --profile unit --eemd-ensemble 10 "
                     "--verify-identity");
  CHECK(res.exit_code == 0);
  CHECK(res.stdout_text.find("identity check") != std::string::npos);
}

TEST_CASE("enhance metadata echoes the published gain sets") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  auto utt = synth::utterance(305, 16000, 1.2);
  save_wav(dir + "/in.wav", utt.wav);
  synth::write_label_file(dir + "/in.lab", utt.regions);

  auto res = run_cli("--seed 3 enhance " + dir + "/in.wav " + dir +
                     "/out.wav --vuv " + dir +
                     "/in.lab --eemd-ensemble 10 --pitch-csv " + dir +
                     "/pitch.csv");
  CHECK(res.exit_code == 0);
  json meta = read_json(dir + "/out.wav.json");
  CHECK(meta["profile"] == "ise_asd");
  const std::vector<double> expected = {10.0, 10.0, 4.5,  3.5, 2.5,
                                        2.0,  1.75, 1.75, 1.5, 1.25};
  CHECK(meta["gains"].get<std::vector<double>>() == expected);
  CHECK(meta["vuv_source"] == "external-file");

  // Pitch CSV came out alongside.
  std::ifstream pitch(dir + "/pitch.csv");
  std::string header;
  std::getline(pitch, header);
  CHECK(header == "frame_index,start_sec,voiced,f0_hz");

  auto res2 = run_cli("--seed 3 enhance " + dir + "/in.wav " + dir +
                      "/out2.wav --vuv " + dir +
                      "/in.lab --eemd-ensemble 10 --profile gtf_f0");
  CHECK(res2.exit_code == 0);
  json meta2 = read_json(dir + "/out2.wav.json");
  const std::vector<double> expected_gtf = {5.0, 5.0, 4.0, 2.5};
  CHECK(meta2["gains"].get<std::vector<double>>() == expected_gtf);
}

TEST_CASE("enhance copies through and exits 3 when pitch is unavailable") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  Waveform flat;
  flat.sample_rate = 16000;
  flat.samples.assign(12000, 0.4);
  save_wav(dir + "/flat.wav", flat);
  std::ofstream(dir + "/flat.lab") << "0.0 0.75 V\n";

  auto res = run_cli("enhance " + dir + "/flat.wav " + dir + "/out.wav --vuv " +
                     dir + "/flat.lab --eemd-ensemble 4");
  CHECK(res.exit_code == 3);
  Waveform in = load_wav(dir + "/flat.wav");
  Waveform out = load_wav(dir + "/out.wav");
  REQUIRE(in.samples.size() == out.samples.size());
  for (std::size_t i = 0; i < in.samples.size(); ++i)
    CHECK(in.samples[i] == out.samples[i]);
  json meta = read_json(dir + "/out.wav.json");
  CHECK_FALSE(meta["warnings"].empty());
}

TEST_CASE("evaluate scores a manifest and zeroes the unit delta") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  Waveform ref;
  ref.sample_rate = 16000;
  for (int i = 0; i < 2; ++i) {
    auto utt = synth::utterance(310 + i, 16000, 1.5);
    save_wav(dir + "/clean" + std::to_string(i) + ".wav", utt.wav);
    synth::write_label_file(dir + "/clean" + std::to_string(i) + ".lab",
                            utt.regions);
    ref.samples.insert(ref.samples.end(), utt.wav.samples.begin(),
                       utt.wav.samples.end());
  }
  save_wav(dir + "/ssn.wav",
           synth::speech_shaped_noise(2.0, 16000, 311, ref, 0.1));
  {
    std::ofstream manifest(dir + "/manifest.csv");
    manifest << "clean_path,vuv_path,noise_path,snr_db,methods\n";
    for (int i = 0; i < 2; ++i)
      manifest << dir << "/clean" << i << ".wav," << dir << "/clean" << i
               << ".lab," << dir << "/ssn.wav,0,unprocessed;unit\n";
  }

  auto res = run_cli("--seed 9 evaluate --manifest " + dir +
                     "/manifest.csv --out-dir " + dir + "/reports");
  CHECK(res.exit_code == 0);

  std::ifstream records(dir + "/reports/records.csv");
  std::string line;
  std::getline(records, line);
  CHECK(line == "utterance,noise,snr_db,method,estoi,delta_estoi,sti_category");
  int unit_rows = 0;
  while (std::getline(records, line)) {
    if (line.find(",unit,") == std::string::npos) continue;
    ++unit_rows;
    // delta_estoi column: unit enhancement is the identity.
    std::stringstream ss(line);
    std::string field;
    for (int c = 0; c < 6; ++c) std::getline(ss, field, ',');
    CHECK(std::abs(std::stod(field)) < 1e-6);
  }
  CHECK(unit_rows == 2);
  CHECK(std::ifstream(dir + "/reports/summary.csv").good());
  CHECK(std::ifstream(dir + "/reports/anova.csv").good());
}

TEST_CASE("config file supplies defaults and flags win") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  auto utt = synth::utterance(340, 16000, 1.0);
  save_wav(dir + "/in.wav", utt.wav);
  synth::write_label_file(dir + "/in.lab", utt.regions);
  {
    std::ofstream cfg(dir + "/defaults.ini");
    cfg << "[enhance]\nprofile=gtf_f0\neemd-ensemble=8\n";
  }

  auto res = run_cli("--config " + dir + "/defaults.ini enhance " + dir +
                     "/in.wav " + dir + "/a.wav --vuv " + dir + "/in.lab");
  CHECK(res.exit_code == 0);
  CHECK(read_json(dir + "/a.wav.json")["profile"] == "gtf_f0");

  // An explicit flag overrides the config value.
  res = run_cli("--config " + dir + "/defaults.ini enhance " + dir +
                "/in.wav " + dir + "/b.wav --vuv " + dir +
                "/in.lab --profile unit");
  CHECK(res.exit_code == 0);
  CHECK(read_json(dir + "/b.wav.json")["profile"] == "unit");
}

TEST_CASE("mix and enhance are idempotent given the seed") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  auto utt = synth::utterance(320, 16000, 1.0);
  save_wav(dir + "/c.wav", utt.wav);
  synth::write_label_file(dir + "/c.lab", utt.regions);
  save_wav(dir + "/n.wav", synth::white_noise(1.2, 16000, 321, 0.2));

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  for (int run = 0; run < 2; ++run) {
    const std::string out = dir + "/mix" + std::to_string(run) + ".wav";
    CHECK(run_cli("--seed 5 mix " + dir + "/c.wav " + dir + "/n.wav " + out +
                  " --snr -3 --random-offset")
              .exit_code == 0);
  }
  CHECK(slurp(dir + "/mix0.wav") == slurp(dir + "/mix1.wav"));
  CHECK(slurp(dir + "/mix0.wav.json") == slurp(dir + "/mix1.wav.json"));

  for (int run = 0; run < 2; ++run) {
    const std::string out = dir + "/enh" + std::to_string(run) + ".wav";
    CHECK(run_cli("--seed 5 enhance " + dir + "/mix0.wav " + out + " --vuv " +
                  dir + "/c.lab --eemd-ensemble 8")
              .exit_code == 0);
  }
  CHECK(slurp(dir + "/enh0.wav") == slurp(dir + "/enh1.wav"));
  CHECK(slurp(dir + "/enh0.wav.json") == slurp(dir + "/enh1.wav.json"));
}

TEST_CASE("evaluate runs the external quality hook") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  auto utt = synth::utterance(330, 16000, 1.2);
  save_wav(dir + "/c.wav", utt.wav);
  synth::write_label_file(dir + "/c.lab", utt.regions);
  save_wav(dir + "/n.wav", synth::white_noise(1.5, 16000, 331, 0.2));
  std::ofstream(dir + "/m.csv") << dir + "/c.wav," + dir + "/c.lab," + dir +
                                       "/n.wav,5,unprocessed\n";
  {
    std::ofstream script(dir + "/fake_pesq.sh");
    script << "#!/bin/sh\ntest -f \"$1\" && test -f \"$2\" && echo 3.14\n";
  }
  std::filesystem::permissions(dir + "/fake_pesq.sh",
                               std::filesystem::perms::owner_all);

  auto res = run_cli("--seed 2 evaluate --manifest " + dir +
                     "/m.csv --out-dir " + dir + "/reports --pesq-cmd " + dir +
                     "/fake_pesq.sh");
  CHECK(res.exit_code == 0);
  std::ifstream records(dir + "/reports/records.csv");
  std::string header, row;
  std::getline(records, header);
  CHECK(header ==
        "utterance,noise,snr_db,method,estoi,delta_estoi,sti_category,pesq");
  std::getline(records, row);
  CHECK(row.substr(row.rfind(',') + 1) == "3.14");
}

TEST_CASE("evaluate continues past bad cells and exits 4") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  auto utt = synth::utterance(333, 16000, 1.2);
  save_wav(dir + "/c.wav", utt.wav);
  synth::write_label_file(dir + "/c.lab", utt.regions);
  save_wav(dir + "/n.wav", synth::white_noise(1.5, 16000, 334, 0.2));
  std::ofstream(dir + "/m.csv")
      << dir + "/c.wav," + dir + "/c.lab," + dir + "/n.wav,5,unprocessed\n"
      << dir + "/c.wav," + dir + "/c.lab," + dir + "/gone.wav,5,unprocessed\n";
  auto res = run_cli("--seed 2 evaluate --manifest " + dir +
                     "/m.csv --out-dir " + dir + "/reports");
  CHECK(res.exit_code == 4);
  // The good cell still made it into the records.
  std::ifstream records(dir + "/reports/records.csv");
  std::string line;
  int rows = 0;
  std::getline(records, line);  // header
  while (std::getline(records, line)) ++rows;
  CHECK(rows == 1);
}

TEST_CASE("calibrate fits a profile from a manifest") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  auto utt = synth::utterance(335, 16000, 1.5);
  save_wav(dir + "/c.wav", utt.wav);
  save_wav(dir + "/n.wav",
           synth::speech_shaped_noise(2.0, 16000, 336, utt.wav, 0.1));
  std::ofstream(dir + "/train.csv") << dir + "/c.wav," + dir + "/n.wav,0\n";
  auto res = run_cli("--seed 4 calibrate --manifest " + dir +
                     "/train.csv --filters 1 --out-dir " + dir + "/cal");
  CHECK(res.exit_code == 0);
  json profile = read_json(dir + "/cal/profile.json");
  CHECK(profile["name"] == "calibrated");
  REQUIRE(profile["gains"].size() == 1);
  const double gain = profile["gains"][0].get<double>();
  CHECK(gain >= 1.0);
  CHECK(gain <= 10.0);
  CHECK(std::ifstream(dir + "/cal/traces.csv").good());
}

TEST_CASE("calibrate on voiceless material exits 3") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  save_wav(dir + "/hiss.wav", synth::white_noise(1.2, 16000, 337, 0.2));
  save_wav(dir + "/n.wav", synth::white_noise(1.2, 16000, 338, 0.2));
  std::ofstream(dir + "/train.csv") << dir + "/hiss.wav," + dir + "/n.wav,0\n";
  auto res = run_cli("calibrate --manifest " + dir +
                     "/train.csv --filters 1 --out-dir " + dir + "/cal");
  CHECK(res.exit_code == 3);
}

TEST_CASE("evaluate rejects unknown methods") {
  const std::string dir = synth::make_temp_dir("ise_cli");
  auto utt = synth::utterance(312, 16000, 1.0);
  save_wav(dir + "/c.wav", utt.wav);
  save_wav(dir + "/n.wav", synth::white_noise(1.0, 16000, 313, 0.2));
  std::ofstream(dir + "/m.csv")
      << dir + "/c.wav,," + dir + "/n.wav,0,unprocessed;warp\n";
  auto res = run_cli("evaluate --manifest " + dir + "/m.csv");
  CHECK(res.exit_code == 1);
}

TEST_SUITE_END();
