#include "doctest.h"

#include "hear/cli.hpp"
#include "hear/io.hpp"
#include "hear/sim.hpp"
#include "hear/stream.hpp"
#include "hear/types.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using namespace hear;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"hear"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("hear_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// capture std::cout while running the CLI in-process
struct CaptureOut {
  std::ostringstream captured;
  std::streambuf* old;
  CaptureOut() : old(std::cout.rdbuf(captured.rdbuf())) {}
  ~CaptureOut() { std::cout.rdbuf(old); }
};

} // namespace

TEST_CASE("simulate is deterministic at the file level") {
  TempDir a, b;
  const std::vector<std::string> common = {"--seed", "7",  "--subjects",     "1",
                                           "--reach-trials", "4", "--rest-trials", "2"};
  {
    CaptureOut cap;
    std::vector<std::string> args = {"simulate", "--out", a / ""};
    args.insert(args.end(), common.begin(), common.end());
    CHECK(run_cli(args) == 0);
  }
  {
    CaptureOut cap;
    std::vector<std::string> args = {"simulate", "--out", b / ""};
    args.insert(args.end(), common.begin(), common.end());
    CHECK(run_cli(args) == 0);
  }
  for (const char* name : {"montage.txt", "subject0_rest.rec", "subject0_reach.rec",
                           "subject0_clean.rec", "subject0_events.txt"}) {
    CHECK(slurp(a / name) == slurp(b / name));
    CHECK(!slurp(a / name).empty());
  }
}

TEST_CASE("end-to-end pipeline over files") {
  TempDir dir;
  {
    CaptureOut cap;
    CHECK(run_cli({"simulate", "--out", dir / "", "--seed", "17", "--subjects", "1",
                   "--reach-trials", "10", "--rest-trials", "4"}) == 0);
  }
  {
    CaptureOut cap;
    CHECK(run_cli({"calibrate", "--input", dir / "subject0_rest.rec", "--montage",
                   dir / "montage.txt", "--out", dir / "model.hear"}) == 0);
  }
  CHECK(fs::exists(dir / "model.hear"));
  {
    CaptureOut cap;
    CHECK(run_cli({"correct", "--input", dir / "subject0_reach.rec", "--model",
                   dir / "model.hear", "--montage", dir / "montage.txt", "--out",
                   dir / "ohear.rec", "--mode", "online"}) == 0);
    CHECK(run_cli({"correct", "--input", dir / "subject0_reach.rec", "--model",
                   dir / "model.hear", "--montage", dir / "montage.txt", "--out",
                   dir / "hear.rec", "--mode", "offline"}) == 0);
  }

  // corrected recordings keep the shape of the input
  const Recording raw = read_recording(dir / "subject0_reach.rec");
  const Recording on = read_recording(dir / "ohear.rec");
  const Recording off = read_recording(dir / "hear.rec");
  CHECK(on.samples.rows() == raw.samples.rows());
  CHECK(on.samples.cols() == raw.samples.cols());
  CHECK(off.header.trials.size() == raw.header.trials.size());

  std::string metrics;
  {
    CaptureOut cap;
    CHECK(run_cli({"evaluate", "--clean", dir / "subject0_clean.rec", "--test", dir / "ohear.rec",
                   "--events", dir / "subject0_events.txt", "--subject", "0", "--config",
                   "ohear_phi3"}) == 0);
    metrics = cap.captured.str();
  }
  CHECK(metrics.find("metric=snr_clean_db subject=0 config=ohear_phi3 value=") !=
        std::string::npos);
  CHECK(metrics.find("metric=mrcp_peak_uv") != std::string::npos);
  CHECK(metrics.find("metric=mrcp_peak_latency_s") != std::string::npos);
  CHECK(metrics.find("metric=outlier_fraction") != std::string::npos);

  // evaluating the clean data against itself yields the infinity sentinel
  {
    CaptureOut cap;
    CHECK(run_cli({"evaluate", "--clean", dir / "subject0_clean.rec", "--test",
                   dir / "subject0_clean.rec", "--events", dir / "subject0_events.txt"}) == 0);
    CHECK(cap.captured.str().find("metric=snr_clean_db subject=0 config=default value=inf") !=
          std::string::npos);
  }

  {
    CaptureOut cap;
    CHECK(run_cli({"detect", "--input", dir / "subject0_reach.rec"}) == 0);
    CHECK(cap.captured.str().find("metric=outlier_fraction") != std::string::npos);
  }
}

TEST_CASE("online and offline correction differ only around artifacts") {
  TempDir dir;
  CaptureOut cap;
  // force a couple of events with a high activation probability
  SimulationSpec spec;
  spec.n_reach_trials = 1;
  spec.n_rest_trials = 2;
  spec.pop_activation_prob = 1.0;
  spec.n_pop_sources = 1;
  spec.n_drift_sources = 0;
  const auto ds = simulate_subject(spec, 3);
  REQUIRE(ds.events.size() == 1);
  const auto& pop = ds.events[0];

  write_montage_file(dir / "montage.txt", ds.montage);
  const auto labels = ds.montage.labels();
  write_recording(dir / "rest.rec", make_header(ds.f_s_hz, labels, ds.rest),
                  concat_trials(ds.rest));
  write_recording(dir / "reach.rec", make_header(ds.f_s_hz, labels, ds.reach),
                  concat_trials(ds.reach));

  CHECK(run_cli({"calibrate", "--input", dir / "rest.rec", "--montage", dir / "montage.txt",
                 "--out", dir / "model.hear"}) == 0);
  CHECK(run_cli({"correct", "--input", dir / "reach.rec", "--model", dir / "model.hear",
                 "--montage", dir / "montage.txt", "--out", dir / "on.rec", "--mode",
                 "online"}) == 0);
  CHECK(run_cli({"correct", "--input", dir / "reach.rec", "--model", dir / "model.hear",
                 "--montage", dir / "montage.txt", "--out", dir / "off.rec", "--mode",
                 "offline"}) == 0);

  const Recording on = read_recording(dir / "on.rec");
  const Recording off = read_recording(dir / "off.rec");

  // far ahead of the pop both variance trajectories rest at the reference,
  // so the corrections coincide; around the pop they must differ
  const auto onset = static_cast<std::size_t>(pop.onset_s * ds.f_s_hz);
  double early_diff = 0.0, pop_diff = 0.0;
  for (std::size_t c = 0; c < on.samples.rows(); ++c) {
    for (std::size_t s = 0; s < 400; ++s) {
      early_diff = std::max(early_diff, std::abs(on.samples(c, s) - off.samples(c, s)));
    }
  }
  for (std::size_t s = onset; s < std::min(onset + 100, on.samples.cols()); ++s) {
    pop_diff = std::max(pop_diff, std::abs(on.samples(pop.channel, s) -
                                           off.samples(pop.channel, s)));
  }
  CHECK(early_diff < 0.05);
  CHECK(pop_diff > 1.0);
}

TEST_CASE("cli stream mode matches file mode byte for byte") {
  TempDir dir;
  SimulationSpec spec;
  spec.n_reach_trials = 1;
  spec.n_rest_trials = 2;
  spec.pop_activation_prob = 0.5;
  const auto ds = simulate_subject(spec, 8);

  write_montage_file(dir / "montage.txt", ds.montage);
  const auto labels = ds.montage.labels();
  {
    CaptureOut cap;
    write_recording(dir / "rest.rec", make_header(ds.f_s_hz, labels, ds.rest),
                    concat_trials(ds.rest));
    CHECK(run_cli({"calibrate", "--input", dir / "rest.rec", "--montage", dir / "montage.txt",
                   "--out", dir / "model.hear"}) == 0);
  }

  // file path: recording without trial boundaries (continuous stream semantics)
  RecordingHeader h;
  h.f_s_hz = ds.f_s_hz;
  h.labels = labels;
  h.sample_count = ds.reach[0].cols();
  write_recording(dir / "input.rec", h, ds.reach[0]);
  {
    CaptureOut cap;
    CHECK(run_cli({"correct", "--input", dir / "input.rec", "--model", dir / "model.hear",
                   "--montage", dir / "montage.txt", "--out", dir / "out.rec"}) == 0);
  }

  // stream path through the CLI with redirected stdio
  std::ostringstream stream_in_bytes;
  StreamHandshake hs;
  hs.channels = static_cast<std::uint32_t>(ds.reach[0].rows());
  hs.f_s_hz = static_cast<float>(ds.f_s_hz);
  write_handshake(stream_in_bytes, hs);
  for (std::size_t s = 0; s < ds.reach[0].cols(); ++s) {
    for (std::size_t c = 0; c < ds.reach[0].rows(); ++c) {
      const float v = static_cast<float>(ds.reach[0](c, s));
      stream_in_bytes.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
  std::istringstream stream_in(stream_in_bytes.str());
  std::ostringstream stream_out;
  auto* old_in = std::cin.rdbuf(stream_in.rdbuf());
  auto* old_out = std::cout.rdbuf(stream_out.rdbuf());
  const int rc = run_cli({"correct", "--stream", "--model", dir / "model.hear", "--montage",
                          dir / "montage.txt"});
  std::cin.rdbuf(old_in);
  std::cout.rdbuf(old_out);
  CHECK(rc == 0);

  // compare the stream frames with the file payload
  const std::string file_bytes = slurp(dir / "out.rec");
  const auto payload_at = file_bytes.find("end_header\n") + std::strlen("end_header\n");
  const std::string file_payload = file_bytes.substr(payload_at);
  const std::string stream_payload = stream_out.str().substr(16);
  CHECK(file_payload.size() == stream_payload.size());
  CHECK(file_payload == stream_payload);
}

TEST_CASE("cli rejects unknown flags and missing files") {
  CaptureOut cap;
  CHECK(run_cli({"simulate", "--frobnicate"}) == 1);
  CHECK(run_cli({"calibrate", "--input", "/nonexistent/x.rec", "--montage", "/nonexistent/m.txt",
                 "--out", "/tmp/never.hear"}) == 1);
  CHECK(run_cli({"bogus-subcommand"}) == 1);
  CHECK(run_cli({}) == 1);
  CHECK(run_cli({"--help"}) == 0);
}
