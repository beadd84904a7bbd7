#pragma once

#include "hear/hear.hpp"
#include "hear/montage.hpp"
#include "hear/sim.hpp"
#include "hear/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace hear {

struct TrialBoundary {
  std::uint64_t start_sample = 0;
  std::uint64_t length = 0;
};

struct RecordingHeader {
  int format_version = 1;
  double f_s_hz = 0.0;
  std::vector<std::string> labels;            // ordered channel labels
  std::uint64_t sample_count = 0;             // per channel
  std::vector<TrialBoundary> trials;          // optional
  static constexpr const char* units = "microvolt";
};

struct Recording {
  RecordingHeader header;
  Matrix samples; // channels x samples
};

// Self-describing text header, then little-endian float32 payload, frame
// major (all channels of sample n contiguous). Lossless for float32 data.
void write_recording(std::ostream& out, const RecordingHeader& header, const Matrix& samples);
void write_recording(const std::filesystem::path& path, const RecordingHeader& header,
                     const Matrix& samples);
Recording read_recording(std::istream& in);
Recording read_recording(const std::filesystem::path& path);

// Helpers for trial-structured recordings.
RecordingHeader make_header(double f_s_hz, const std::vector<std::string>& labels,
                            const TrialSet& trials);
Matrix concat_trials(const TrialSet& trials);
TrialSet split_trials(const Recording& recording);

// Calibration model persistence (text, lossless round-trip).
void save_model(const CalibrationModel& model, std::ostream& out);
void save_model(const CalibrationModel& model, const std::filesystem::path& path);
CalibrationModel load_model(std::istream& in);
CalibrationModel load_model(const std::filesystem::path& path);

// Ground-truth artifact events: one text record per event, including the
// injected waveform samples over the event's support.
void write_events(std::ostream& out, const std::vector<ArtifactEvent>& events, double f_s_hz);
void write_events(const std::filesystem::path& path, const std::vector<ArtifactEvent>& events,
                  double f_s_hz);
std::vector<ArtifactEvent> read_events(std::istream& in);
std::vector<ArtifactEvent> read_events(const std::filesystem::path& path);

ElectrodeMontage read_montage_file(const std::filesystem::path& path);
void write_montage_file(const std::filesystem::path& path, const ElectrodeMontage& montage);

// One line per metric: `metric=<name> subject=<id> config=<tag> value=<v>`.
std::string format_metric(const std::string& name, const std::string& subject,
                          const std::string& config, double value);

} // namespace hear
