#include "hear/io.hpp"

#include "hear/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace hear {

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require(bool ok, const std::string& name, const std::string& message) {
  if (!ok) raise(name, message);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise("FileNotFound", "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise("FileWriteFailed", "cannot write '" + path.string() + "'");
  return out;
}

// one header line: `key rest-of-line`
std::pair<std::string, std::string> split_line(const std::string& line) {
  const auto sp = line.find(' ');
  if (sp == std::string::npos) return {line, ""};
  return {line.substr(0, sp), line.substr(sp + 1)};
}

void write_f32_le(std::ostream& out, float v) {
  static_assert(sizeof(float) == 4);
  // assumes little-endian host, as does the rest of the toolchain here
  out.write(reinterpret_cast<const char*>(&v), 4);
}

} // namespace

void write_recording(std::ostream& out, const RecordingHeader& header, const Matrix& samples) {
  require(header.labels.size() == samples.rows(), "HeaderPayloadInconsistency",
          "label count does not match channel count");
  require(header.sample_count == samples.cols(), "HeaderPayloadInconsistency",
          "header sample_count does not match payload");
  for (const auto& l : header.labels) {
    require(!l.empty() && l.find_first_of(" \t\n\r") == std::string::npos, "InvalidLabel",
            "labels must be non-empty and free of whitespace");
  }
  out << "HEAR-RECORDING v" << header.format_version << "\n";
  out << "fs_hz " << g17(header.f_s_hz) << "\n";
  out << "channels " << header.labels.size() << "\n";
  out << "samples " << header.sample_count << "\n";
  out << "unit " << RecordingHeader::units << "\n";
  out << "labels";
  for (const auto& l : header.labels) out << ' ' << l;
  out << "\n";
  if (!header.trials.empty()) {
    out << "trials " << header.trials.size() << "\n";
    for (const auto& t : header.trials) {
      out << "trial " << t.start_sample << ' ' << t.length << "\n";
    }
  }
  out << "end_header\n";
  // frame-major: all channels of sample n are contiguous
  for (std::size_t s = 0; s < samples.cols(); ++s) {
    for (std::size_t c = 0; c < samples.rows(); ++c) {
      write_f32_le(out, static_cast<float>(samples(c, s)));
    }
  }
  if (!out) raise("FileWriteFailed", "stream write failed");
}

void write_recording(const std::filesystem::path& path, const RecordingHeader& header,
                     const Matrix& samples) {
  auto out = open_output(path);
  write_recording(out, header, samples);
}

Recording read_recording(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) raise("MalformedHeader", "empty input");
  if (line.rfind("HEAR-RECORDING v", 0) != 0) {
    raise("MalformedHeader", "missing HEAR-RECORDING magic");
  }
  Recording rec;
  rec.header.format_version = std::atoi(line.c_str() + std::strlen("HEAR-RECORDING v"));
  require(rec.header.format_version == 1, "VersionMismatch",
          "unsupported recording format version " + std::to_string(rec.header.format_version));

  std::size_t channels = 0;
  bool have_channels = false, have_samples = false, have_fs = false, have_labels = false;
  std::size_t declared_trials = 0;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    auto [key, rest] = split_line(line);
    if (key == "fs_hz") {
      rec.header.f_s_hz = std::strtod(rest.c_str(), nullptr);
      have_fs = true;
    } else if (key == "channels") {
      channels = std::strtoull(rest.c_str(), nullptr, 10);
      have_channels = true;
    } else if (key == "samples") {
      rec.header.sample_count = std::strtoull(rest.c_str(), nullptr, 10);
      have_samples = true;
    } else if (key == "unit") {
      require(rest == RecordingHeader::units, "MalformedHeader",
              "unsupported unit '" + rest + "'");
    } else if (key == "labels") {
      std::istringstream ls(rest);
      std::string l;
      while (ls >> l) rec.header.labels.push_back(l);
      have_labels = true;
    } else if (key == "trials") {
      declared_trials = std::strtoull(rest.c_str(), nullptr, 10);
    } else if (key == "trial") {
      TrialBoundary t;
      std::istringstream ts(rest);
      require(static_cast<bool>(ts >> t.start_sample >> t.length), "MalformedHeader",
              "bad trial boundary line");
      rec.header.trials.push_back(t);
    } else {
      raise("MalformedHeader", "unknown header key '" + key + "'");
    }
  }
  require(line == "end_header", "MalformedHeader", "missing end_header");
  require(have_fs && have_channels && have_samples && have_labels, "MalformedHeader",
          "header is missing required fields");
  require(rec.header.labels.size() == channels, "HeaderPayloadInconsistency",
          "label count does not match declared channel count");
  require(rec.header.trials.size() == declared_trials, "MalformedHeader",
          "trial boundary count does not match declared count");
  std::uint64_t covered = 0;
  for (const auto& t : rec.header.trials) {
    require(t.start_sample == covered, "MalformedHeader", "trial boundaries must be contiguous");
    covered += t.length;
  }
  require(rec.header.trials.empty() || covered == rec.header.sample_count, "MalformedHeader",
          "trial boundaries do not cover the payload");

  rec.samples = Matrix(channels, rec.header.sample_count);
  std::vector<float> frame(channels);
  for (std::size_t s = 0; s < rec.header.sample_count; ++s) {
    in.read(reinterpret_cast<char*>(frame.data()), static_cast<std::streamsize>(4 * channels));
    if (in.gcount() != static_cast<std::streamsize>(4 * channels)) {
      raise("TruncatedPayload", "payload ends at sample " + std::to_string(s) + " of " +
                                    std::to_string(rec.header.sample_count));
    }
    for (std::size_t c = 0; c < channels; ++c) rec.samples(c, s) = frame[c];
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    raise("HeaderPayloadInconsistency", "payload larger than the header declares");
  }
  return rec;
}

Recording read_recording(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_recording(in);
}

RecordingHeader make_header(double f_s_hz, const std::vector<std::string>& labels,
                            const TrialSet& trials) {
  RecordingHeader h;
  h.f_s_hz = f_s_hz;
  h.labels = labels;
  std::uint64_t start = 0;
  for (const auto& t : trials) {
    h.trials.push_back({start, t.cols()});
    start += t.cols();
  }
  h.sample_count = start;
  return h;
}

Matrix concat_trials(const TrialSet& trials) {
  if (trials.empty()) raise("EmptyInput", "no trials");
  std::size_t total = 0;
  for (const auto& t : trials) total += t.cols();
  Matrix out(trials[0].rows(), total);
  std::size_t at = 0;
  for (const auto& t : trials) {
    require(t.rows() == out.rows(), "ShapeMismatch", "trials have differing channel counts");
    for (std::size_t c = 0; c < t.rows(); ++c) {
      auto src = t.row(c);
      auto dst = out.row(c);
      std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(at));
    }
    at += t.cols();
  }
  return out;
}

TrialSet split_trials(const Recording& recording) {
  TrialSet out;
  if (recording.header.trials.empty()) {
    out.push_back(recording.samples);
    return out;
  }
  for (const auto& tb : recording.header.trials) {
    Matrix t(recording.samples.rows(), tb.length);
    for (std::size_t c = 0; c < t.rows(); ++c) {
      auto src = recording.samples.row(c);
      auto dst = t.row(c);
      std::copy(src.begin() + static_cast<std::ptrdiff_t>(tb.start_sample),
                src.begin() + static_cast<std::ptrdiff_t>(tb.start_sample + tb.length),
                dst.begin());
    }
    out.push_back(std::move(t));
  }
  return out;
}

void save_model(const CalibrationModel& model, std::ostream& out) {
  model.validate();
  out << "HEAR-MODEL v1\n";
  out << "fingerprint " << model.montage_fingerprint << "\n";
  out << "fs_hz " << g17(model.config.f_s_hz) << "\n";
  out << "t_est_s " << g17(model.config.t_est_s) << "\n";
  out << "phi " << g17(model.config.phi) << "\n";
  out << "xi " << g17(model.config.xi) << "\n";
  out << "p_weight " << g17(model.config.p_weight) << "\n";
  out << "k_neighbors " << model.config.k_neighbors << "\n";
  out << "channels " << model.mu_s2.size() << "\n";
  out << "mu_s2";
  for (double v : model.mu_s2) out << ' ' << g17(v);
  out << "\nend_model\n";
  if (!out) raise("FileWriteFailed", "stream write failed");
}

void save_model(const CalibrationModel& model, const std::filesystem::path& path) {
  auto out = open_output(path);
  save_model(model, out);
}

CalibrationModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) raise("MalformedModel", "empty input");
  require(line.rfind("HEAR-MODEL v", 0) == 0, "MalformedModel", "missing HEAR-MODEL magic");
  const int version = std::atoi(line.c_str() + std::strlen("HEAR-MODEL v"));
  require(version == 1, "VersionMismatch",
          "unsupported model format version " + std::to_string(version));
  CalibrationModel model;
  std::size_t channels = 0;
  bool have_fp = false, have_mu = false;
  while (std::getline(in, line)) {
    if (line == "end_model") break;
    auto [key, rest] = split_line(line);
    if (key == "fingerprint") {
      model.montage_fingerprint = rest;
      have_fp = !rest.empty();
    } else if (key == "fs_hz") {
      model.config.f_s_hz = std::strtod(rest.c_str(), nullptr);
    } else if (key == "t_est_s") {
      model.config.t_est_s = std::strtod(rest.c_str(), nullptr);
    } else if (key == "phi") {
      model.config.phi = std::strtod(rest.c_str(), nullptr);
    } else if (key == "xi") {
      model.config.xi = std::strtod(rest.c_str(), nullptr);
    } else if (key == "p_weight") {
      model.config.p_weight = std::strtod(rest.c_str(), nullptr);
    } else if (key == "k_neighbors") {
      model.config.k_neighbors = std::strtoull(rest.c_str(), nullptr, 10);
    } else if (key == "channels") {
      channels = std::strtoull(rest.c_str(), nullptr, 10);
    } else if (key == "mu_s2") {
      std::istringstream vs(rest);
      double v;
      while (vs >> v) model.mu_s2.push_back(v);
      have_mu = true;
    } else {
      raise("MalformedModel", "unknown model key '" + key + "'");
    }
  }
  require(line == "end_model", "MalformedModel", "missing end_model");
  require(have_fp, "FingerprintMissing", "model file has no montage fingerprint");
  require(have_mu && model.mu_s2.size() == channels, "MalformedModel",
          "mu_s2 does not match declared channel count");
  model.validate();
  return model;
}

CalibrationModel load_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_model(in);
}

void write_events(std::ostream& out, const std::vector<ArtifactEvent>& events, double f_s_hz) {
  out << "HEAR-EVENTS v1\n";
  out << "fs_hz " << g17(f_s_hz) << "\n";
  out << "count " << events.size() << "\n";
  for (const auto& ev : events) {
    out << "event kind=" << (ev.kind == ArtifactEvent::Kind::pop ? "pop" : "drift");
    out << " trial=" << ev.trial << " channel=" << ev.channel;
    out << " onset_s=" << g17(ev.onset_s);
    if (ev.kind == ArtifactEvent::Kind::pop) {
      out << " amplitude_uv=" << g17(ev.amplitude_uv) << " decay_rate=" << g17(ev.decay_rate);
    } else {
      out << " band_lo_hz=" << g17(ev.band_lo_hz) << " band_hi_hz=" << g17(ev.band_hi_hz)
          << " window_start_s=" << g17(ev.window_start_s)
          << " window_end_s=" << g17(ev.window_end_s) << " rms_uv=" << g17(ev.rms_uv);
    }
    out << " support_start=" << ev.support_start << " samples=" << ev.waveform.size();
    for (double v : ev.waveform) out << ' ' << g17(v);
    out << "\n";
  }
  out << "end_events\n";
  if (!out) raise("FileWriteFailed", "stream write failed");
}

void write_events(const std::filesystem::path& path, const std::vector<ArtifactEvent>& events,
                  double f_s_hz) {
  auto out = open_output(path);
  write_events(out, events, f_s_hz);
}

std::vector<ArtifactEvent> read_events(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) raise("MalformedEvents", "empty input");
  require(line == "HEAR-EVENTS v1", "MalformedEvents", "missing HEAR-EVENTS magic");
  std::vector<ArtifactEvent> events;
  std::size_t declared = 0;
  while (std::getline(in, line)) {
    if (line == "end_events") break;
    auto [key, rest] = split_line(line);
    if (key == "fs_hz") continue;
    if (key == "count") {
      declared = std::strtoull(rest.c_str(), nullptr, 10);
      continue;
    }
    require(key == "event", "MalformedEvents", "unknown events key '" + key + "'");
    ArtifactEvent ev;
    std::istringstream ts(rest);
    std::string tok;
    std::size_t sample_count = 0;
    bool reading_samples = false;
    while (ts >> tok) {
      if (reading_samples) {
        ev.waveform.push_back(std::strtod(tok.c_str(), nullptr));
        continue;
      }
      const auto eq = tok.find('=');
      require(eq != std::string::npos, "MalformedEvents", "bad event token '" + tok + "'");
      const std::string k = tok.substr(0, eq);
      const std::string v = tok.substr(eq + 1);
      if (k == "kind") {
        require(v == "pop" || v == "drift", "MalformedEvents", "unknown event kind '" + v + "'");
        ev.kind = v == "pop" ? ArtifactEvent::Kind::pop : ArtifactEvent::Kind::drift;
      } else if (k == "trial") {
        ev.trial = std::atoi(v.c_str());
      } else if (k == "channel") {
        ev.channel = std::strtoull(v.c_str(), nullptr, 10);
      } else if (k == "onset_s") {
        ev.onset_s = std::strtod(v.c_str(), nullptr);
      } else if (k == "amplitude_uv") {
        ev.amplitude_uv = std::strtod(v.c_str(), nullptr);
      } else if (k == "decay_rate") {
        ev.decay_rate = std::strtod(v.c_str(), nullptr);
      } else if (k == "band_lo_hz") {
        ev.band_lo_hz = std::strtod(v.c_str(), nullptr);
      } else if (k == "band_hi_hz") {
        ev.band_hi_hz = std::strtod(v.c_str(), nullptr);
      } else if (k == "window_start_s") {
        ev.window_start_s = std::strtod(v.c_str(), nullptr);
      } else if (k == "window_end_s") {
        ev.window_end_s = std::strtod(v.c_str(), nullptr);
      } else if (k == "rms_uv") {
        ev.rms_uv = std::strtod(v.c_str(), nullptr);
      } else if (k == "support_start") {
        ev.support_start = std::strtoull(v.c_str(), nullptr, 10);
      } else if (k == "samples") {
        sample_count = std::strtoull(v.c_str(), nullptr, 10);
        ev.waveform.reserve(sample_count);
        reading_samples = true;
      } else {
        raise("MalformedEvents", "unknown event field '" + k + "'");
      }
    }
    require(ev.waveform.size() == sample_count, "MalformedEvents",
            "event waveform sample count mismatch");
    events.push_back(std::move(ev));
  }
  require(line == "end_events", "MalformedEvents", "missing end_events");
  require(events.size() == declared, "MalformedEvents", "event count mismatch");
  return events;
}

std::vector<ArtifactEvent> read_events(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_events(in);
}

ElectrodeMontage read_montage_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_montage(buf.str());
}

void write_montage_file(const std::filesystem::path& path, const ElectrodeMontage& montage) {
  auto out = open_output(path);
  out << format_montage(montage);
  if (!out) raise("FileWriteFailed", "stream write failed");
}

std::string format_metric(const std::string& name, const std::string& subject,
                          const std::string& config, double value) {
  std::ostringstream out;
  out << "metric=" << name << " subject=" << subject << " config=" << config << " value=";
  if (std::isinf(value)) {
    out << (value > 0 ? "inf" : "-inf");
  } else {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    out << buf;
  }
  return out.str();
}

} // namespace hear
