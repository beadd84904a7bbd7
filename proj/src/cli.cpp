#include "hear/cli.hpp"

#include "hear/error.hpp"
#include "hear/evaluation.hpp"
#include "hear/hear.hpp"
#include "hear/io.hpp"
#include "hear/montage.hpp"
#include "hear/sim.hpp"
#include "hear/stream.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace hear {

namespace {

namespace fs = std::filesystem;

struct ArgStream {
  std::vector<std::string> args;
  std::size_t at = 0;

  bool done() const { return at >= args.size(); }
  const std::string& peek() const { return args[at]; }
  std::string next() { return args[at++]; }
  std::string value(const std::string& flag) {
    if (done()) raise("MissingArgument", flag + " needs a value");
    return args[at++];
  }
  double number(const std::string& flag) {
    const std::string v = value(flag);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') {
      raise("BadArgument", flag + " expects a number, got '" + v + "'");
    }
    return x;
  }
  long long integer(const std::string& flag) {
    const std::string v = value(flag);
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') {
      raise("BadArgument", flag + " expects an integer, got '" + v + "'");
    }
    return x;
  }
};

void print_usage(std::ostream& out) {
  out << "hear - high-variance electrode artifact removal toolkit\n"
      << "\n"
      << "Usage:\n"
      << "  hear simulate --out DIR [--seed N] [--subjects N] [options]\n"
      << "  hear calibrate --input rest.rec --montage m.txt --out model.hear [options]\n"
      << "  hear correct --input in.rec --model model.hear --montage m.txt --out out.rec\n"
      << "               [--mode online|offline] [--phi X --xi X --t-est S --k N] [options]\n"
      << "  hear correct --stream --model model.hear --montage m.txt [overrides]\n"
      << "  hear evaluate --clean clean.rec --test x.rec --events ev.txt [options]\n"
      << "  hear detect --input x.rec [thresholds]\n"
      << "\n"
      << "Subcommand options:\n"
      << "  simulate: --seed N --subjects N --rest-trials N --reach-trials N\n"
      << "            --trial-length S --fs HZ --electrodes N --drift-rms UV\n"
      << "            --background-rms UV --pop-decay-time-constant\n"
      << "  calibrate: --t-est S --phi X --xi X --p-weight F --k N --no-screening\n"
      << "             --allow-small-montage\n"
      << "  correct:  --mode online|offline (default online); --stream reads framed\n"
      << "            binary samples on stdin and writes corrected frames to stdout;\n"
      << "            --telemetry PATH writes per-sample artifact and uncorrectable\n"
      << "            probabilities; overrides: --phi --xi --t-est --k\n"
      << "  evaluate: --epsilon UV --window-lo S --window-hi S --subject TAG --config TAG\n"
      << "  detect:   --amplitude-threshold UV --variance-z X --probability-z X\n"
      << "            --kurtosis-z X\n";
}

int cmd_simulate(ArgStream& in) {
  SimulationSpec spec;
  std::string out_dir;
  while (!in.done()) {
    const std::string a = in.next();
    if (a == "--out") out_dir = in.value(a);
    else if (a == "--seed") spec.seed = static_cast<std::uint64_t>(in.integer(a));
    else if (a == "--subjects") spec.n_subjects = static_cast<int>(in.integer(a));
    else if (a == "--rest-trials") spec.n_rest_trials = static_cast<int>(in.integer(a));
    else if (a == "--reach-trials") spec.n_reach_trials = static_cast<int>(in.integer(a));
    else if (a == "--trial-length") spec.trial_length_s = in.number(a);
    else if (a == "--fs") spec.f_s_hz = in.number(a);
    else if (a == "--electrodes") spec.n_electrodes = static_cast<int>(in.integer(a));
    else if (a == "--drift-rms") spec.drift_rms_uv = in.number(a);
    else if (a == "--background-rms") spec.background_rms_uv = in.number(a);
    else if (a == "--pop-decay-time-constant") spec.pop_decay_is_time_constant = true;
    else raise("UnknownFlag", "simulate does not understand '" + a + "'");
  }
  if (out_dir.empty()) raise("MissingArgument", "simulate needs --out DIR");
  spec.validate();
  fs::create_directories(out_dir);

  bool wrote_montage = false;
  for (int subj = 0; subj < spec.n_subjects; ++subj) {
    const std::uint64_t subject_seed = spec.seed * 1000003ull + static_cast<std::uint64_t>(subj);
    const SimulatedDataset ds = simulate_subject(spec, subject_seed);
    if (!wrote_montage) {
      write_montage_file(fs::path(out_dir) / "montage.txt", ds.montage);
      wrote_montage = true;
    }
    const auto labels = ds.montage.labels();
    const std::string stem = "subject" + std::to_string(subj);
    write_recording(fs::path(out_dir) / (stem + "_rest.rec"),
                    make_header(ds.f_s_hz, labels, ds.rest), concat_trials(ds.rest));
    write_recording(fs::path(out_dir) / (stem + "_reach.rec"),
                    make_header(ds.f_s_hz, labels, ds.reach), concat_trials(ds.reach));
    write_recording(fs::path(out_dir) / (stem + "_clean.rec"),
                    make_header(ds.f_s_hz, labels, ds.reach_clean),
                    concat_trials(ds.reach_clean));
    write_events(fs::path(out_dir) / (stem + "_events.txt"), ds.events, ds.f_s_hz);
    std::cout << "subject " << subj << ": " << ds.reach.size() << " reach trials, "
              << ds.rest.size() << " rest trials, " << ds.events.size() << " artifact events\n";
  }
  return 0;
}

int cmd_calibrate(ArgStream& in) {
  std::string input, montage_path, out_path;
  HearConfig config;
  bool have_t_est = false, have_p = false;
  bool screening = true;
  bool allow_small = false;
  while (!in.done()) {
    const std::string a = in.next();
    if (a == "--input") input = in.value(a);
    else if (a == "--montage") montage_path = in.value(a);
    else if (a == "--out") out_path = in.value(a);
    else if (a == "--t-est") { config.t_est_s = in.number(a); have_t_est = true; }
    else if (a == "--phi") config.phi = in.number(a);
    else if (a == "--xi") config.xi = in.number(a);
    else if (a == "--p-weight") { config.p_weight = in.number(a); have_p = true; }
    else if (a == "--k") config.k_neighbors = static_cast<std::size_t>(in.integer(a));
    else if (a == "--no-screening") screening = false;
    else if (a == "--allow-small-montage") allow_small = true;
    else raise("UnknownFlag", "calibrate does not understand '" + a + "'");
  }
  (void)have_t_est;
  (void)have_p;
  if (input.empty() || montage_path.empty() || out_path.empty()) {
    raise("MissingArgument", "calibrate needs --input, --montage and --out");
  }
  const ElectrodeMontage montage = read_montage_file(montage_path);
  const Recording rec = read_recording(input);
  config.f_s_hz = rec.header.f_s_hz;
  TrialSet trials = split_trials(rec);

  if (screening && trials.size() >= 2) {
    const OutlierReport rep = detect_outlier_trials(trials, OutlierCriteria{});
    TrialSet kept;
    for (std::size_t t = 0; t < trials.size(); ++t) {
      if (!rep.flagged(t)) kept.push_back(std::move(trials[t]));
    }
    if (kept.empty()) {
      raise("AllTrialsRejected", "calibration screening rejected every trial");
    }
    if (kept.size() != trials.size()) {
      std::cerr << "screening dropped " << trials.size() - kept.size() << " of "
                << trials.size() << " calibration trials\n";
    }
    trials = std::move(kept);
  }

  // k is validated against the montage here so a bad model never gets written
  InterpolationMatrix::build(montage, config.k_neighbors, allow_small);
  const CalibrationModel model = calibrate(trials, config, montage);
  save_model(model, out_path);
  std::cout << "calibrated " << model.channels() << " channels from " << trials.size()
            << " trials -> " << out_path << "\n";
  return 0;
}

struct CorrectOptions {
  std::string input, model_path, montage_path, out_path, telemetry_path;
  std::string mode = "online";
  bool stream = false;
  bool allow_small = false;
  std::optional<double> phi, xi, t_est;
  std::optional<std::size_t> k;
};

int cmd_correct(ArgStream& in) {
  CorrectOptions o;
  while (!in.done()) {
    const std::string a = in.next();
    if (a == "--input") o.input = in.value(a);
    else if (a == "--model") o.model_path = in.value(a);
    else if (a == "--montage") o.montage_path = in.value(a);
    else if (a == "--out") o.out_path = in.value(a);
    else if (a == "--mode") o.mode = in.value(a);
    else if (a == "--stream") o.stream = true;
    else if (a == "--telemetry") o.telemetry_path = in.value(a);
    else if (a == "--phi") o.phi = in.number(a);
    else if (a == "--xi") o.xi = in.number(a);
    else if (a == "--t-est") o.t_est = in.number(a);
    else if (a == "--k") o.k = static_cast<std::size_t>(in.integer(a));
    else if (a == "--allow-small-montage") o.allow_small = true;
    else raise("UnknownFlag", "correct does not understand '" + a + "'");
  }
  if (o.model_path.empty() || o.montage_path.empty()) {
    raise("MissingArgument", "correct needs --model and --montage");
  }
  if (o.mode != "online" && o.mode != "offline") {
    raise("BadArgument", "--mode must be online or offline");
  }
  CalibrationModel model = load_model(o.model_path);
  if (o.phi) model.config.phi = *o.phi;
  if (o.xi) model.config.xi = *o.xi;
  if (o.t_est) model.config.t_est_s = *o.t_est;
  if (o.k) model.config.k_neighbors = *o.k;
  model.validate();
  const ElectrodeMontage montage = read_montage_file(o.montage_path);
  const InterpolationMatrix d =
      InterpolationMatrix::build(montage, model.config.k_neighbors, o.allow_small);

  std::ofstream telemetry;
  std::ostream* telemetry_out = nullptr;
  if (!o.telemetry_path.empty()) {
    telemetry.open(o.telemetry_path);
    if (!telemetry) raise("FileWriteFailed", "cannot write '" + o.telemetry_path + "'");
    telemetry_out = &telemetry;
  }

  if (o.stream) {
    Corrector corrector(model, d);
    const StreamStats stats = run_stream(std::cin, std::cout, corrector, telemetry_out);
    std::cerr << "corrected " << stats.frames_out << " frames\n";
    return 0;
  }

  if (o.input.empty() || o.out_path.empty()) {
    raise("MissingArgument", "file correction needs --input and --out");
  }
  const Recording rec = read_recording(o.input);
  if (rec.header.labels.size() != model.channels()) {
    raise("DimensionMismatch", "recording channel count does not match model");
  }
  if (std::abs(rec.header.f_s_hz - model.config.f_s_hz) > 1e-9) {
    raise("SamplingRateMismatch", "recording and model sampling rates differ");
  }

  Matrix corrected(rec.samples.rows(), rec.samples.cols());
  const std::size_t n = rec.samples.rows();
  if (o.mode == "online") {
    Corrector corrector(model, d);
    Vec x(n), y(n), p(n);
    // corrector state restarts at trial boundaries; trials are independent
    std::vector<std::size_t> starts;
    for (const auto& t : rec.header.trials) starts.push_back(t.start_sample);
    std::size_t next_start = 0;
    for (std::size_t s = 0; s < rec.samples.cols(); ++s) {
      if (next_start < starts.size() && s == starts[next_start]) {
        corrector.reset();
        ++next_start;
      }
      rec.samples.column(s, x);
      corrector.correct(x, y, p);
      corrected.set_column(s, y);
      if (telemetry_out) {
        const Vec u = uncorrectable_probability(p, d);
        (*telemetry_out) << s;
        char buf[16];
        for (double v : p) {
          std::snprintf(buf, sizeof(buf), " %.6g", v);
          (*telemetry_out) << buf;
        }
        for (double v : u) {
          std::snprintf(buf, sizeof(buf), " %.6g", v);
          (*telemetry_out) << buf;
        }
        (*telemetry_out) << "\n";
      }
    }
  } else {
    const TrialSet trials = split_trials(rec);
    std::size_t at = 0;
    for (const auto& trial : trials) {
      const Matrix part = correct_offline(trial, model, d);
      for (std::size_t c = 0; c < n; ++c) {
        auto src = part.row(c);
        auto dst = corrected.row(c);
        std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(at));
      }
      at += trial.cols();
    }
  }
  write_recording(o.out_path, rec.header, corrected);
  std::cout << "corrected " << rec.samples.cols() << " samples (" << o.mode << ") -> "
            << o.out_path << "\n";
  return 0;
}

int cmd_evaluate(ArgStream& in) {
  std::string clean_path, test_path, events_path;
  std::string subject = "0", config_tag = "default";
  double epsilon = 1.0, window_lo = 5.0, window_hi = 10.0;
  while (!in.done()) {
    const std::string a = in.next();
    if (a == "--clean") clean_path = in.value(a);
    else if (a == "--test") test_path = in.value(a);
    else if (a == "--events") events_path = in.value(a);
    else if (a == "--epsilon") epsilon = in.number(a);
    else if (a == "--window-lo") window_lo = in.number(a);
    else if (a == "--window-hi") window_hi = in.number(a);
    else if (a == "--subject") subject = in.value(a);
    else if (a == "--config") config_tag = in.value(a);
    else raise("UnknownFlag", "evaluate does not understand '" + a + "'");
  }
  if (clean_path.empty() || test_path.empty() || events_path.empty()) {
    raise("MissingArgument", "evaluate needs --clean, --test and --events");
  }
  const Recording clean_rec = read_recording(clean_path);
  const Recording test_rec = read_recording(test_path);
  const TrialSet clean = split_trials(clean_rec);
  const TrialSet test = split_trials(test_rec);
  if (clean.size() != test.size()) {
    raise("ShapeMismatch", "clean and test recordings have different trial counts");
  }
  const auto events = read_events(events_path);
  const double f_s = clean_rec.header.f_s_hz;

  const auto mask = build_contamination_mask(events, clean.size(), clean_rec.samples.rows(),
                                             clean[0].cols(), f_s, epsilon, window_lo, window_hi);
  const auto clean_mask = complement_mask(mask, f_s, window_lo, window_hi);
  if (mask.count() > 0) {
    std::cout << format_metric("snr_artifact_db", subject, config_tag,
                               snr_db(clean, test, mask))
              << "\n";
  } else {
    std::cerr << "no contaminated elements in the evaluation window; skipping snr_artifact_db\n";
  }
  std::cout << format_metric("snr_clean_db", subject, config_tag, snr_db(clean, test, clean_mask))
            << "\n";

  // MRCP summary at the most-negative channel of the clean average
  const Matrix clean_avg = smooth_triangular(average_trials(clean), 0.1, f_s);
  const Matrix test_avg = smooth_triangular(average_trials(test), 0.1, f_s);
  std::size_t best_ch = 0, best_s = 0;
  double best_v = clean_avg(0, 0);
  for (std::size_t c = 0; c < clean_avg.rows(); ++c) {
    for (std::size_t s = 0; s < clean_avg.cols(); ++s) {
      if (clean_avg(c, s) < best_v) {
        best_v = clean_avg(c, s);
        best_ch = c;
        best_s = s;
      }
    }
  }
  (void)best_s;
  double peak = test_avg(best_ch, 0);
  std::size_t peak_s = 0;
  for (std::size_t s = 0; s < test_avg.cols(); ++s) {
    if (test_avg(best_ch, s) < peak) {
      peak = test_avg(best_ch, s);
      peak_s = s;
    }
  }
  std::cout << format_metric("mrcp_peak_uv", subject, config_tag, peak) << "\n";
  std::cout << format_metric("mrcp_peak_latency_s", subject, config_tag,
                             static_cast<double>(peak_s) / f_s)
            << "\n";

  const OutlierReport rep = detect_outlier_trials(test, OutlierCriteria{});
  std::cout << format_metric("outlier_fraction", subject, config_tag, rep.flagged_fraction())
            << "\n";
  return 0;
}

int cmd_detect(ArgStream& in) {
  std::string input;
  OutlierCriteria criteria;
  while (!in.done()) {
    const std::string a = in.next();
    if (a == "--input") input = in.value(a);
    else if (a == "--amplitude-threshold") criteria.amplitude_threshold_uv = in.number(a);
    else if (a == "--variance-z") criteria.variance_z = in.number(a);
    else if (a == "--probability-z") criteria.probability_z = in.number(a);
    else if (a == "--kurtosis-z") criteria.kurtosis_z = in.number(a);
    else raise("UnknownFlag", "detect does not understand '" + a + "'");
  }
  if (input.empty()) raise("MissingArgument", "detect needs --input");
  const Recording rec = read_recording(input);
  const TrialSet trials = split_trials(rec);
  const OutlierReport rep = detect_outlier_trials(trials, criteria);
  for (std::size_t t = 0; t < trials.size(); ++t) {
    if (!rep.flagged(t)) continue;
    std::cout << "trial=" << t << " amplitude=" << rep.amplitude[t]
              << " variance=" << rep.variance[t] << " probability=" << rep.probability[t]
              << " kurtosis=" << rep.kurtosis[t] << "\n";
  }
  for (const auto& s : rep.skipped) {
    std::cerr << "criterion '" << s << "' skipped: no spread across trials\n";
  }
  std::cout << format_metric("outlier_fraction", "-", "-", rep.flagged_fraction()) << "\n";
  return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
  ArgStream in;
  for (int i = 1; i < argc; ++i) in.args.emplace_back(argv[i]);
  try {
    if (in.done() || in.peek() == "-h" || in.peek() == "--help") {
      print_usage(std::cout);
      return in.done() ? 1 : 0;
    }
    const std::string cmd = in.next();
    if (cmd == "simulate") return cmd_simulate(in);
    if (cmd == "calibrate") return cmd_calibrate(in);
    if (cmd == "correct") return cmd_correct(in);
    if (cmd == "evaluate") return cmd_evaluate(in);
    if (cmd == "detect") return cmd_detect(in);
    raise("UnknownCommand", "unknown subcommand '" + cmd + "'");
  } catch (const HearError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

} // namespace hear
