#pragma once

#include "hear/montage.hpp"
#include "hear/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hear {

// Built-in extended 10/20 layout with 64 labeled channels on a 130 mm sphere.
ElectrodeMontage standard_montage_64();

struct SimulationSpec {
  std::uint64_t seed = 1;
  int n_subjects = 15;
  int n_rest_trials = 12;
  int n_reach_trials = 60;
  double trial_length_s = 15.0;
  double f_s_hz = 200.0; // matches the 200 Hz acquisition the defaults assume
  int n_electrodes = 64; // uses the first n channels of the built-in layout

  // cortical background: colored-noise sources on a 100 mm hemisphere,
  // electrode gain c/(d^2 + 400 mm^2) with c set so the median per-electrode
  // background RMS equals background_rms_uv
  int n_pink_sources = 40;
  int n_brown_sources = 40;
  double pink_amplitude_uv = 37.5; // RMS per source
  double brown_amplitude_uv = 75.0;
  double background_rms_uv = 6.0;

  // stationary white measurement noise, per-electrode RMS drawn uniformly
  double electrode_noise_min_uv = 0.5;
  double electrode_noise_max_uv = 1.5;

  // movement-related potential source near [-25, 0, 80] mm
  double mrcp_peak_uv = -120.0;
  double mrcp_latency_jitter_s = 0.2; // +/- bound, uniform
  double mrcp_peak_jitter_uv = 20.0;  // +/- bound, uniform
  double mrcp_location_jitter_mm = 10.0;

  // electrode pops: step + exponential decay at a single channel
  int n_pop_sources = 10;
  double pop_activation_prob = 0.02; // per source per trial
  double pop_amplitude_uv = 100.0;
  double pop_amplitude_jitter_uv = 10.0; // +/- bound, uniform
  double pop_decay = 0.25;               // 1/s (or seconds, see flag below)
  double pop_decay_jitter = 0.08;
  // When set, pop_decay is read as a time constant tau (waveform exp(-t/tau))
  // instead of a rate (exp(-rate*t)).
  bool pop_decay_is_time_constant = false;
  double pop_onset_min_s = 5.0;
  double pop_onset_max_s = 10.0;

  // electrode drifts: band-limited noise under a Tukey window
  int n_drift_sources = 10;
  double drift_activation_prob = 0.02;
  double drift_band_lo_hz = 0.1;
  double drift_band_hi_hz = 0.3;
  double drift_window_start_s = 3.0;
  double drift_window_end_s = 12.0;
  double drift_rms_uv = 50.0; // RMS before windowing

  void validate() const;
  std::size_t samples_per_trial() const;
};

struct ArtifactEvent {
  enum class Kind { pop, drift };
  Kind kind = Kind::pop;
  int trial = 0;
  std::size_t channel = 0;
  double onset_s = 0.0;

  // pop parameters
  double amplitude_uv = 0.0;
  double decay_rate = 0.0; // 1/s as realized in the waveform

  // drift parameters
  double band_lo_hz = 0.0;
  double band_hi_hz = 0.0;
  double window_start_s = 0.0;
  double window_end_s = 0.0;
  double rms_uv = 0.0;

  // injected waveform samples starting at support_start (ends where the
  // injected signal is identically zero again)
  std::size_t support_start = 0;
  Vec waveform;
};

struct SimulatedDataset {
  TrialSet rest;
  TrialSet reach;
  TrialSet reach_clean; // no electrode noise, pops, or drifts
  std::vector<ArtifactEvent> events;
  ElectrodeMontage montage;
  double f_s_hz = 0.0;
};

// step of the given amplitude at onset, then exponential decay at decay_rate
Vec gen_pop_waveform(double amplitude_uv, double decay_rate, double onset_s,
                     std::size_t length, double f_s_hz);

// Noise spectrally confined to [band_lo, band_hi], scaled to rms_uv, then
// multiplied by a Tukey window supported on [window_start, window_end]. The
// band-limited input is refined by alternating window/band projections so the
// windowed output keeps its power inside the band.
Vec gen_drift_waveform(Rng& rng, std::size_t length, double f_s_hz, double band_lo_hz,
                       double band_hi_hz, double window_start_s, double window_end_s,
                       double rms_uv);

// Sum of Gaussian kernels: slow negativity from 7 s, sharp intensification
// after 7.7 s, minimum of mrcp_peak_uv + peak_jitter at 8.0 s + latency_s,
// back toward baseline by ~8.2 s.
Vec gen_mrcp_waveform(double trial_length_s, double f_s_hz, double latency_s = 0.0,
                      double peak_jitter_uv = 0.0, double peak_uv = -120.0);

enum class NoiseKind { white, pink, brown };

// 1/f^0, 1/f^1 or 1/f^2 power-spectrum noise with RMS equal to amplitude_uv
Vec gen_colored_noise(NoiseKind kind, std::size_t length, double amplitude_uv, Rng& rng,
                      double f_s_hz);
Vec gen_colored_noise(NoiseKind kind, std::size_t length, double amplitude_uv,
                      std::uint64_t seed, double f_s_hz);

// One subject's full dataset; a pure function of (spec, subject_seed).
SimulatedDataset simulate_subject(const SimulationSpec& spec, std::uint64_t subject_seed);

} // namespace hear
