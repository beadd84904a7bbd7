#pragma once

#include "hear/sim.hpp"
#include "hear/types.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hear {

// Boolean trials x channels x samples tensor marking contaminated elements.
class ContaminationMask {
public:
  ContaminationMask() = default;
  ContaminationMask(std::size_t trials, std::size_t channels, std::size_t samples)
      : trials_(trials), channels_(channels), samples_(samples),
        bits_(trials * channels * samples, 0) {}

  std::size_t trials() const { return trials_; }
  std::size_t channels() const { return channels_; }
  std::size_t samples() const { return samples_; }

  bool get(std::size_t t, std::size_t c, std::size_t s) const {
    return bits_[(t * channels_ + c) * samples_ + s] != 0;
  }
  void set(std::size_t t, std::size_t c, std::size_t s, bool v) {
    bits_[(t * channels_ + c) * samples_ + s] = v ? 1 : 0;
  }
  std::size_t count() const;

private:
  std::size_t trials_ = 0, channels_ = 0, samples_ = 0;
  std::vector<std::uint8_t> bits_;
};

// 20*log10(||clean o M|| / ||clean o M - corrected o M||) in dB;
// +infinity when the denominator is zero.
double snr_db(const TrialSet& clean, const TrialSet& corrected, const ContaminationMask& mask);

// Element (trial, channel, sample) is contaminated iff some event on that
// trial/channel injects |waveform| > epsilon_uv there AND the sample lies in
// [window_lo, window_hi) seconds (the evaluation interval).
ContaminationMask build_contamination_mask(const std::vector<ArtifactEvent>& events,
                                           std::size_t trials, std::size_t channels,
                                           std::size_t samples, double f_s_hz,
                                           double epsilon_uv = 1.0, double window_lo_s = 5.0,
                                           double window_hi_s = 10.0);

// Complement of `mask` restricted to the same evaluation window; together the
// two partition the window exactly.
ContaminationMask complement_mask(const ContaminationMask& mask, double f_s_hz,
                                  double window_lo_s = 5.0, double window_hi_s = 10.0);

// arithmetic mean over the trial axis
Matrix average_trials(const TrialSet& trials);

// Zero-phase convolution with a unit-area triangular kernel of the given
// width (rounded up to an odd number of samples); edges are reflected.
Matrix smooth_triangular(const Matrix& signal, double window_s, double f_s_hz);

struct OutlierCriteria {
  double amplitude_threshold_uv = 200.0;
  double probability_z = 6.0;
  double variance_z = 4.0;
  double kurtosis_z = 6.0;
};

struct OutlierReport {
  // per-trial flags per criterion
  std::vector<bool> amplitude;
  std::vector<bool> variance;
  std::vector<bool> probability;
  std::vector<bool> kurtosis;
  // criteria skipped because the statistic had no spread across trials
  std::vector<std::string> skipped;

  bool flagged(std::size_t trial) const {
    return amplitude[trial] || variance[trial] || probability[trial] || kurtosis[trial];
  }
  std::vector<std::size_t> flagged_trials() const;
  double flagged_fraction() const;
};

// Amplitude threshold plus per-channel z-scores (across trials) of per-trial
// log-variance, Gaussian negative mean log-likelihood and excess kurtosis;
// a trial is flagged when any channel exceeds the criterion's threshold.
// Z criteria require at least 8 trials and skip degenerate statistics.
OutlierReport detect_outlier_trials(const TrialSet& trials, const OutlierCriteria& criteria);

} // namespace hear
