#pragma once

#include "hear/montage.hpp"
#include "hear/types.hpp"
#include "hear/variance.hpp"

#include <span>
#include <string>

namespace hear {

struct HearConfig {
  double t_est_s = 0.25;
  double phi = 3.0;
  double xi = 1.0;
  double p_weight = 0.9;
  std::size_t k_neighbors = 4;
  double f_s_hz = 200.0;

  SmoothingSpec smoothing() const { return {t_est_s, f_s_hz, p_weight}; }
  void validate() const;
};

// Per-channel reference variances learned from calibration data, bound to a
// montage (and its channel order) by fingerprint.
struct CalibrationModel {
  Vec mu_s2; // uV^2, all > 0
  std::string montage_fingerprint;
  HearConfig config;

  std::size_t channels() const { return mu_s2.size(); }
  void validate() const;
};

// Reference variances: per trial, channel means are removed, the variance
// trajectory is smoothed bidirectionally, and mu_s2 is the grand mean over
// trials and samples. A flat channel raises DeadChannel.
CalibrationModel calibrate(const TrialSet& calibration_trials, const HearConfig& config,
                           const ElectrodeMontage& montage);

// P(artifact | s) = Phi((s - phi*mu_s) / (xi*mu_s)), the standard normal CDF
// evaluated at the running standard deviation s against the reference mu_s.
double artifact_probability(double s, double mu_s, double phi, double xi);

// x_c = P*D*x + (I-P)*x with diagonal P given per channel; O(k) per channel.
void apply_correction(std::span<const double> x, std::span<const double> p_art,
                      const InterpolationMatrix& d_matrix, std::span<double> out);

// D * p_art: how likely each channel's kNN estimate is itself contaminated.
Vec uncorrectable_probability(std::span<const double> p_art, const InterpolationMatrix& d_matrix);

// Online corrector for one stream. Single writer; distinct streams can share
// one model and interpolation matrix.
class Corrector {
public:
  Corrector(CalibrationModel model, InterpolationMatrix d_matrix);

  // Consumes one raw sample vector; writes the corrected sample and the
  // per-channel artifact probabilities (p_art may be empty to skip telemetry).
  void correct(std::span<const double> x, std::span<double> x_corrected,
               std::span<double> p_art);

  // variance back to mu_s2, sample counter zeroed; model and D unchanged
  void reset();

  std::size_t channels() const { return model_.channels(); }
  const CalibrationModel& model() const { return model_; }
  const InterpolationMatrix& d_matrix() const { return d_; }
  const VarianceState& variance() const { return variance_; }

private:
  CalibrationModel model_;
  InterpolationMatrix d_;
  VarianceState variance_;
  Vec mu_s_;   // sqrt(mu_s2), cached
  Vec p_buf_;  // scratch when the caller does not want p_art
};

// Offline variant: the variance trajectory comes from a bidirectional pass
// (seeded with mu_s2) over the whole recording; correction is then applied
// per sample. If p_art_out is non-null it receives the probability matrix.
Matrix correct_offline(const Matrix& recording, const CalibrationModel& model,
                       const InterpolationMatrix& d_matrix, Matrix* p_art_out = nullptr);

} // namespace hear
