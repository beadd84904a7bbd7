#include "hear/hear.hpp"

#include "hear/error.hpp"

#include <cmath>
#include <string>

namespace hear {

void HearConfig::validate() const {
  smoothing().validate();
  if (!(phi > 0.0)) raise("InvalidConfig", "phi must be > 0");
  if (!(xi > 0.0)) raise("InvalidConfig", "xi must be > 0");
  if (k_neighbors < 1) raise("InvalidConfig", "k_neighbors must be >= 1");
}

void CalibrationModel::validate() const {
  config.validate();
  if (mu_s2.empty()) raise("InvalidModel", "model has no channels");
  for (double v : mu_s2) {
    if (!(v > 0.0)) raise("InvalidModel", "reference variances must be > 0");
  }
  if (montage_fingerprint.empty()) raise("InvalidModel", "montage fingerprint missing");
}

CalibrationModel calibrate(const TrialSet& calibration_trials, const HearConfig& config,
                           const ElectrodeMontage& montage) {
  config.validate();
  if (calibration_trials.empty()) raise("EmptyInput", "calibration needs at least one trial");
  const std::size_t channels = montage.size();
  const double lambda = smoothing_factor(config.smoothing());
  const auto window = static_cast<std::size_t>(config.t_est_s * config.f_s_hz);

  Vec acc(channels, 0.0);
  std::size_t total_samples = 0;
  Matrix centered;
  for (const auto& trial : calibration_trials) {
    if (trial.rows() != channels) {
      raise("DimensionMismatch", "trial has " + std::to_string(trial.rows()) +
                                     " channels, montage has " + std::to_string(channels));
    }
    if (trial.cols() < window) {
      raise("TrialTooShort", "trial shorter than the smoothing window (" +
                                 std::to_string(window) + " samples)");
    }
    centered = trial;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      auto row = centered.row(ch);
      double mean = 0.0;
      for (double v : row) mean += v;
      mean /= static_cast<double>(row.size());
      for (double& v : row) v -= mean;
    }
    const Matrix smoothed = smooth_variance_bidirectional(centered, lambda);
    for (std::size_t ch = 0; ch < channels; ++ch) {
      for (double v : smoothed.row(ch)) acc[ch] += v;
    }
    total_samples += trial.cols();
  }
  CalibrationModel model;
  model.mu_s2.resize(channels);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    model.mu_s2[ch] = acc[ch] / static_cast<double>(total_samples);
    if (!(model.mu_s2[ch] > 0.0)) {
      raise("DeadChannel", "channel '" + montage.channel(ch).label +
                               "' has zero variance in the calibration data");
    }
  }
  model.montage_fingerprint = montage.fingerprint();
  model.config = config;
  return model;
}

double artifact_probability(double s, double mu_s, double phi, double xi) {
  if (!(mu_s > 0.0)) raise("InvalidReference", "mu_s must be > 0");
  if (!(s >= 0.0)) raise("InvalidInput", "s must be >= 0");
  const double z = (s - phi * mu_s) / (xi * mu_s);
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

void apply_correction(std::span<const double> x, std::span<const double> p_art,
                      const InterpolationMatrix& d_matrix, std::span<double> out) {
  const std::size_t n = d_matrix.size();
  if (x.size() != n || p_art.size() != n || out.size() != n) {
    raise("DimensionMismatch", "correction inputs do not match channel count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    double interp = 0.0;
    for (const auto& e : d_matrix.row(i)) interp += e.weight * x[e.index];
    out[i] = p_art[i] * interp + (1.0 - p_art[i]) * x[i];
  }
}

Vec uncorrectable_probability(std::span<const double> p_art,
                              const InterpolationMatrix& d_matrix) {
  if (p_art.size() != d_matrix.size()) {
    raise("DimensionMismatch", "probability vector does not match matrix size");
  }
  Vec out(p_art.size());
  d_matrix.apply(p_art, out);
  return out;
}

Corrector::Corrector(CalibrationModel model, InterpolationMatrix d_matrix)
    : model_(std::move(model)), d_(std::move(d_matrix)),
      variance_(model_.mu_s2, smoothing_factor(model_.config.smoothing())) {
  model_.validate();
  if (d_.size() != model_.channels()) {
    raise("DimensionMismatch", "model channels (" + std::to_string(model_.channels()) +
                                   ") do not match interpolation matrix (" +
                                   std::to_string(d_.size()) + ")");
  }
  if (d_.montage_fingerprint() != model_.montage_fingerprint) {
    raise("FingerprintMismatch",
          "calibration model was built for a different montage or channel order");
  }
  mu_s_.resize(model_.channels());
  for (std::size_t i = 0; i < mu_s_.size(); ++i) mu_s_[i] = std::sqrt(model_.mu_s2[i]);
  p_buf_.resize(model_.channels());
}

void Corrector::correct(std::span<const double> x, std::span<double> x_corrected,
                        std::span<double> p_art) {
  const std::size_t n = channels();
  if (x.size() != n || x_corrected.size() != n) {
    raise("DimensionMismatch", "sample does not match model channel count");
  }
  std::span<double> p = p_art.empty() ? std::span<double>(p_buf_) : p_art;
  if (p.size() != n) raise("DimensionMismatch", "p_art span does not match channel count");

  const auto s2 = variance_.update(x);
  const double phi = model_.config.phi;
  const double xi = model_.config.xi;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = artifact_probability(std::sqrt(s2[i]), mu_s_[i], phi, xi);
  }
  apply_correction(x, p, d_, x_corrected);
}

void Corrector::reset() { variance_.reinitialize(model_.mu_s2); }

Matrix correct_offline(const Matrix& recording, const CalibrationModel& model,
                       const InterpolationMatrix& d_matrix, Matrix* p_art_out) {
  model.validate();
  if (recording.rows() != model.channels()) {
    raise("DimensionMismatch", "recording has " + std::to_string(recording.rows()) +
                                   " channels, model has " + std::to_string(model.channels()));
  }
  if (d_matrix.size() != model.channels()) {
    raise("DimensionMismatch", "interpolation matrix does not match model");
  }
  if (d_matrix.montage_fingerprint() != model.montage_fingerprint) {
    raise("FingerprintMismatch",
          "calibration model was built for a different montage or channel order");
  }
  const double lambda = smoothing_factor(model.config.smoothing());
  const Matrix s2 = smooth_variance_bidirectional(recording, lambda, model.mu_s2);

  const std::size_t n = recording.rows();
  const std::size_t samples = recording.cols();
  Matrix corrected(n, samples);
  if (p_art_out) *p_art_out = Matrix(n, samples);
  Vec x(n), p(n), y(n);
  for (std::size_t t = 0; t < samples; ++t) {
    recording.column(t, x);
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = std::sqrt(model.mu_s2[i]);
      p[i] = artifact_probability(std::sqrt(s2(i, t)), mu, model.config.phi, model.config.xi);
    }
    apply_correction(x, p, d_matrix, y);
    corrected.set_column(t, y);
    if (p_art_out) p_art_out->set_column(t, p);
  }
  return corrected;
}

} // namespace hear
