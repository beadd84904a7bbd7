#pragma once

#include "hear/types.hpp"

#include <cstdint>
#include <span>

namespace hear {

// Parameters of the exponential variance smoother: the window t_est receives
// p_weight of the filter weights at sampling rate f_s.
struct SmoothingSpec {
  double t_est_s = 0.25;
  double f_s_hz = 0.0;
  double p_weight = 0.9;

  void validate() const;
};

// lambda = (1 - p)^(1 / (t_est * f_s)), in (0, 1)
double smoothing_factor(const SmoothingSpec& spec);

// Group delay of the forward smoother at DC, in seconds: lambda/(1-lambda)/f_s.
double dc_group_delay_s(double lambda, double f_s_hz);

// Exponential smoothing of a plain sequence: out[n] = l*out[n-1] + (1-l)*v[n],
// seeded with `init`. `reverse` runs the recursion from the last sample
// backwards (seeded at the end).
Vec exp_smooth(std::span<const double> values, double lambda, double init, bool reverse = false);

// Running per-channel instantaneous variance s2[n] = l*s2[n-1] + (1-l)*x2[n].
class VarianceState {
public:
  VarianceState(Vec initial_s2, double lambda);

  // one sample for all channels; returns the updated variance vector
  std::span<const double> update(std::span<const double> x);

  std::span<const double> values() const { return s2_; }
  double lambda() const { return lambda_; }
  std::size_t channels() const { return s2_.size(); }
  std::uint64_t samples_seen() const { return samples_seen_; }

  void reinitialize(std::span<const double> s2);

private:
  Vec s2_;
  double lambda_;
  std::uint64_t samples_seen_ = 0;
};

// Smoothed variance trajectory over a whole recording: a forward pass of the
// variance recursion over the squared signal, then a backward pass applied to
// the forward output. Passes are seeded with `init` per channel when given,
// otherwise with the first (resp. last) value of the sequence they process.
Matrix smooth_variance_bidirectional(const Matrix& x, double lambda);
Matrix smooth_variance_bidirectional(const Matrix& x, double lambda, std::span<const double> init);

} // namespace hear
