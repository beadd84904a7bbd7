#include "hear/variance.hpp"

#include "hear/error.hpp"

#include <cmath>
#include <string>

namespace hear {

void SmoothingSpec::validate() const {
  if (!(t_est_s > 0.0)) raise("InvalidSmoothingSpec", "t_est must be > 0");
  if (!(f_s_hz > 0.0)) raise("InvalidSmoothingSpec", "f_s must be > 0");
  if (!(p_weight > 0.0 && p_weight < 1.0)) {
    raise("InvalidSmoothingSpec", "p_weight must lie in (0, 1)");
  }
  if (!(t_est_s * f_s_hz >= 1.0)) {
    raise("InvalidSmoothingSpec", "t_est * f_s must cover at least one sample");
  }
}

double smoothing_factor(const SmoothingSpec& spec) {
  spec.validate();
  return std::pow(1.0 - spec.p_weight, 1.0 / (spec.t_est_s * spec.f_s_hz));
}

double dc_group_delay_s(double lambda, double f_s_hz) {
  return lambda / (1.0 - lambda) / f_s_hz;
}

Vec exp_smooth(std::span<const double> values, double lambda, double init, bool reverse) {
  Vec out(values.size());
  double state = init;
  if (!reverse) {
    for (std::size_t n = 0; n < values.size(); ++n) {
      state = lambda * state + (1.0 - lambda) * values[n];
      out[n] = state;
    }
  } else {
    for (std::size_t n = values.size(); n-- > 0;) {
      state = lambda * state + (1.0 - lambda) * values[n];
      out[n] = state;
    }
  }
  return out;
}

VarianceState::VarianceState(Vec initial_s2, double lambda)
    : s2_(std::move(initial_s2)), lambda_(lambda) {
  if (!(lambda_ > 0.0 && lambda_ < 1.0)) {
    raise("InvalidSmoothingFactor", "lambda must lie in (0, 1)");
  }
  for (double v : s2_) {
    if (!(v >= 0.0)) raise("InvalidVariance", "initial variances must be >= 0");
  }
}

std::span<const double> VarianceState::update(std::span<const double> x) {
  if (x.size() != s2_.size()) {
    raise("DimensionMismatch", "sample has " + std::to_string(x.size()) +
                                   " channels, state has " + std::to_string(s2_.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) raise("NonFiniteSample", "non-finite input sample");
    s2_[i] = lambda_ * s2_[i] + (1.0 - lambda_) * x[i] * x[i];
  }
  ++samples_seen_;
  return s2_;
}

void VarianceState::reinitialize(std::span<const double> s2) {
  if (s2.size() != s2_.size()) {
    raise("DimensionMismatch", "reinitialize with mismatched channel count");
  }
  s2_.assign(s2.begin(), s2.end());
  samples_seen_ = 0;
}

namespace {

Matrix bidirectional_impl(const Matrix& x, double lambda, const double* init) {
  if (x.empty()) raise("EmptyInput", "variance smoothing needs at least one sample");
  if (!(lambda > 0.0 && lambda < 1.0)) {
    raise("InvalidSmoothingFactor", "lambda must lie in (0, 1)");
  }
  const std::size_t n = x.cols();
  Matrix out(x.rows(), n);
  Vec squared(n);
  for (std::size_t ch = 0; ch < x.rows(); ++ch) {
    auto xs = x.row(ch);
    for (std::size_t s = 0; s < n; ++s) {
      if (!std::isfinite(xs[s])) raise("NonFiniteSample", "non-finite input sample");
      squared[s] = xs[s] * xs[s];
    }
    const double i0 = init ? init[ch] : squared.front();
    Vec forward = exp_smooth(squared, lambda, i0, false);
    const double i1 = init ? init[ch] : forward.back();
    Vec both = exp_smooth(forward, lambda, i1, true);
    auto os = out.row(ch);
    for (std::size_t s = 0; s < n; ++s) os[s] = both[s];
  }
  return out;
}

} // namespace

Matrix smooth_variance_bidirectional(const Matrix& x, double lambda) {
  return bidirectional_impl(x, lambda, nullptr);
}

Matrix smooth_variance_bidirectional(const Matrix& x, double lambda,
                                     std::span<const double> init) {
  if (init.size() != x.rows()) {
    raise("DimensionMismatch", "init vector does not match channel count");
  }
  return bidirectional_impl(x, lambda, init.data());
}

} // namespace hear
