#include "hear/evaluation.hpp"

#include "hear/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hear {

std::size_t ContaminationMask::count() const {
  return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

namespace {

void check_shapes(const TrialSet& a, const TrialSet& b, const ContaminationMask& mask) {
  if (a.size() != b.size() || a.size() != mask.trials()) {
    raise("ShapeMismatch", "trial counts differ");
  }
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].rows() != b[t].rows() || a[t].cols() != b[t].cols() ||
        a[t].rows() != mask.channels() || a[t].cols() != mask.samples()) {
      raise("ShapeMismatch", "trial " + std::to_string(t) + " shapes differ");
    }
  }
}

} // namespace

double snr_db(const TrialSet& clean, const TrialSet& corrected, const ContaminationMask& mask) {
  check_shapes(clean, corrected, mask);
  double num = 0.0, den = 0.0;
  std::size_t selected = 0;
  for (std::size_t t = 0; t < clean.size(); ++t) {
    for (std::size_t c = 0; c < mask.channels(); ++c) {
      auto cl = clean[t].row(c);
      auto co = corrected[t].row(c);
      for (std::size_t s = 0; s < mask.samples(); ++s) {
        if (!mask.get(t, c, s)) continue;
        ++selected;
        num += cl[s] * cl[s];
        const double e = cl[s] - co[s];
        den += e * e;
      }
    }
  }
  if (selected == 0) raise("EmptyMask", "mask selects no elements");
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(std::sqrt(num) / std::sqrt(den));
}

ContaminationMask build_contamination_mask(const std::vector<ArtifactEvent>& events,
                                           std::size_t trials, std::size_t channels,
                                           std::size_t samples, double f_s_hz,
                                           double epsilon_uv, double window_lo_s,
                                           double window_hi_s) {
  ContaminationMask mask(trials, channels, samples);
  const auto lo = static_cast<std::size_t>(std::llround(window_lo_s * f_s_hz));
  const auto hi = std::min(static_cast<std::size_t>(std::llround(window_hi_s * f_s_hz)), samples);
  for (const auto& ev : events) {
    if (ev.trial < 0 || static_cast<std::size_t>(ev.trial) >= trials || ev.channel >= channels) {
      raise("ShapeMismatch", "event does not fit the dataset shape");
    }
    for (std::size_t i = 0; i < ev.waveform.size(); ++i) {
      const std::size_t s = ev.support_start + i;
      if (s < lo || s >= hi) continue;
      if (std::abs(ev.waveform[i]) > epsilon_uv) {
        mask.set(static_cast<std::size_t>(ev.trial), ev.channel, s, true);
      }
    }
  }
  return mask;
}

ContaminationMask complement_mask(const ContaminationMask& mask, double f_s_hz,
                                  double window_lo_s, double window_hi_s) {
  ContaminationMask out(mask.trials(), mask.channels(), mask.samples());
  const auto lo = static_cast<std::size_t>(std::llround(window_lo_s * f_s_hz));
  const auto hi =
      std::min(static_cast<std::size_t>(std::llround(window_hi_s * f_s_hz)), mask.samples());
  for (std::size_t t = 0; t < mask.trials(); ++t) {
    for (std::size_t c = 0; c < mask.channels(); ++c) {
      for (std::size_t s = lo; s < hi; ++s) {
        out.set(t, c, s, !mask.get(t, c, s));
      }
    }
  }
  return out;
}

Matrix average_trials(const TrialSet& trials) {
  if (trials.empty()) raise("EmptyInput", "no trials to average");
  Matrix avg(trials[0].rows(), trials[0].cols(), 0.0);
  for (const auto& t : trials) {
    if (t.rows() != avg.rows() || t.cols() != avg.cols()) {
      raise("ShapeMismatch", "trials have differing shapes");
    }
    auto a = avg.flat();
    auto x = t.flat();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += x[i];
  }
  const double inv = 1.0 / static_cast<double>(trials.size());
  for (double& v : avg.flat()) v *= inv;
  return avg;
}

Matrix smooth_triangular(const Matrix& signal, double window_s, double f_s_hz) {
  auto len = static_cast<std::size_t>(std::llround(window_s * f_s_hz));
  if (len < 1) raise("InvalidWindow", "window must cover at least one sample");
  if (len % 2 == 0) ++len; // symmetric kernel keeps the filter zero-phase
  if (len > signal.cols()) raise("WindowTooLong", "window longer than the signal");

  Vec kernel(len);
  const auto mid = static_cast<double>(len / 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    kernel[i] = 1.0 - std::abs(static_cast<double>(i) - mid) / (mid + 1.0);
    sum += kernel[i];
  }
  for (double& k : kernel) k /= sum;

  const std::size_t n = signal.cols();
  const auto half = static_cast<std::ptrdiff_t>(len / 2);
  Matrix out(signal.rows(), n);
  for (std::size_t ch = 0; ch < signal.rows(); ++ch) {
    auto x = signal.row(ch);
    auto y = out.row(ch);
    auto reflect = [&](std::ptrdiff_t idx) -> double {
      if (idx < 0) idx = -idx;
      const auto last = static_cast<std::ptrdiff_t>(n) - 1;
      if (idx > last) idx = 2 * last - idx;
      return x[static_cast<std::size_t>(idx)];
    };
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        acc += kernel[k] * reflect(static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(k) - half);
      }
      y[i] = acc;
    }
  }
  return out;
}

std::vector<std::size_t> OutlierReport::flagged_trials() const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < amplitude.size(); ++t) {
    if (flagged(t)) out.push_back(t);
  }
  return out;
}

double OutlierReport::flagged_fraction() const {
  if (amplitude.empty()) return 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < amplitude.size(); ++t) n += flagged(t) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(amplitude.size());
}

OutlierReport detect_outlier_trials(const TrialSet& trials, const OutlierCriteria& criteria) {
  if (trials.empty()) raise("EmptyInput", "no trials");
  const std::size_t n_tr = trials.size();
  const std::size_t n_ch = trials[0].rows();
  for (const auto& t : trials) {
    if (t.rows() != n_ch || t.cols() != trials[0].cols()) {
      raise("ShapeMismatch", "trials have differing shapes");
    }
  }

  OutlierReport rep;
  rep.amplitude.assign(n_tr, false);
  rep.variance.assign(n_tr, false);
  rep.probability.assign(n_tr, false);
  rep.kurtosis.assign(n_tr, false);

  for (std::size_t t = 0; t < n_tr; ++t) {
    for (double v : trials[t].flat()) {
      if (std::abs(v) > criteria.amplitude_threshold_uv) {
        rep.amplitude[t] = true;
        break;
      }
    }
  }
  if (n_tr < 8) {
    rep.skipped = {"variance", "probability", "kurtosis"};
    return rep;
  }

  // channel-wise Gaussian over all trials pooled, for the likelihood statistic
  Vec pool_mean(n_ch, 0.0), pool_var(n_ch, 0.0);
  const double n_pool = static_cast<double>(n_tr * trials[0].cols());
  for (std::size_t c = 0; c < n_ch; ++c) {
    double m = 0.0;
    for (const auto& t : trials) {
      for (double v : t.row(c)) m += v;
    }
    m /= n_pool;
    double var = 0.0;
    for (const auto& t : trials) {
      for (double v : t.row(c)) var += (v - m) * (v - m);
    }
    pool_mean[c] = m;
    pool_var[c] = var / n_pool;
  }

  // per-trial, per-channel statistics
  Matrix log_var(n_tr, n_ch), nll(n_tr, n_ch), kurt(n_tr, n_ch);
  for (std::size_t t = 0; t < n_tr; ++t) {
    for (std::size_t c = 0; c < n_ch; ++c) {
      auto x = trials[t].row(c);
      const double n = static_cast<double>(x.size());
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= n;
      double m2 = 0.0, m4 = 0.0;
      for (double v : x) {
        const double d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
      }
      m2 /= n;
      m4 /= n;
      log_var(t, c) = std::log(m2 + 1e-300);
      kurt(t, c) = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
      if (pool_var[c] > 0.0) {
        double acc = 0.0;
        for (double v : x) {
          const double d = v - pool_mean[c];
          acc += d * d / pool_var[c];
        }
        nll(t, c) = 0.5 * acc / n + 0.5 * std::log(pool_var[c]);
      } else {
        nll(t, c) = 0.0;
      }
    }
  }

  // z-score per channel across trials; trial flagged if any channel exceeds
  auto z_flag = [&](const Matrix& stat, double threshold, std::vector<bool>& flags,
                    const char* name) {
    bool any_usable = false;
    for (std::size_t c = 0; c < n_ch; ++c) {
      double m = 0.0;
      for (std::size_t t = 0; t < n_tr; ++t) m += stat(t, c);
      m /= static_cast<double>(n_tr);
      double var = 0.0;
      for (std::size_t t = 0; t < n_tr; ++t) {
        const double d = stat(t, c) - m;
        var += d * d;
      }
      var /= static_cast<double>(n_tr);
      const double sd = std::sqrt(var);
      if (sd < 1e-12) continue; // degenerate spread on this channel
      any_usable = true;
      for (std::size_t t = 0; t < n_tr; ++t) {
        if ((stat(t, c) - m) / sd > threshold) flags[t] = true;
      }
    }
    if (!any_usable) rep.skipped.emplace_back(name);
  };
  z_flag(log_var, criteria.variance_z, rep.variance, "variance");
  z_flag(nll, criteria.probability_z, rep.probability, "probability");
  z_flag(kurt, criteria.kurtosis_z, rep.kurtosis, "kurtosis");
  return rep;
}

} // namespace hear
