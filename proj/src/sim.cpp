#include "hear/sim.hpp"

#include "hear/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace hear {

namespace {

// ---------------------------------------------------------------------------
// FFT plumbing (FFTW double precision, plans cached per length)

class FftCache {
public:
  static FftCache& instance() {
    static FftCache c;
    return c;
  }

  // real -> half spectrum (n/2 + 1 bins)
  std::vector<std::complex<double>> rfft(std::span<const double> x) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& p = plans(x.size());
    std::copy(x.begin(), x.end(), p.real.begin());
    fftw_execute(p.forward);
    std::vector<std::complex<double>> out(p.spec.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = {p.spec[i][0], p.spec[i][1]};
    }
    return out;
  }

  // half spectrum -> real signal of length n, normalized by 1/n
  Vec irfft(std::span<const std::complex<double>> spec, std::size_t n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& p = plans(n);
    for (std::size_t i = 0; i < p.spec.size(); ++i) {
      p.spec[i][0] = spec[i].real();
      p.spec[i][1] = spec[i].imag();
    }
    fftw_execute(p.inverse);
    Vec out(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = p.real[i] * scale;
    return out;
  }

private:
  struct Plans {
    std::vector<double> real;
    std::vector<fftw_complex> spec;
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
  };

  Plans& plans(std::size_t n) {
    auto it = cache_.find(n);
    if (it == cache_.end()) {
      auto& p = cache_[n];
      p.real.resize(n);
      p.spec.resize(n / 2 + 1);
      p.forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), p.real.data(), p.spec.data(),
                                       FFTW_ESTIMATE);
      p.inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), p.spec.data(), p.real.data(),
                                       FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
      return p;
    }
    return it->second;
  }

  std::mutex mutex_;
  std::map<std::size_t, Plans> cache_;
};

double rms(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

// Tukey window over [0, n): flat with cosine tapers of alpha/2 each side.
Vec tukey_window(std::size_t n, double alpha) {
  Vec w(n, 1.0);
  if (n == 1) return w;
  const double edge = alpha / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    if (t < edge) {
      w[i] = 0.5 * (1.0 + std::cos(std::numbers::pi * (2.0 * t / alpha - 1.0)));
    } else if (t > 1.0 - edge) {
      w[i] = 0.5 * (1.0 + std::cos(std::numbers::pi * (2.0 * t / alpha - 2.0 / alpha + 1.0)));
    }
  }
  return w;
}

constexpr double kSourceHemisphereRadiusMm = 100.0;
constexpr double kElectrodeSphereRadiusMm = 130.0;
constexpr double kGainEpsilonMm2 = 400.0;
constexpr double kDriftTukeyAlpha = 0.15;
constexpr int kDriftProjectionIters = 8;

struct MontageEntry {
  const char* label;
  int anterior;
  int lateral;
};

// Extended 10/20 set: rows Fp..O at 18 degree anterior steps, lateral numbering
// at 18 degree steps (odd left, even right), plus P9/P10/Iz to reach 64.
constexpr MontageEntry kMontage64[] = {
    {"Fp1", 4, -1}, {"Fpz", 4, 0},  {"Fp2", 4, 1},
    {"AF7", 3, -4}, {"AF3", 3, -2}, {"AFz", 3, 0},  {"AF4", 3, 2},  {"AF8", 3, 4},
    {"F7", 2, -4},  {"F5", 2, -3},  {"F3", 2, -2},  {"F1", 2, -1},  {"Fz", 2, 0},
    {"F2", 2, 1},   {"F4", 2, 2},   {"F6", 2, 3},   {"F8", 2, 4},
    {"FT7", 1, -4}, {"FC5", 1, -3}, {"FC3", 1, -2}, {"FC1", 1, -1}, {"FCz", 1, 0},
    {"FC2", 1, 1},  {"FC4", 1, 2},  {"FC6", 1, 3},  {"FT8", 1, 4},
    {"T7", 0, -4},  {"C5", 0, -3},  {"C3", 0, -2},  {"C1", 0, -1},  {"Cz", 0, 0},
    {"C2", 0, 1},   {"C4", 0, 2},   {"C6", 0, 3},   {"T8", 0, 4},
    {"TP7", -1, -4}, {"CP5", -1, -3}, {"CP3", -1, -2}, {"CP1", -1, -1}, {"CPz", -1, 0},
    {"CP2", -1, 1},  {"CP4", -1, 2},  {"CP6", -1, 3},  {"TP8", -1, 4},
    {"P9", -2, -5}, {"P7", -2, -4}, {"P5", -2, -3}, {"P3", -2, -2}, {"P1", -2, -1},
    {"Pz", -2, 0},  {"P2", -2, 1},  {"P4", -2, 2},  {"P6", -2, 3},  {"P8", -2, 4},
    {"P10", -2, 5},
    {"PO7", -3, -4}, {"PO3", -3, -2}, {"POz", -3, 0}, {"PO4", -3, 2}, {"PO8", -3, 4},
    {"O1", -4, -1}, {"Oz", -4, 0},  {"O2", -4, 1},
    {"Iz", -5, 0},
};
static_assert(std::size(kMontage64) == 64);

} // namespace

ElectrodeMontage standard_montage_64() {
  std::vector<Electrode> channels;
  channels.reserve(64);
  for (const auto& e : kMontage64) {
    const double a = static_cast<double>(e.anterior);
    const double l = static_cast<double>(e.lateral);
    const double h = std::hypot(a, l);
    const double rho = 18.0 * h * std::numbers::pi / 180.0;
    Electrode ch;
    ch.label = e.label;
    if (h == 0.0) {
      ch.position_mm = {0.0, 0.0, kElectrodeSphereRadiusMm};
    } else {
      // +x right, +y anterior, +z up
      ch.position_mm = {kElectrodeSphereRadiusMm * std::sin(rho) * l / h,
                        kElectrodeSphereRadiusMm * std::sin(rho) * a / h,
                        kElectrodeSphereRadiusMm * std::cos(rho)};
    }
    channels.push_back(std::move(ch));
  }
  return ElectrodeMontage::from_channels(std::move(channels));
}

void SimulationSpec::validate() const {
  if (n_subjects < 1 || n_rest_trials < 1 || n_reach_trials < 1) {
    raise("InvalidSimulationSpec", "subject and trial counts must be >= 1");
  }
  if (!(trial_length_s > 0.0) || !(f_s_hz > 0.0)) {
    raise("InvalidSimulationSpec", "trial length and sampling rate must be > 0");
  }
  const double samples = trial_length_s * f_s_hz;
  if (std::abs(samples - std::round(samples)) > 1e-9) {
    raise("InvalidSimulationSpec", "trial_length * f_s must be an integral sample count");
  }
  if (n_electrodes < 2 || n_electrodes > 64) {
    raise("InvalidSimulationSpec", "n_electrodes must lie in [2, 64]");
  }
  if (n_pink_sources < 0 || n_brown_sources < 0 || n_pop_sources < 0 || n_drift_sources < 0) {
    raise("InvalidSimulationSpec", "source counts must be >= 0");
  }
  if (!(background_rms_uv > 0.0)) {
    raise("InvalidSimulationSpec", "background_rms_uv must be > 0");
  }
  if (electrode_noise_min_uv < 0.0 || electrode_noise_max_uv < electrode_noise_min_uv) {
    raise("InvalidSimulationSpec", "electrode noise range is invalid");
  }
  if (!(pop_onset_min_s >= 0.0) || !(pop_onset_max_s <= trial_length_s) ||
      !(pop_onset_min_s <= pop_onset_max_s)) {
    raise("InvalidSimulationSpec", "pop onset window must lie within the trial");
  }
  if (!(drift_band_lo_hz > 0.0) || !(drift_band_hi_hz > drift_band_lo_hz) ||
      !(drift_band_hi_hz < f_s_hz / 2.0)) {
    raise("InvalidSimulationSpec", "drift band must lie in (0, f_s/2)");
  }
  if (!(drift_window_start_s >= 0.0) || !(drift_window_end_s <= trial_length_s) ||
      !(drift_window_start_s < drift_window_end_s)) {
    raise("InvalidSimulationSpec", "drift window must lie within the trial");
  }
}

std::size_t SimulationSpec::samples_per_trial() const {
  return static_cast<std::size_t>(std::llround(trial_length_s * f_s_hz));
}

Vec gen_pop_waveform(double amplitude_uv, double decay_rate, double onset_s,
                     std::size_t length, double f_s_hz) {
  if (!(onset_s >= 0.0) || onset_s * f_s_hz >= static_cast<double>(length)) {
    raise("OnsetOutsideTrial", "pop onset " + std::to_string(onset_s) + " s is outside the trial");
  }
  Vec w(length, 0.0);
  for (std::size_t i = 0; i < length; ++i) {
    const double t = static_cast<double>(i) / f_s_hz;
    if (t >= onset_s) w[i] = amplitude_uv * std::exp(-decay_rate * (t - onset_s));
  }
  return w;
}

Vec gen_drift_waveform(Rng& rng, std::size_t length, double f_s_hz, double band_lo_hz,
                       double band_hi_hz, double window_start_s, double window_end_s,
                       double rms_uv) {
  if (!(band_lo_hz > 0.0) || !(band_hi_hz > band_lo_hz) || !(band_hi_hz < f_s_hz / 2.0)) {
    raise("InvalidBand", "drift band must lie in (0, f_s/2)");
  }
  auto& fft = FftCache::instance();
  const std::size_t bins = length / 2 + 1;
  const double df = f_s_hz / static_cast<double>(length);

  // pink-weighted random spectrum on the in-band bins only
  std::vector<std::complex<double>> spec(bins, 0.0);
  std::vector<std::size_t> in_band;
  for (std::size_t k = 1; k < bins; ++k) {
    const double f = df * static_cast<double>(k);
    if (f >= band_lo_hz && f <= band_hi_hz) in_band.push_back(k);
  }
  if (in_band.empty()) raise("InvalidBand", "no spectral bins inside the drift band");
  for (std::size_t k : in_band) {
    const double f = df * static_cast<double>(k);
    const double mag = 1.0 / std::sqrt(f);
    spec[k] = {mag * rng.gaussian(), mag * rng.gaussian()};
  }
  Vec x = fft.irfft(spec, length);

  // window support
  auto i0 = static_cast<std::size_t>(std::llround(window_start_s * f_s_hz));
  auto i1 = static_cast<std::size_t>(std::llround(window_end_s * f_s_hz));
  i1 = std::min(i1, length);
  if (i0 >= i1) raise("InvalidBand", "drift window is empty");
  const Vec win = tukey_window(i1 - i0, kDriftTukeyAlpha);

  // Alternate windowing and band projection so the windowed waveform keeps
  // its power inside the band despite the finite support.
  Vec y(length);
  for (int iter = 0; iter < kDriftProjectionIters; ++iter) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = i0; i < i1; ++i) y[i] = x[i] * win[i - i0];
    auto sp = fft.rfft(y);
    for (std::size_t k = 0; k < bins; ++k) {
      if (!std::binary_search(in_band.begin(), in_band.end(), k)) sp[k] = 0.0;
    }
    x = fft.irfft(sp, length);
  }
  const double r = rms(x);
  const double scale = r > 0.0 ? rms_uv / r : 0.0;
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = i0; i < i1; ++i) y[i] = scale * x[i] * win[i - i0];
  return y;
}

Vec gen_mrcp_waveform(double trial_length_s, double f_s_hz, double latency_s,
                      double peak_jitter_uv, double peak_uv) {
  const auto n = static_cast<std::size_t>(std::llround(trial_length_s * f_s_hz));
  // slow pre-movement negativity, a broad buildup, and the sharp peak kernel
  struct Kernel {
    double gain, center_s, width_s;
  };
  constexpr Kernel kKernels[] = {{-6.0, 7.3, 0.22}, {-25.0, 7.8, 0.25}, {-100.0, 8.0, 0.07}};
  Vec w(n, 0.0);
  double min_v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / f_s_hz - latency_s;
    double v = 0.0;
    for (const auto& k : kKernels) {
      const double d = t - k.center_s;
      v += k.gain * std::exp(-d * d / (2.0 * k.width_s * k.width_s));
    }
    w[i] = v;
    min_v = std::min(min_v, v);
  }
  if (min_v < 0.0) {
    // scale so the realized minimum is exactly peak_uv + peak_jitter_uv
    const double target = peak_uv + peak_jitter_uv;
    for (double& v : w) v *= target / min_v;
  }
  return w;
}

Vec gen_colored_noise(NoiseKind kind, std::size_t length, double amplitude_uv, Rng& rng,
                      double f_s_hz) {
  if (!(amplitude_uv > 0.0)) raise("InvalidInput", "noise amplitude must be > 0");
  const double beta = kind == NoiseKind::white ? 0.0 : (kind == NoiseKind::pink ? 1.0 : 2.0);
  auto& fft = FftCache::instance();
  const std::size_t bins = length / 2 + 1;
  const double df = f_s_hz / static_cast<double>(length);
  std::vector<std::complex<double>> spec(bins, 0.0);
  for (std::size_t k = 1; k < bins; ++k) {
    const double f = df * static_cast<double>(k);
    const double mag = std::pow(f, -beta / 2.0);
    spec[k] = {mag * rng.gaussian(), mag * rng.gaussian()};
  }
  Vec x = fft.irfft(spec, length);
  const double r = rms(x);
  if (r > 0.0) {
    const double scale = amplitude_uv / r;
    for (double& v : x) v *= scale;
  }
  return x;
}

Vec gen_colored_noise(NoiseKind kind, std::size_t length, double amplitude_uv,
                      std::uint64_t seed, double f_s_hz) {
  Rng rng(seed);
  return gen_colored_noise(kind, length, amplitude_uv, rng, f_s_hz);
}

namespace {

struct ForwardModel {
  // gains[s][e]: source s to electrode e
  std::vector<Vec> gains;
  double c = 0.0; // global gain scale
};

ForwardModel build_forward_model(Rng& rng, const ElectrodeMontage& montage,
                                 const SimulationSpec& spec) {
  const int n_src = spec.n_pink_sources + spec.n_brown_sources;
  const std::size_t n_el = montage.size();
  std::vector<std::array<double, 3>> sources(n_src);
  for (auto& s : sources) {
    // uniform on the hemisphere surface (z uniform on a sphere's cap)
    const double z = rng.uniform(0.0, kSourceHemisphereRadiusMm);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double rr = std::sqrt(kSourceHemisphereRadiusMm * kSourceHemisphereRadiusMm - z * z);
    s = {rr * std::cos(phi), rr * std::sin(phi), z};
  }
  ForwardModel fm;
  fm.gains.assign(n_src, Vec(n_el, 0.0));
  for (int s = 0; s < n_src; ++s) {
    for (std::size_t e = 0; e < n_el; ++e) {
      const auto& p = montage.channel(e).position_mm;
      const double dx = p[0] - sources[s][0];
      const double dy = p[1] - sources[s][1];
      const double dz = p[2] - sources[s][2];
      fm.gains[s][e] = 1.0 / (dx * dx + dy * dy + dz * dz + kGainEpsilonMm2);
    }
  }
  // scale so the median per-electrode background RMS hits the target
  Vec bg(n_el, 0.0);
  for (int s = 0; s < n_src; ++s) {
    const double amp = s < spec.n_pink_sources ? spec.pink_amplitude_uv : spec.brown_amplitude_uv;
    for (std::size_t e = 0; e < n_el; ++e) {
      bg[e] += fm.gains[s][e] * fm.gains[s][e] * amp * amp;
    }
  }
  Vec bg_rms(n_el);
  for (std::size_t e = 0; e < n_el; ++e) bg_rms[e] = std::sqrt(bg[e]);
  Vec sorted = bg_rms;
  std::nth_element(sorted.begin(), sorted.begin() + n_el / 2, sorted.end());
  const double median = sorted[n_el / 2];
  fm.c = median > 0.0 ? spec.background_rms_uv / median : 1.0;
  for (auto& g : fm.gains) {
    for (double& v : g) v *= fm.c;
  }
  return fm;
}

Vec mrcp_gains(const ElectrodeMontage& montage, const std::array<double, 3>& loc, double c) {
  Vec g(montage.size());
  for (std::size_t e = 0; e < montage.size(); ++e) {
    const auto& p = montage.channel(e).position_mm;
    const double dx = p[0] - loc[0];
    const double dy = p[1] - loc[1];
    const double dz = p[2] - loc[2];
    g[e] = c / (dx * dx + dy * dy + dz * dz + kGainEpsilonMm2);
  }
  return g;
}

} // namespace

SimulatedDataset simulate_subject(const SimulationSpec& spec, std::uint64_t subject_seed) {
  spec.validate();
  Rng rng(subject_seed);

  SimulatedDataset ds;
  ds.f_s_hz = spec.f_s_hz;
  {
    const ElectrodeMontage full = standard_montage_64();
    if (spec.n_electrodes == 64) {
      ds.montage = full;
    } else {
      std::vector<Electrode> subset(full.channels().begin(),
                                    full.channels().begin() + spec.n_electrodes);
      ds.montage = ElectrodeMontage::from_channels(std::move(subset));
    }
  }
  const std::size_t n_el = ds.montage.size();
  const std::size_t n_samp = spec.samples_per_trial();
  const int n_src = spec.n_pink_sources + spec.n_brown_sources;

  const ForwardModel fm = build_forward_model(rng, ds.montage, spec);

  // subject-level MRCP source location
  std::array<double, 3> mrcp_base = {-25.0, 0.0, 80.0};
  {
    double jitter[3];
    rng.ball(spec.mrcp_location_jitter_mm, jitter);
    for (int i = 0; i < 3; ++i) mrcp_base[i] += jitter[i];
  }

  // per-electrode white measurement noise amplitude
  Vec noise_amp(n_el);
  for (auto& a : noise_amp) {
    a = rng.uniform(spec.electrode_noise_min_uv, spec.electrode_noise_max_uv);
  }

  auto mix_background = [&](Matrix& out) {
    out = Matrix(n_el, n_samp, 0.0);
    for (int s = 0; s < n_src; ++s) {
      const bool pink = s < spec.n_pink_sources;
      const double amp = pink ? spec.pink_amplitude_uv : spec.brown_amplitude_uv;
      const Vec src = gen_colored_noise(pink ? NoiseKind::pink : NoiseKind::brown, n_samp, amp,
                                        rng, spec.f_s_hz);
      for (std::size_t e = 0; e < n_el; ++e) {
        const double g = fm.gains[s][e];
        auto row = out.row(e);
        for (std::size_t i = 0; i < n_samp; ++i) row[i] += g * src[i];
      }
    }
  };

  auto add_electrode_noise = [&](Matrix& x) {
    for (std::size_t e = 0; e < n_el; ++e) {
      auto row = x.row(e);
      for (std::size_t i = 0; i < n_samp; ++i) row[i] += noise_amp[e] * rng.gaussian();
    }
  };

  ds.rest.reserve(spec.n_rest_trials);
  for (int tr = 0; tr < spec.n_rest_trials; ++tr) {
    Matrix x;
    mix_background(x);
    add_electrode_noise(x);
    ds.rest.push_back(std::move(x));
  }

  ds.reach.reserve(spec.n_reach_trials);
  ds.reach_clean.reserve(spec.n_reach_trials);
  for (int tr = 0; tr < spec.n_reach_trials; ++tr) {
    Matrix clean;
    mix_background(clean);

    // MRCP with per-trial location, latency and peak jitter
    std::array<double, 3> loc = mrcp_base;
    {
      double jitter[3];
      rng.ball(spec.mrcp_location_jitter_mm, jitter);
      for (int i = 0; i < 3; ++i) loc[i] += jitter[i];
    }
    const double latency = rng.uniform(-spec.mrcp_latency_jitter_s, spec.mrcp_latency_jitter_s);
    const double peak_jit = rng.uniform(-spec.mrcp_peak_jitter_uv, spec.mrcp_peak_jitter_uv);
    const Vec wave = gen_mrcp_waveform(spec.trial_length_s, spec.f_s_hz, latency, peak_jit,
                                       spec.mrcp_peak_uv);
    const Vec g = mrcp_gains(ds.montage, loc, fm.c);
    for (std::size_t e = 0; e < n_el; ++e) {
      auto row = clean.row(e);
      for (std::size_t i = 0; i < n_samp; ++i) row[i] += g[e] * wave[i];
    }

    Matrix noisy = clean;
    add_electrode_noise(noisy);

    for (int s = 0; s < spec.n_pop_sources; ++s) {
      if (rng.uniform01() >= spec.pop_activation_prob) continue;
      ArtifactEvent ev;
      ev.kind = ArtifactEvent::Kind::pop;
      ev.trial = tr;
      ev.channel = rng.integer(n_el);
      ev.onset_s = rng.uniform(spec.pop_onset_min_s, spec.pop_onset_max_s);
      ev.amplitude_uv = spec.pop_amplitude_uv +
                        rng.uniform(-spec.pop_amplitude_jitter_uv, spec.pop_amplitude_jitter_uv);
      double decay = spec.pop_decay + rng.uniform(-spec.pop_decay_jitter, spec.pop_decay_jitter);
      if (spec.pop_decay_is_time_constant) decay = 1.0 / decay;
      ev.decay_rate = decay;
      const Vec w = gen_pop_waveform(ev.amplitude_uv, ev.decay_rate, ev.onset_s, n_samp,
                                     spec.f_s_hz);
      auto row = noisy.row(ev.channel);
      const auto first = static_cast<std::size_t>(std::ceil(ev.onset_s * spec.f_s_hz - 1e-9));
      for (std::size_t i = first; i < n_samp; ++i) row[i] += w[i];
      ev.support_start = first;
      ev.waveform.assign(w.begin() + static_cast<std::ptrdiff_t>(first), w.end());
      ds.events.push_back(std::move(ev));
    }

    for (int s = 0; s < spec.n_drift_sources; ++s) {
      if (rng.uniform01() >= spec.drift_activation_prob) continue;
      ArtifactEvent ev;
      ev.kind = ArtifactEvent::Kind::drift;
      ev.trial = tr;
      ev.channel = rng.integer(n_el);
      ev.onset_s = spec.drift_window_start_s;
      ev.band_lo_hz = spec.drift_band_lo_hz;
      ev.band_hi_hz = spec.drift_band_hi_hz;
      ev.window_start_s = spec.drift_window_start_s;
      ev.window_end_s = spec.drift_window_end_s;
      ev.rms_uv = spec.drift_rms_uv;
      const Vec w = gen_drift_waveform(rng, n_samp, spec.f_s_hz, spec.drift_band_lo_hz,
                                       spec.drift_band_hi_hz, spec.drift_window_start_s,
                                       spec.drift_window_end_s, spec.drift_rms_uv);
      auto row = noisy.row(ev.channel);
      const auto i0 = static_cast<std::size_t>(std::llround(spec.drift_window_start_s * spec.f_s_hz));
      const auto i1 = std::min(
          static_cast<std::size_t>(std::llround(spec.drift_window_end_s * spec.f_s_hz)), n_samp);
      for (std::size_t i = i0; i < i1; ++i) row[i] += w[i];
      ev.support_start = i0;
      ev.waveform.assign(w.begin() + static_cast<std::ptrdiff_t>(i0),
                         w.begin() + static_cast<std::ptrdiff_t>(i1));
      ds.events.push_back(std::move(ev));
    }

    ds.reach.push_back(std::move(noisy));
    ds.reach_clean.push_back(std::move(clean));
  }
  return ds;
}

} // namespace hear
