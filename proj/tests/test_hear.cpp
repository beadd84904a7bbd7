#include "doctest.h"

#include "hear/error.hpp"
#include "hear/hear.hpp"
#include "hear/montage.hpp"
#include "hear/variance.hpp"

#include <algorithm>
#include <cmath>

using namespace hear;

namespace {

ElectrodeMontage grid_montage(std::size_t n) {
  std::vector<Electrode> chans(n);
  for (std::size_t i = 0; i < n; ++i) {
    chans[i].label = "g" + std::to_string(i);
    chans[i].position_mm = {static_cast<double>(i % 8) * 10.0,
                            static_cast<double>(i / 8) * 10.0, 0.0};
  }
  return ElectrodeMontage::from_channels(std::move(chans));
}

ElectrodeMontage pair_montage() { return load_montage("L 0 0 0\nR 10 0 0\n"); }

HearConfig test_config(double f_s = 200.0) {
  HearConfig c;
  c.f_s_hz = f_s;
  return c;
}

Matrix white_noise_trial(Rng& rng, std::size_t channels, std::size_t samples, double rms) {
  Matrix x(channels, samples);
  for (double& v : x.flat()) v = rms * rng.gaussian();
  return x;
}

} // namespace

TEST_CASE("calibration matches a sample-variance oracle on white noise") {
  Rng rng(101);
  const auto montage = grid_montage(8);
  const std::size_t samples = 3000; // 15 s at 200 Hz
  const Matrix trial = white_noise_trial(rng, 8, samples, 1.0);

  HearConfig config = test_config();
  config.k_neighbors = 4;
  const CalibrationModel model = calibrate({trial}, config, montage);

  for (std::size_t ch = 0; ch < 8; ++ch) {
    // oracle: plain sample variance of the same seeded noise
    auto row = trial.row(ch);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(samples);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(samples);
    CHECK(model.mu_s2[ch] == doctest::Approx(var).epsilon(0.10));
    CHECK(std::abs(model.mu_s2[ch] - 1.0) < 0.1);
  }
  CHECK(model.montage_fingerprint == montage.fingerprint());
}

TEST_CASE("calibration rejects flat channels and bad shapes") {
  Rng rng(102);
  const auto montage = grid_montage(4);
  Matrix trial = white_noise_trial(rng, 4, 400, 1.0);
  for (double& v : trial.row(2)) v = 0.0;
  CHECK_THROWS_WITH_AS(calibrate({trial}, test_config(), montage),
                       doctest::Contains("DeadChannel"), HearError);

  CHECK_THROWS_WITH_AS(calibrate({}, test_config(), montage), doctest::Contains("EmptyInput"),
                       HearError);

  const Matrix short_trial = white_noise_trial(rng, 4, 10, 1.0); // < t_est * f_s
  CHECK_THROWS_WITH_AS(calibrate({short_trial}, test_config(), montage),
                       doctest::Contains("TrialTooShort"), HearError);
}

TEST_CASE("two identical trials calibrate like one") {
  Rng rng(103);
  const auto montage = grid_montage(4);
  const Matrix trial = white_noise_trial(rng, 4, 500, 2.0);
  const CalibrationModel one = calibrate({trial}, test_config(), montage);
  const CalibrationModel two = calibrate({trial, trial}, test_config(), montage);
  for (std::size_t ch = 0; ch < 4; ++ch) {
    CHECK(two.mu_s2[ch] == doctest::Approx(one.mu_s2[ch]).epsilon(1e-12));
  }
}

TEST_CASE("artifact probability anchors") {
  // 50% exactly when s = phi * mu
  CHECK(artifact_probability(3.0, 1.0, 3.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  // one deviation above the mean
  CHECK(artifact_probability(4.0, 1.0, 3.0, 1.0) ==
        doctest::Approx(0.841344746068543).epsilon(1e-12));
  // s = 0 with phi = 3, xi = 1
  CHECK(artifact_probability(0.0, 1.0, 3.0, 1.0) ==
        doctest::Approx(0.00134989803163010).epsilon(1e-9));

  CHECK_THROWS_AS(artifact_probability(1.0, 0.0, 3.0, 1.0), HearError);
  CHECK_THROWS_AS(artifact_probability(-1.0, 1.0, 3.0, 1.0), HearError);
}

TEST_CASE("artifact probability is monotone in s and in -phi") {
  Rng rng(104);
  for (int rep = 0; rep < 200; ++rep) {
    const double mu = rng.uniform(0.1, 10.0);
    const double phi = rng.uniform(0.5, 5.0);
    const double xi = rng.uniform(0.2, 3.0);
    const double s1 = rng.uniform(0.0, 20.0);
    const double s2 = s1 + rng.uniform(0.0, 5.0);
    CHECK(artifact_probability(s2, mu, phi, xi) >= artifact_probability(s1, mu, phi, xi));
    // decreasing phi never decreases the probability
    const double dphi = rng.uniform(0.0, phi - 0.1);
    CHECK(artifact_probability(s1, mu, phi - dphi, xi) >=
          artifact_probability(s1, mu, phi, xi));
  }
}

TEST_CASE("correction formula hand cases") {
  const auto montage = pair_montage();
  const auto d = InterpolationMatrix::build(montage, 1); // D = [[0,1],[1,0]]

  const Vec x = {10.0, 2.0};
  Vec out(2);

  Vec p = {0.0, 0.0};
  apply_correction(x, p, d, out);
  CHECK(out[0] == 10.0);
  CHECK(out[1] == 2.0);

  p = {1.0, 1.0};
  apply_correction(x, p, d, out);
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 10.0);

  p = {0.5, 0.0};
  apply_correction(x, p, d, out);
  CHECK(out[0] == doctest::Approx(6.0).epsilon(1e-15)); // 0.5*2 + 0.5*10
  CHECK(out[1] == 2.0);
}

TEST_CASE("corrected values are convex combinations and bounded") {
  Rng rng(105);
  const auto montage = grid_montage(16);
  const auto d = InterpolationMatrix::build(montage, 4);
  Vec x(16), p(16), out(16), interp(16);
  for (int rep = 0; rep < 10000; ++rep) {
    for (auto& v : x) v = rng.uniform(-100.0, 100.0);
    for (auto& v : p) v = rng.uniform01();
    d.apply(x, interp);
    apply_correction(x, p, d, out);
    for (std::size_t i = 0; i < 16; ++i) {
      const double lo = std::min(x[i], interp[i]) - 1e-9;
      const double hi = std::max(x[i], interp[i]) + 1e-9;
      CHECK(out[i] >= lo);
      CHECK(out[i] <= hi);
      // bounded by the raw value and its neighbors
      double bound = std::abs(x[i]);
      for (const auto& e : d.row(i)) bound = std::max(bound, std::abs(x[e.index]));
      CHECK(std::abs(out[i]) <= bound + 1e-9);
    }
  }
}

TEST_CASE("uncorrectable probability is D times p") {
  const auto montage = pair_montage();
  const auto d = InterpolationMatrix::build(montage, 1);

  Vec p = {0.0, 0.0};
  auto u = uncorrectable_probability(p, d);
  CHECK(u[0] == 0.0);
  CHECK(u[1] == 0.0);

  p = {1.0, 1.0};
  u = uncorrectable_probability(p, d);
  CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-12)); // rows sum to 1
  CHECK(u[1] == doctest::Approx(1.0).epsilon(1e-12));

  p = {1.0, 0.0};
  u = uncorrectable_probability(p, d);
  CHECK(u[0] == 0.0);
  CHECK(u[1] == 1.0);
}

TEST_CASE("online corrector leaves sub-threshold data alone and fixes a pop") {
  Rng rng(106);
  const auto montage = grid_montage(16);
  const auto d = InterpolationMatrix::build(montage, 4);
  const std::size_t samples = 2000;

  TrialSet calib = {white_noise_trial(rng, 16, 3000, 1.0)};
  const CalibrationModel model = calibrate(calib, test_config(), montage);
  Corrector corrector(model, d);

  // quiet input passes through nearly unchanged; p_art stays small
  Matrix x = white_noise_trial(rng, 16, samples, 1.0);
  Vec xin(16), xout(16), p(16);
  double max_rel = 0.0, max_p = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    x.column(s, xin);
    corrector.correct(xin, xout, p);
    for (std::size_t c = 0; c < 16; ++c) {
      max_rel = std::max(max_rel, std::abs(xout[c] - xin[c]));
      max_p = std::max(max_p, p[c]);
    }
  }
  CHECK(max_p < 0.3);
  CHECK(max_rel < 1.0);

  // a large pop on channel 5 drives p_art -> 1 and pulls the output toward
  // the neighbor interpolation
  corrector.reset();
  Vec interp(16);
  for (std::size_t s = 0; s < 400; ++s) {
    x.column(s % samples, xin);
    if (s >= 100) xin[5] += 80.0;
    corrector.correct(xin, xout, p);
  }
  CHECK(p[5] > 0.99);
  d.apply(xin, interp);
  CHECK(std::abs(xout[5] - interp[5]) < 0.5);
}

TEST_CASE("reset replays identically and is idempotent") {
  Rng rng(107);
  const auto montage = grid_montage(8);
  const auto d = InterpolationMatrix::build(montage, 3);
  const CalibrationModel model =
      calibrate({white_noise_trial(rng, 8, 1000, 1.5)}, test_config(), montage);

  Matrix input = white_noise_trial(rng, 8, 300, 1.5);
  for (std::size_t s = 100; s < 140; ++s) input(3, s) += 50.0;

  Corrector a(model, d);
  Corrector b(model, d);
  Vec xin(8), ya(8), yb(8), p(8);

  // run a for a while, then reset; b is fresh: outputs must match exactly
  for (std::size_t s = 0; s < 200; ++s) {
    input.column(s, xin);
    a.correct(xin, ya, p);
  }
  a.reset();
  a.reset(); // idempotent
  CHECK(a.variance().samples_seen() == 0);
  for (std::size_t s = 0; s < 300; ++s) {
    input.column(s, xin);
    a.correct(xin, ya, p);
    b.correct(xin, yb, p);
    for (std::size_t c = 0; c < 8; ++c) CHECK(ya[c] == yb[c]);
  }
}

TEST_CASE("offline correction equals a direct evaluation of the formula") {
  Rng rng(108);
  const auto montage = grid_montage(12);
  const auto d = InterpolationMatrix::build(montage, 4);
  const CalibrationModel model =
      calibrate({white_noise_trial(rng, 12, 1000, 1.0)}, test_config(), montage);

  Matrix rec = white_noise_trial(rng, 12, 600, 1.0);
  for (std::size_t s = 200; s < 320; ++s) rec(7, s) += 60.0; // a pop

  Matrix p_art;
  const Matrix got = correct_offline(rec, model, d, &p_art);

  // oracle: recompute the bidirectional trajectory and apply the formula
  const double lambda = smoothing_factor(model.config.smoothing());
  const Matrix s2 = smooth_variance_bidirectional(rec, lambda, model.mu_s2);
  Vec x(12), p(12), y(12);
  for (std::size_t s = 0; s < rec.cols(); ++s) {
    rec.column(s, x);
    for (std::size_t c = 0; c < 12; ++c) {
      p[c] = artifact_probability(std::sqrt(s2(c, s)), std::sqrt(model.mu_s2[c]),
                                  model.config.phi, model.config.xi);
      CHECK(p_art(c, s) == doctest::Approx(p[c]).epsilon(1e-12));
    }
    apply_correction(x, p, d, y);
    for (std::size_t c = 0; c < 12; ++c) {
      CHECK(got(c, s) == doctest::Approx(y[c]).epsilon(1e-12));
    }
  }

  // during the pop plateau the corrected channel sits near the kNN estimate
  rec.column(260, x);
  d.apply(x, y);
  CHECK(std::abs(got(7, 260) - y[7]) < 1.0);
}

TEST_CASE("offline output equals input when nothing crosses the threshold") {
  Rng rng(109);
  const auto montage = grid_montage(8);
  const auto d = InterpolationMatrix::build(montage, 3);
  HearConfig config = test_config();
  config.phi = 10.0; // threshold far above anything in the recording
  const CalibrationModel model =
      calibrate({white_noise_trial(rng, 8, 1000, 1.0)}, config, montage);

  const Matrix rec = white_noise_trial(rng, 8, 500, 1.0);
  const Matrix got = correct_offline(rec, model, d);
  for (std::size_t i = 0; i < got.flat().size(); ++i) {
    CHECK(std::abs(got.flat()[i] - rec.flat()[i]) <= 1e-9);
  }
}

TEST_CASE("offline correction is more time-symmetric than online") {
  Rng rng(110);
  const auto montage = grid_montage(9);
  const auto d = InterpolationMatrix::build(montage, 4);
  const CalibrationModel model =
      calibrate({white_noise_trial(rng, 9, 2000, 1.0)}, test_config(), montage);

  // symmetric triangular burst in the middle of a quiet recording
  const std::size_t n = 801;
  Matrix rec(9, n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double t = static_cast<double>(s);
    const double mid = 400.0;
    const double w = std::max(0.0, 1.0 - std::abs(t - mid) / 120.0);
    rec(4, s) = 40.0 * w;
  }

  const Matrix off = correct_offline(rec, model, d);
  Corrector corrector(model, d);
  Matrix on(9, n);
  Vec x(9), y(9), p(9);
  for (std::size_t s = 0; s < n; ++s) {
    rec.column(s, x);
    corrector.correct(x, y, p);
    on.set_column(s, y);
  }

  auto asymmetry = [&](const Matrix& m) {
    double acc = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double dlt = m(4, s) - m(4, n - 1 - s);
      acc += dlt * dlt;
    }
    return std::sqrt(acc);
  };
  CHECK(asymmetry(off) < asymmetry(on));
}

TEST_CASE("fingerprint and dimension guards") {
  Rng rng(111);
  const auto montage = grid_montage(8);
  const auto other = grid_montage(9);
  const auto d_other = InterpolationMatrix::build(other, 3);
  const auto d_same_size_other = InterpolationMatrix::build(grid_montage(8), 3);
  const CalibrationModel model =
      calibrate({white_noise_trial(rng, 8, 500, 1.0)}, test_config(), montage);

  CHECK_THROWS_WITH_AS(Corrector(model, d_other), doctest::Contains("DimensionMismatch"),
                       HearError);

  CalibrationModel tampered = model;
  tampered.montage_fingerprint = "deadbeefdeadbeef";
  const auto d = InterpolationMatrix::build(montage, 3);
  CHECK_THROWS_WITH_AS(Corrector(tampered, d), doctest::Contains("FingerprintMismatch"),
                       HearError);

  const Matrix rec = white_noise_trial(rng, 8, 100, 1.0);
  CHECK_THROWS_WITH_AS(correct_offline(rec, tampered, d),
                       doctest::Contains("FingerprintMismatch"), HearError);
  CHECK(d_same_size_other.montage_fingerprint() == montage.fingerprint());
}

TEST_CASE("replay determinism") {
  Rng rng(112);
  const auto montage = grid_montage(16);
  const auto d = InterpolationMatrix::build(montage, 4);
  const CalibrationModel model =
      calibrate({white_noise_trial(rng, 16, 1000, 1.0)}, test_config(), montage);
  const Matrix input = white_noise_trial(rng, 16, 500, 3.0);

  auto run = [&]() {
    Corrector c(model, d);
    Matrix out(16, input.cols());
    Vec x(16), y(16), p(16);
    for (std::size_t s = 0; s < input.cols(); ++s) {
      input.column(s, x);
      c.correct(x, y, p);
      out.set_column(s, y);
    }
    return out;
  };
  CHECK(run() == run()); // bit-identical
}
