#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace hear {

using Vec = std::vector<double>;

// Dense channels x samples matrix, row-major (one row = one channel's series).
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  // column c copied into out (out.size() == rows())
  void column(std::size_t c, std::span<double> out) const {
    for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + c];
  }
  void set_column(std::size_t c, std::span<const double> in) {
    for (std::size_t r = 0; r < rows_; ++r) data_[r * cols_ + c] = in[r];
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// A set of equally shaped trials (trials x channels x samples).
using TrialSet = std::vector<Matrix>;

// Deterministic random source: mt19937_64 plus explicit value mappings, so the
// generated streams do not depend on the standard library's distribution
// implementations (std::uniform_real_distribution etc. are not pinned down).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t integer(std::uint64_t n); // uniform in [0, n)
  double gaussian();                      // standard normal (polar method)

  // uniform inside a ball of the given radius, rejection sampled
  void ball(double radius, double out[3]);

private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace hear
