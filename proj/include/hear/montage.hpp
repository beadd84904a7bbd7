#pragma once

#include "hear/types.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hear {

struct Electrode {
  std::string label;
  std::array<double, 3> position_mm{};
};

// Labeled 3D electrode positions. Immutable after construction; validation
// rejects duplicate labels, non-finite or coincident positions and montages
// with fewer than 2 channels.
class ElectrodeMontage {
public:
  static ElectrodeMontage from_channels(std::vector<Electrode> channels);

  std::size_t size() const { return channels_.size(); }
  const Electrode& channel(std::size_t i) const { return channels_[i]; }
  std::span<const Electrode> channels() const { return channels_; }
  std::vector<std::string> labels() const;

  // Digest over labels and positions; binds calibration models to a montage
  // and its channel order.
  const std::string& fingerprint() const { return fingerprint_; }

private:
  ElectrodeMontage() = default;
  std::vector<Electrode> channels_;
  std::string fingerprint_;
};

// Parses montage file content: one `label x y z` line per electrode
// (millimeters, whitespace separated, `#` starts a comment).
ElectrodeMontage load_montage(std::string_view source);

std::string format_montage(const ElectrodeMontage& montage);

struct Neighbor {
  std::size_t index;
  double distance_mm;
};

// k nearest channels to `target` by Euclidean distance, excluding target,
// sorted ascending; exact distance ties resolve to the lower channel index.
std::vector<Neighbor> nearest_neighbors(const ElectrodeMontage& montage,
                                        std::size_t target, std::size_t k);

// Row-stochastic inverse-distance weights over each channel's k nearest
// neighbors. Rows are stored sparsely; apply() runs in O(k) per channel.
class InterpolationMatrix {
public:
  struct Entry {
    std::size_t index;
    double weight;
  };

  // If k > N-1: error unless allow_small_montage, which clamps k to N-1.
  static InterpolationMatrix build(const ElectrodeMontage& montage, std::size_t k,
                                   bool allow_small_montage = false);

  std::size_t size() const { return size_; }
  std::size_t neighbor_count() const { return k_; }
  const std::string& montage_fingerprint() const { return fingerprint_; }

  std::span<const Entry> row(std::size_t i) const {
    return {entries_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  double weight(std::size_t i, std::size_t j) const;

  // out = D * x
  void apply(std::span<const double> x, std::span<double> out) const;

private:
  std::size_t size_ = 0;
  std::size_t k_ = 0;
  std::string fingerprint_;
  std::vector<std::size_t> offsets_; // size_  + 1
  std::vector<Entry> entries_;
};

} // namespace hear
