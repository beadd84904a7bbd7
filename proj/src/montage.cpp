#include "hear/montage.hpp"

#include "hear/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace hear {

namespace {

double distance_mm(const Electrode& a, const Electrode& b) {
  const double dx = a.position_mm[0] - b.position_mm[0];
  const double dy = a.position_mm[1] - b.position_mm[1];
  const double dz = a.position_mm[2] - b.position_mm[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// FNV-1a over labels and raw position bytes; enough to bind a model to a
// montage, not a cryptographic digest.
std::string fingerprint_channels(const std::vector<Electrode>& channels) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& ch : channels) {
    mix(ch.label.data(), ch.label.size());
    mix("\0", 1);
    for (double v : ch.position_mm) mix(&v, sizeof(v));
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

} // namespace

ElectrodeMontage ElectrodeMontage::from_channels(std::vector<Electrode> channels) {
  if (channels.size() < 2) {
    raise("TooFewChannels", "montage needs at least 2 channels, got " +
                                std::to_string(channels.size()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& ch : channels) {
    if (!seen.insert(ch.label).second) {
      raise("DuplicateLabel", "duplicate channel label '" + ch.label + "'");
    }
    for (double v : ch.position_mm) {
      if (!std::isfinite(v)) {
        raise("NonFiniteCoordinate", "channel '" + ch.label + "' has a non-finite coordinate");
      }
    }
  }
  for (std::size_t i = 0; i < channels.size(); ++i) {
    for (std::size_t j = i + 1; j < channels.size(); ++j) {
      if (distance_mm(channels[i], channels[j]) < 1e-6) {
        raise("CoincidentElectrodes", "channels '" + channels[i].label + "' and '" +
                                          channels[j].label + "' share a position");
      }
    }
  }
  ElectrodeMontage m;
  m.channels_ = std::move(channels);
  m.fingerprint_ = fingerprint_channels(m.channels_);
  return m;
}

std::vector<std::string> ElectrodeMontage::labels() const {
  std::vector<std::string> out;
  out.reserve(channels_.size());
  for (const auto& ch : channels_) out.push_back(ch.label);
  return out;
}

ElectrodeMontage load_montage(std::string_view source) {
  std::vector<Electrode> channels;
  std::istringstream stream{std::string(source)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    Electrode e;
    if (!(ls >> e.label)) continue; // blank line
    if (!(ls >> e.position_mm[0] >> e.position_mm[1] >> e.position_mm[2])) {
      raise("MalformedMontageLine",
            "line " + std::to_string(lineno) + ": expected `label x y z`");
    }
    std::string extra;
    if (ls >> extra) {
      raise("MalformedMontageLine",
            "line " + std::to_string(lineno) + ": trailing content '" + extra + "'");
    }
    channels.push_back(std::move(e));
  }
  return ElectrodeMontage::from_channels(std::move(channels));
}

std::string format_montage(const ElectrodeMontage& montage) {
  std::ostringstream out;
  out << "# montage: label x y z (millimeters)\n";
  char buf[96];
  for (const auto& ch : montage.channels()) {
    std::snprintf(buf, sizeof(buf), " %.17g %.17g %.17g\n", ch.position_mm[0],
                  ch.position_mm[1], ch.position_mm[2]);
    out << ch.label << buf;
  }
  return out.str();
}

std::vector<Neighbor> nearest_neighbors(const ElectrodeMontage& montage, std::size_t target,
                                        std::size_t k) {
  const std::size_t n = montage.size();
  if (target >= n) {
    raise("ChannelOutOfRange", "target channel " + std::to_string(target) + " of " +
                                   std::to_string(n));
  }
  if (k < 1 || k > n - 1) {
    raise("NeighborCountOutOfRange",
          "k = " + std::to_string(k) + " not in [1, " + std::to_string(n - 1) + "]");
  }
  std::vector<Neighbor> all;
  all.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == target) continue;
    all.push_back({i, distance_mm(montage.channel(target), montage.channel(i))});
  }
  // stable sort + index tiebreak keeps ties deterministic
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance_mm != b.distance_mm) return a.distance_mm < b.distance_mm;
    return a.index < b.index;
  });
  all.resize(k);
  return all;
}

InterpolationMatrix InterpolationMatrix::build(const ElectrodeMontage& montage, std::size_t k,
                                               bool allow_small_montage) {
  const std::size_t n = montage.size();
  if (k < 1) raise("NeighborCountOutOfRange", "k must be >= 1");
  if (k > n - 1) {
    if (!allow_small_montage) {
      raise("NeighborCountOutOfRange",
            "k = " + std::to_string(k) + " exceeds available neighbors (" +
                std::to_string(n - 1) + "); pass allow-small-montage to clamp");
    }
    k = n - 1;
  }
  InterpolationMatrix d;
  d.size_ = n;
  d.k_ = k;
  d.fingerprint_ = montage.fingerprint();
  d.offsets_.resize(n + 1, 0);
  d.entries_.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = nearest_neighbors(montage, i, k);
    double inv_sum = 0.0;
    for (const auto& x : nb) inv_sum += 1.0 / x.distance_mm;
    // entries kept in ascending column order for reproducible accumulation
    std::sort(nb.begin(), nb.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    for (const auto& x : nb) {
      d.entries_.push_back({x.index, (1.0 / x.distance_mm) / inv_sum});
    }
    d.offsets_[i + 1] = d.entries_.size();
  }
  return d;
}

double InterpolationMatrix::weight(std::size_t i, std::size_t j) const {
  for (const auto& e : row(i)) {
    if (e.index == j) return e.weight;
  }
  return 0.0;
}

void InterpolationMatrix::apply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != size_ || out.size() != size_) {
    raise("DimensionMismatch", "interpolation matrix is " + std::to_string(size_) +
                                   " channels, input is " + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < size_; ++i) {
    double acc = 0.0;
    for (const auto& e : row(i)) acc += e.weight * x[e.index];
    out[i] = acc;
  }
}

} // namespace hear
