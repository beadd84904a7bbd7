#include "hear/stream.hpp"

#include "hear/error.hpp"

#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

namespace hear {

namespace {

constexpr char kMagic[4] = {'H', 'E', 'A', 'R'};

template <typename T>
void put_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get_le(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return in.gcount() == static_cast<std::streamsize>(sizeof(T));
}

} // namespace

void write_handshake(std::ostream& out, const StreamHandshake& h) {
  out.write(kMagic, 4);
  put_le(out, h.version);
  put_le(out, h.channels);
  put_le(out, h.f_s_hz);
  out.flush();
}

StreamHandshake read_handshake(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    raise("MalformedFrame", "missing HEAR stream handshake");
  }
  StreamHandshake h;
  if (!get_le(in, h.version) || !get_le(in, h.channels) || !get_le(in, h.f_s_hz)) {
    raise("MalformedFrame", "truncated stream handshake");
  }
  if (h.version != 1) {
    raise("VersionMismatch", "unsupported stream version " + std::to_string(h.version));
  }
  if (h.channels == 0) raise("MalformedFrame", "handshake declares zero channels");
  return h;
}

StreamStats run_stream(std::istream& in, std::ostream& out, Corrector& corrector,
                       std::ostream* telemetry) {
  const StreamHandshake h = read_handshake(in);
  if (h.channels != corrector.channels()) {
    raise("DimensionMismatch", "stream has " + std::to_string(h.channels) +
                                   " channels, model has " +
                                   std::to_string(corrector.channels()));
  }
  write_handshake(out, h);

  const std::size_t n = h.channels;
  std::vector<float> frame(n), out_frame(n);
  Vec x(n), y(n), p(n);
  StreamStats stats;
  while (true) {
    in.read(reinterpret_cast<char*>(frame.data()), static_cast<std::streamsize>(4 * n));
    const auto got = in.gcount();
    if (got == 0) break; // clean end of stream
    if (got != static_cast<std::streamsize>(4 * n)) {
      raise("MalformedFrame", "frame " + std::to_string(stats.frames_in) + " is truncated (" +
                                  std::to_string(got) + " bytes)");
    }
    ++stats.frames_in;
    for (std::size_t i = 0; i < n; ++i) x[i] = frame[i];
    corrector.correct(x, y, p);
    for (std::size_t i = 0; i < n; ++i) out_frame[i] = static_cast<float>(y[i]);
    out.write(reinterpret_cast<const char*>(out_frame.data()),
              static_cast<std::streamsize>(4 * n));
    out.flush(); // each frame is visible before the next input is consumed
    ++stats.frames_out;
    if (telemetry) {
      const Vec u = uncorrectable_probability(p, corrector.d_matrix());
      (*telemetry) << stats.frames_in - 1;
      char buf[16];
      for (double v : p) {
        std::snprintf(buf, sizeof(buf), " %.6g", v);
        (*telemetry) << buf;
      }
      for (double v : u) {
        std::snprintf(buf, sizeof(buf), " %.6g", v);
        (*telemetry) << buf;
      }
      (*telemetry) << "\n";
    }
  }
  return stats;
}

} // namespace hear
