#pragma once

#include "hear/hear.hpp"

#include <cstdint>
#include <iosfwd>

namespace hear {

// Framed binary stream protocol. The stream opens with a 16-byte handshake
// (magic "HEAR", u32 version, u32 channel count, f32 sampling rate, all
// little endian); every following frame is channel-count float32 samples.
struct StreamHandshake {
  std::uint32_t version = 1;
  std::uint32_t channels = 0;
  float f_s_hz = 0.0f;
};

void write_handshake(std::ostream& out, const StreamHandshake& h);
StreamHandshake read_handshake(std::istream& in);

struct StreamStats {
  std::uint64_t frames_in = 0;
  std::uint64_t frames_out = 0;
};

// Corrects frames one at a time: each output frame is written and flushed
// before the next input frame is consumed. The handshake is echoed to the
// output. When telemetry is non-null, one text line per frame is written with
// the per-channel artifact probabilities followed by the uncorrectable-
// artifact probabilities. Malformed input raises MalformedFrame.
StreamStats run_stream(std::istream& in, std::ostream& out, Corrector& corrector,
                       std::ostream* telemetry = nullptr);

} // namespace hear
