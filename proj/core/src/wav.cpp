#include "psep/wav.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "psep/binary_io.hpp"

namespace psep {

namespace {

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

constexpr std::uint16_t kPcmFormat = 1;

}  // namespace

Frame read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open WAV file " + path.string());
  io::expect_magic(in, "RIFF", "WAV header");
  io::get_u32(in, "WAV header");
  io::expect_magic(in, "WAVE", "WAV header");

  std::optional<FmtChunk> fmt;
  while (true) {
    char id[4];
    in.read(id, 4);
    if (in.gcount() != 4) throw FormatError("WAV file has no data chunk: " + path.string());
    const std::uint32_t size = io::get_u32(in, "WAV chunk header");
    const std::string chunk(id, 4);
    if (chunk == "fmt ") {
      if (size < 16) throw FormatError("WAV fmt chunk too short");
      FmtChunk f;
      f.format = io::get_u16(in, "WAV fmt chunk");
      f.channels = io::get_u16(in, "WAV fmt chunk");
      f.sample_rate = io::get_u32(in, "WAV fmt chunk");
      io::get_u32(in, "WAV fmt chunk");  // byte rate
      io::get_u16(in, "WAV fmt chunk");  // block align
      f.bits = io::get_u16(in, "WAV fmt chunk");
      in.ignore(size - 16 + (size & 1));
      if (f.format != kPcmFormat) throw FormatError("unsupported WAV encoding tag " + std::to_string(f.format));
      if (f.channels != 1) throw FormatError("multi-channel WAV not supported (" + std::to_string(f.channels) + ")");
      if (f.bits != 16) throw FormatError("only 16-bit PCM supported, got " + std::to_string(f.bits) + " bits");
      if (f.sample_rate == 0) throw FormatError("WAV sample rate is zero");
      fmt = f;
    } else if (chunk == "data") {
      if (!fmt) throw FormatError("WAV data chunk precedes fmt chunk");
      if (size % 2 != 0) throw FormatError("WAV data chunk size not a multiple of the sample size");
      const std::size_t n = size / 2;
      if (n == 0) throw FormatError("WAV data chunk is empty");
      Frame frame{std::vector<double>(n), fmt->sample_rate};
      for (std::size_t i = 0; i < n; ++i) {
        const auto raw = static_cast<std::int16_t>(io::get_u16(in, "WAV samples"));
        frame.samples[i] = raw / 32768.0;
      }
      return frame;
    } else {
      in.ignore(size + (size & 1));
    }
  }
}

void write_wav(const Frame& frame, const std::filesystem::path& path) {
  frame.validate();
  std::ostringstream body;
  for (double x : frame.samples) {
    const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    io::put_u16(body, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  const std::string data = body.str();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write WAV file " + path.string());
  out.write("RIFF", 4);
  io::put_u32(out, static_cast<std::uint32_t>(36 + data.size()));
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  io::put_u32(out, 16);
  io::put_u16(out, kPcmFormat);
  io::put_u16(out, 1);
  io::put_u32(out, frame.sample_rate);
  io::put_u32(out, frame.sample_rate * 2);
  io::put_u16(out, 2);
  io::put_u16(out, 16);
  out.write("data", 4);
  io::put_u32(out, static_cast<std::uint32_t>(data.size()));
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("failed writing WAV file " + path.string());
}

}  // namespace psep
