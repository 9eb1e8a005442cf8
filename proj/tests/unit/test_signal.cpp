#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "psep/dataset.hpp"
#include "psep/errors.hpp"
#include "psep/signal.hpp"
#include "psep/wav.hpp"

using namespace psep;

TEST_SUITE("signal") {

TEST_CASE("sine starts at zero") {
  const Frame f = synth_waveform(SourceKind::Sine, {440.0, 1.0, 0.0}, 16000, 64);
  CHECK(f.samples[0] == 0.0);
  CHECK(f.sample_rate == 16000);
  CHECK(f.size() == 64);
}

TEST_CASE("square never takes the value zero") {
  for (double freq : {27.0, 500.0, 1000.0, 2000.0}) {
    const Frame f = synth_waveform(SourceKind::Square, {freq, 1.0, 0.0}, 4000, 4096);
    for (double v : f.samples) REQUIRE(std::abs(v) == 1.0);
  }
}

TEST_CASE("triangle at quarter periods") {
  // f = 1 Hz at 8 Hz: t = 0 -> asin(sin 0) = 0; t = 0.25 s -> (2/pi) asin(1) = 1.
  const Frame f = synth_waveform(SourceKind::Triangle, {1.0, 1.0, 0.0}, 8, 8);
  CHECK(f.samples[0] == doctest::Approx(0.0));
  CHECK(f.samples[2] == doctest::Approx(1.0));
}

TEST_CASE("closed forms match direct evaluation") {
  const SourceParams p{123.0, 0.9, 1.1};
  const std::uint32_t sr = 4000;
  const double two_pi = 2.0 * std::numbers::pi;
  const Frame sine = synth_waveform(SourceKind::Sine, p, sr, 200);
  const Frame saw = synth_waveform(SourceKind::Sawtooth, p, sr, 200);
  const Frame tri = synth_waveform(SourceKind::Triangle, p, sr, 200);
  for (std::size_t n = 0; n < 200; ++n) {
    const double t = static_cast<double>(n) / sr;
    const double phase = two_pi * p.frequency * t + p.phase;
    CHECK(sine.samples[n] == doctest::Approx(p.amplitude * std::sin(phase)).epsilon(1e-12));
    const double cycles = p.frequency * t + p.phase / two_pi;
    CHECK(saw.samples[n] == doctest::Approx(p.amplitude * (2.0 * (cycles - std::floor(cycles)) - 1.0)).epsilon(1e-9));
    CHECK(tri.samples[n] == doctest::Approx(p.amplitude * 2.0 / std::numbers::pi * std::asin(std::sin(phase))).epsilon(1e-9));
  }
}

TEST_CASE("waveforms stay inside the amplitude and are periodic") {
  // f = 100 Hz at 4000 Hz: exactly 40 samples per period
  for (SourceKind kind : kAllSources) {
    const SourceParams p{100.0, 0.85, 0.4};
    const Frame f = synth_waveform(kind, p, 4000, 400);
    for (std::size_t n = 0; n < f.size(); ++n) {
      REQUIRE(std::abs(f.samples[n]) <= p.amplitude + 1e-12);
      if (n + 40 < f.size() && kind != SourceKind::Square) CHECK(std::abs(f.samples[n] - f.samples[n + 40]) < 1e-9);
    }
  }
}

TEST_CASE("frequency above Nyquist is rejected") {
  CHECK_THROWS_AS(synth_waveform(SourceKind::Sine, {2500.0, 1.0, 0.0}, 4000, 16), ConfigError);
  CHECK_NOTHROW(synth_waveform(SourceKind::Sine, {2000.0, 1.0, 0.0}, 4000, 16));
  CHECK_THROWS_AS(synth_waveform(SourceKind::Sine, {100.0, 1.0, 0.0}, 4000, 0), ShapeError);
}

TEST_CASE("parameter draws are reproducible and in range") {
  Rng a = stream_rng(7, 3), b = stream_rng(7, 3);
  const SourceParams pa = sample_source_params(a), pb = sample_source_params(b);
  CHECK(pa.frequency == pb.frequency);
  CHECK(pa.amplitude == pb.amplitude);
  CHECK(pa.phase == pb.phase);

  Rng rng = stream_rng(11, 0);
  const std::size_t n = 10000;
  double sum = 0.0, amin = 10.0, amax = -10.0;
  for (std::size_t i = 0; i < n; ++i) {
    const SourceParams p = sample_source_params(rng);
    sum += p.frequency;
    amin = std::min(amin, p.amplitude);
    amax = std::max(amax, p.amplitude);
    REQUIRE(p.frequency >= kMinFrequency);
    REQUIRE(p.frequency <= kMaxFrequency);
    REQUIRE(p.phase >= 0.0);
    REQUIRE(p.phase < 2.0 * std::numbers::pi);
  }
  CHECK(amin >= 0.8);
  CHECK(amax <= 1.0);
  // uniform on [27, 4186]: mean 2106.5, sd (4186-27)/sqrt(12)
  const double se = (kMaxFrequency - kMinFrequency) / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sum / n - 2106.5) < 3.0 * se);
}

TEST_CASE("redraws keep frequencies below Nyquist") {
  Rng rng = stream_rng(1, 0);
  for (int i = 0; i < 2000; ++i) REQUIRE(sample_source_params(rng, 2000.0).frequency < 2000.0);
}

TEST_CASE("mix arithmetic") {
  const Frame a{{0.1, -0.2, 0.3}, 8000};
  const Frame b{{0.5, 0.25, -1.0}, 8000};
  const Frame m = mix(std::vector<Frame>{a, b}, MixSpec{{2.0, 3.0}});
  for (std::size_t i = 0; i < 3; ++i) CHECK(m.samples[i] == doctest::Approx(2.0 * a.samples[i] + 3.0 * b.samples[i]));

  const Frame same = mix(std::vector<Frame>{a, a, a, a}, MixSpec::equal(4));
  for (std::size_t i = 0; i < 3; ++i) CHECK(same.samples[i] == doctest::Approx(a.samples[i]));

  Frame neg = a;
  for (double& v : neg.samples) v = -v;
  const Frame zero = mix(std::vector<Frame>{a, neg}, MixSpec{{1.0, 1.0}});
  for (double v : zero.samples) CHECK(v == 0.0);

  const Frame short_frame{{0.1}, 8000};
  CHECK_THROWS_AS(mix(std::vector<Frame>{a, short_frame}, MixSpec::equal(2)), ShapeError);
  CHECK_THROWS_AS(mix(std::vector<Frame>{a, b}, MixSpec::equal(3)), ShapeError);
}

TEST_CASE("gaussian noise") {
  const Frame zero{std::vector<double>(100000, 0.0), 4000};
  Rng rng = stream_rng(5, 0);
  const Frame same = add_gaussian_noise(zero, 0.0, rng);
  CHECK(same.samples == zero.samples);

  const Frame noisy = add_gaussian_noise(zero, 0.359, rng);
  double sq = 0.0, sum = 0.0;
  for (double v : noisy.samples) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(noisy.size());
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  CHECK(std::abs(sd - 0.359) / 0.359 < 0.02);

  Rng r1 = stream_rng(1, 0), r2 = stream_rng(2, 0);
  const Frame n1 = add_gaussian_noise(zero, 1.0, r1), n2 = add_gaussian_noise(zero, 1.0, r2);
  CHECK(n1.samples != n2.samples);
  CHECK_THROWS_AS(add_gaussian_noise(zero, -0.1, rng), ConfigError);
}

TEST_CASE("mu-law endpoints and formula") {
  CHECK(mu_law_class(0.0) == 128);
  CHECK(mu_law_class(1.0) == 255);
  CHECK(mu_law_class(-1.0) == 0);
  CHECK(mu_law_class(0.5) == oracle::mu_law_class(0.5));
  CHECK(mu_law_value(0) == doctest::Approx(-1.0));
  CHECK(mu_law_value(255) == doctest::Approx(1.0));
  CHECK_THROWS_AS(mu_law_value(256), ConfigError);
  CHECK_THROWS_AS(mu_law_value(-1), ConfigError);
  for (int c = 0; c < 256; ++c) CHECK(mu_law_value(c) == doctest::Approx(oracle::mu_law_value(c)).epsilon(1e-12));
  for (int i = -1000; i <= 1000; ++i) {
    const double x = i / 1000.0;
    REQUIRE(mu_law_class(x) == oracle::mu_law_class(x));
  }
}

TEST_CASE("mu-law decode is strictly increasing and encode is a projection") {
  for (int c = 1; c < 256; ++c) REQUIRE(mu_law_value(c - 1) < mu_law_value(c));
  Rng rng = stream_rng(3, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> xs(5000);
  for (double& x : xs) x = u(rng);
  const MuLawCodes codes = mu_law_encode(Frame{xs, 8000});
  const Frame decoded = mu_law_decode(codes.classes, 8000);
  const MuLawCodes again = mu_law_encode(decoded);
  CHECK(codes.classes == again.classes);
  CHECK(codes.clamped == 0);
}

TEST_CASE("mu-law clamps and counts out-of-range input") {
  const MuLawCodes codes = mu_law_encode(Frame{{1.5, -2.0, 0.0}, 8000});
  CHECK(codes.clamped == 2);
  CHECK(codes.classes == std::vector<int>{255, 0, 128});
  const Frame zero_rt = mu_law_decode(mu_law_encode(Frame{std::vector<double>(16, 0.0), 8000}).classes, 8000);
  for (double v : zero_rt.samples) CHECK(std::abs(v) < 0.01);
}

TEST_CASE("toy dataset construction") {
  ToyDataConfig c;
  c.n_train = 6;
  c.n_test = 3;
  c.frame_len = 256;
  c.seed = 42;
  const Dataset a = make_toy_dataset(c), b = make_toy_dataset(c);
  REQUIRE(a.train.size() == 6);
  REQUIRE(a.test.size() == 3);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    const MixRecord& r = a.train[i];
    REQUIRE(r.sources.size() == 4);
    for (std::size_t t = 0; t < 256; ++t) {
      double mean = 0.0;
      for (const Frame& s : r.sources) mean += s.samples[t] / 4.0;
      REQUIRE(r.mix.samples[t] == doctest::Approx(mean).epsilon(1e-15));
    }
    CHECK(r.mix.samples == b.train[i].mix.samples);
  }
  CHECK(a.source_frames(Split::Test, SourceKind::Square).size() == 3);
}

TEST_CASE("dataset records round-trip through disk") {
  oracle::TempDir dir("dataset");
  ToyDataConfig c;
  c.n_train = 3;
  c.n_test = 2;
  c.frame_len = 128;
  const Dataset ds = make_toy_dataset(c);
  write_dataset(ds, dir.path);
  const Dataset back = read_dataset(dir.path);
  REQUIRE(back.train.size() == 3);
  REQUIRE(back.test.size() == 2);
  CHECK(back.sample_rate == ds.sample_rate);
  CHECK(back.frame_len == 128);
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t t = 0; t < 128; ++t) {
      CHECK(back.train[1].sources[k].samples[t] ==
            static_cast<double>(static_cast<float>(ds.train[1].sources[k].samples[t])));
    }
  }
  // a re-read of the same files is bitwise identical
  CHECK(read_dataset(dir.path).test[1].mix.samples == back.test[1].mix.samples);

  std::ofstream(dir.path / "bad.psds", std::ios::binary) << "NOTADATASET";
  CHECK_THROWS_AS(read_record(dir.path / "bad.psds"), FormatError);
}

TEST_CASE("wav round trip") {
  oracle::TempDir dir("wav");
  const Frame f = synth_waveform(SourceKind::Sine, {440.0, 0.9, 0.2}, 16000, 1000);
  write_wav(f, dir.path / "a.wav");
  const Frame back = read_wav(dir.path / "a.wav");
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.size() == f.size());
  for (std::size_t i = 0; i < f.size(); ++i) REQUIRE(std::abs(back.samples[i] - f.samples[i]) <= 1.0 / 32768.0);
}

TEST_CASE("wav rejects non-PCM and stereo files") {
  oracle::TempDir dir("wavbad");
  auto write_header = [](const std::filesystem::path& p, std::uint16_t format, std::uint16_t channels) {
    std::ofstream out(p, std::ios::binary);
    auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    out.write("RIFF", 4);
    u32(36 + 4);
    out.write("WAVEfmt ", 8);
    u32(16);
    u16(format);
    u16(channels);
    u32(8000);
    u32(8000 * 2 * channels);
    u16(static_cast<std::uint16_t>(2 * channels));
    u16(16);
    out.write("data", 4);
    u32(4);
    u32(0);
  };
  write_header(dir.path / "float.wav", 3, 1);
  write_header(dir.path / "stereo.wav", 1, 2);
  CHECK_THROWS_AS(read_wav(dir.path / "float.wav"), FormatError);
  CHECK_THROWS_AS(read_wav(dir.path / "stereo.wav"), FormatError);
  CHECK_THROWS_AS(read_wav(dir.path / "missing.wav"), MissingArtifact);
}

}  // TEST_SUITE
