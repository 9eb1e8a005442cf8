#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace psep {

using Rng = std::mt19937_64;

/// Independent generator for item `index` of a run seeded with `seed`.
Rng stream_rng(std::uint64_t seed, std::uint64_t index);

/// The four toy waveform families. Integer codes are serialized.
enum class SourceKind : std::uint32_t { Sine = 0, Sawtooth = 1, Square = 2, Triangle = 3 };

inline constexpr SourceKind kAllSources[] = {SourceKind::Sine, SourceKind::Sawtooth, SourceKind::Square,
                                             SourceKind::Triangle};
inline constexpr std::size_t kNumSources = 4;

std::string_view source_name(SourceKind kind);
SourceKind parse_source(std::string_view name);  // throws ConfigError

/// Fixed-length mono signal with its sample rate.
struct Frame {
  std::vector<double> samples;
  std::uint32_t sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  /// Throws if empty or the sample rate is zero.
  void validate() const;
};

struct SourceParams {
  double frequency = 440.0;  // Hz
  double amplitude = 1.0;
  double phase = 0.0;  // radians
};

inline constexpr double kMinFrequency = 27.0;
inline constexpr double kMaxFrequency = 4186.0;
inline constexpr double kMinAmplitude = 0.8;
inline constexpr double kMaxAmplitude = 1.0;

struct MixSpec {
  std::vector<double> weights;

  static MixSpec equal(std::size_t n);
};

/// Closed-form waveform sampled at t = n / sample_rate.
///   sine     A sin(2πft + φ)
///   square   A sgn(sin(2πft + φ)), sgn(0) = +1
///   sawtooth A (2 frac(ft + φ/2π) - 1)
///   triangle A (2/π) asin(sin(2πft + φ))
Frame synth_waveform(SourceKind kind, const SourceParams& params, std::uint32_t sample_rate, std::size_t length);

/// Uniform draws of frequency, amplitude and phase in the toy ranges.
/// Frequencies at or above `nyquist` are redrawn.
SourceParams sample_source_params(Rng& rng, double nyquist = std::numeric_limits<double>::infinity());

/// m = Σ α_k s_k.
Frame mix(std::span<const Frame> sources, const MixSpec& spec);

/// x + N(0, σ²) elementwise. sigma == 0 returns the input unchanged.
Frame add_gaussian_noise(const Frame& frame, double sigma, Rng& rng);

// ---------------------------------------------------------------------------
// µ-law companding (µ = 255, 256 classes).

inline constexpr int kMuLawClasses = 256;

double mu_law_compress(double x);  // [-1, 1] -> [-1, 1]
double mu_law_expand(double y);
int mu_law_class(double x);     // clamps to [-1, 1]
double mu_law_value(int cls);   // throws ConfigError outside 0..255

struct MuLawCodes {
  std::vector<int> classes;
  std::size_t clamped = 0;  // inputs outside [-1, 1]
};

MuLawCodes mu_law_encode(const Frame& frame);
Frame mu_law_decode(std::span<const int> classes, std::uint32_t sample_rate);

}  // namespace psep
