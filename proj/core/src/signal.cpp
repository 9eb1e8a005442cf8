#include "psep/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "psep/errors.hpp"

namespace psep {

Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

std::string_view source_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::Sine: return "sine";
    case SourceKind::Sawtooth: return "saw";
    case SourceKind::Square: return "square";
    case SourceKind::Triangle: return "triangle";
  }
  return "unknown";
}

SourceKind parse_source(std::string_view name) {
  for (SourceKind k : kAllSources) {
    if (source_name(k) == name) return k;
  }
  if (name == "sawtooth") return SourceKind::Sawtooth;
  throw ConfigError("unknown source '" + std::string(name) + "' (expected sine, saw, square, triangle)");
}

void Frame::validate() const {
  if (samples.empty()) throw ShapeError("frame has no samples");
  if (sample_rate == 0) throw ShapeError("frame sample rate must be positive");
}

MixSpec MixSpec::equal(std::size_t n) { return MixSpec{std::vector<double>(n, 1.0 / static_cast<double>(n))}; }

Frame synth_waveform(SourceKind kind, const SourceParams& params, std::uint32_t sample_rate, std::size_t length) {
  if (length == 0) throw ShapeError("synth_waveform: length must be positive");
  if (sample_rate == 0) throw ConfigError("synth_waveform: sample rate must be positive");
  if (!(params.frequency > 0.0)) throw ConfigError("synth_waveform: frequency must be positive");
  if (params.frequency > sample_rate / 2.0) {
    throw ConfigError("synth_waveform: frequency " + std::to_string(params.frequency) + " Hz above Nyquist " +
                      std::to_string(sample_rate / 2.0) + " Hz");
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double A = params.amplitude;
  Frame out{std::vector<double>(length), sample_rate};
  for (std::size_t n = 0; n < length; ++n) {
    const double cycles = params.frequency * static_cast<double>(n) / sample_rate;
    const double arg = two_pi * cycles + params.phase;
    double v = 0.0;
    switch (kind) {
      case SourceKind::Sine: v = std::sin(arg); break;
      case SourceKind::Square: v = std::sin(arg) >= 0.0 ? 1.0 : -1.0; break;
      case SourceKind::Sawtooth: {
        const double u = cycles + params.phase / two_pi;
        v = 2.0 * (u - std::floor(u)) - 1.0;
        break;
      }
      case SourceKind::Triangle: v = (2.0 / std::numbers::pi) * std::asin(std::sin(arg)); break;
    }
    out.samples[n] = A * v;
  }
  return out;
}

SourceParams sample_source_params(Rng& rng, double nyquist) {
  if (!(nyquist > kMinFrequency)) throw ConfigError("sample_source_params: Nyquist below minimum frequency");
  std::uniform_real_distribution<double> freq(kMinFrequency, kMaxFrequency);
  std::uniform_real_distribution<double> amp(kMinAmplitude, kMaxAmplitude);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  SourceParams p;
  do {
    p.frequency = freq(rng);
  } while (p.frequency >= nyquist);
  p.amplitude = amp(rng);
  p.phase = phase(rng);
  return p;
}

Frame mix(std::span<const Frame> sources, const MixSpec& spec) {
  if (sources.empty()) throw ShapeError("mix: no sources");
  if (sources.size() != spec.weights.size()) {
    throw ShapeError("mix: " + std::to_string(sources.size()) + " sources but " +
                     std::to_string(spec.weights.size()) + " weights");
  }
  const Frame& first = sources.front();
  Frame out{std::vector<double>(first.size(), 0.0), first.sample_rate};
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const Frame& s = sources[k];
    if (s.size() != first.size()) throw ShapeError("mix: frame length mismatch");
    if (s.sample_rate != first.sample_rate) throw ShapeError("mix: sample rate mismatch");
    const double a = spec.weights[k];
    for (std::size_t i = 0; i < s.size(); ++i) out.samples[i] += a * s.samples[i];
  }
  return out;
}

Frame add_gaussian_noise(const Frame& frame, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw ConfigError("add_gaussian_noise: sigma must be non-negative");
  Frame out = frame;
  if (sigma == 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : out.samples) v += noise(rng);
  return out;
}

namespace {
constexpr double kMu = 255.0;
}

double mu_law_compress(double x) {
  const double a = std::min(1.0, std::abs(x));
  return std::copysign(std::log1p(kMu * a) / std::log1p(kMu), x);
}

double mu_law_expand(double y) {
  const double a = std::min(1.0, std::abs(y));
  return std::copysign((std::pow(1.0 + kMu, a) - 1.0) / kMu, y);
}

int mu_law_class(double x) {
  const double clamped = std::clamp(x, -1.0, 1.0);
  const double scaled = (mu_law_compress(clamped) + 1.0) / 2.0 * kMu;
  return static_cast<int>(std::round(scaled));  // std::round is half-away-from-zero
}

double mu_law_value(int cls) {
  if (cls < 0 || cls >= kMuLawClasses) throw ConfigError("mu-law class " + std::to_string(cls) + " out of range");
  const double y = 2.0 * cls / kMu - 1.0;
  return mu_law_expand(y);
}

MuLawCodes mu_law_encode(const Frame& frame) {
  MuLawCodes out;
  out.classes.reserve(frame.size());
  for (double x : frame.samples) {
    if (x < -1.0 || x > 1.0) ++out.clamped;
    out.classes.push_back(mu_law_class(x));
  }
  return out;
}

Frame mu_law_decode(std::span<const int> classes, std::uint32_t sample_rate) {
  Frame out{std::vector<double>(classes.size()), sample_rate};
  for (std::size_t i = 0; i < classes.size(); ++i) out.samples[i] = mu_law_value(classes[i]);
  return out;
}

}  // namespace psep
