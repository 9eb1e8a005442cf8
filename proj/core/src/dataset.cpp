#include "psep/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "psep/binary_io.hpp"
#include "psep/errors.hpp"

namespace psep {

namespace fs = std::filesystem;

std::vector<Frame> Dataset::source_frames(Split s, SourceKind kind) const {
  const auto idx = static_cast<std::size_t>(kind);
  std::vector<Frame> out;
  for (const MixRecord& r : split(s)) {
    if (idx >= r.sources.size()) throw ShapeError("dataset record lacks source " + std::string(source_name(kind)));
    out.push_back(r.sources[idx]);
  }
  return out;
}

MixRecord make_toy_mix(Rng& rng, std::uint32_t sample_rate, std::size_t frame_len) {
  MixRecord rec;
  const double nyquist = sample_rate / 2.0;
  for (SourceKind kind : kAllSources) {
    const SourceParams p = sample_source_params(rng, nyquist);
    rec.sources.push_back(synth_waveform(kind, p, sample_rate, frame_len));
  }
  rec.mix = mix(rec.sources, MixSpec::equal(rec.sources.size()));
  return rec;
}

Dataset make_toy_dataset(const ToyDataConfig& config) {
  if (config.n_train == 0 || config.n_test == 0) throw ConfigError("dataset split sizes must be positive");
  if (config.frame_len == 0) throw ConfigError("frame length must be positive");
  Dataset ds;
  ds.sample_rate = config.sample_rate;
  ds.frame_len = config.frame_len;
  ds.train.reserve(config.n_train);
  ds.test.reserve(config.n_test);
  for (std::size_t i = 0; i < config.n_train + config.n_test; ++i) {
    Rng rng = stream_rng(config.seed, i);
    auto& dst = i < config.n_train ? ds.train : ds.test;
    dst.push_back(make_toy_mix(rng, config.sample_rate, config.frame_len));
  }
  return ds;
}

void write_record(const MixRecord& record, const fs::path& path) {
  record.mix.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write dataset record " + path.string());
  out.write(kDatasetMagic, 8);
  io::put_u32(out, record.mix.sample_rate);
  io::put_u32(out, static_cast<std::uint32_t>(record.mix.size()));
  io::put_u32(out, static_cast<std::uint32_t>(record.sources.size()));
  auto put_frame = [&](const Frame& f) {
    if (f.size() != record.mix.size()) throw ShapeError("dataset record: source/mix length mismatch");
    for (double v : f.samples) io::put_f32(out, static_cast<float>(v));
  };
  for (const Frame& s : record.sources) put_frame(s);
  put_frame(record.mix);
  if (!out) throw Error("failed writing dataset record " + path.string());
}

MixRecord read_record(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open dataset record " + path.string());
  io::expect_magic(in, kDatasetMagic, "dataset record");
  const std::uint32_t rate = io::get_u32(in, "dataset record");
  const std::uint32_t len = io::get_u32(in, "dataset record");
  const std::uint32_t n_sources = io::get_u32(in, "dataset record");
  if (rate == 0 || len == 0) throw FormatError("dataset record has zero rate or length: " + path.string());
  if (n_sources > 64) throw FormatError("implausible source count in " + path.string());
  auto get_frame = [&] {
    Frame f{std::vector<double>(len), rate};
    for (double& v : f.samples) v = io::get_f32(in, "dataset samples");
    return f;
  };
  MixRecord rec;
  for (std::uint32_t k = 0; k < n_sources; ++k) rec.sources.push_back(get_frame());
  rec.mix = get_frame();
  return rec;
}

namespace {

std::string record_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mix_%06zu.psds", i);
  return buf;
}

std::vector<fs::path> list_records(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw MissingArtifact("dataset split directory missing: " + dir.string());
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".psds") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  for (auto [name, split] : {std::pair{"train", Split::Train}, std::pair{"test", Split::Test}}) {
    const fs::path sub = dir / name;
    fs::create_directories(sub);
    const auto& recs = dataset.split(split);
    for (std::size_t i = 0; i < recs.size(); ++i) write_record(recs[i], sub / record_name(i));
  }
}

Dataset read_dataset(const fs::path& dir) {
  Dataset ds;
  for (auto [name, split] : {std::pair{"train", Split::Train}, std::pair{"test", Split::Test}}) {
    auto& dst = split == Split::Train ? ds.train : ds.test;
    for (const fs::path& p : list_records(dir / name)) dst.push_back(read_record(p));
  }
  if (ds.train.empty() && ds.test.empty()) throw MissingArtifact("dataset is empty: " + dir.string());
  const MixRecord& first = ds.train.empty() ? ds.test.front() : ds.train.front();
  ds.sample_rate = first.mix.sample_rate;
  ds.frame_len = first.mix.size();
  return ds;
}

}  // namespace psep
