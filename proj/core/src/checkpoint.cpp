#include "psep/checkpoint.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "psep/binary_io.hpp"
#include "psep/errors.hpp"

namespace psep {

namespace fs = std::filesystem;

namespace {
constexpr char kMagic[] = "PSEP-CK1";
}

std::string_view model_kind_name(ModelKind kind) { return kind == ModelKind::Flow ? "flow" : "ar"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "flow") return ModelKind::Flow;
  if (name == "ar" || name == "wavenet") return ModelKind::AutoRegressive;
  throw ConfigError("unknown model family '" + std::string(name) + "' (expected flow or ar)");
}

std::uint32_t sigma_index(double sigma) {
  for (std::uint32_t i = 0; i < std::size(kPaperSigmas); ++i) {
    if (std::abs(kPaperSigmas[i] - sigma) < 1e-12) return i;
  }
  return kCustomSigmaIndex;
}

bool is_paper_sigma(double sigma) { return sigma_index(sigma) != kCustomSigmaIndex; }

std::string Checkpoint::encode() const {
  std::ostringstream os(std::ios::binary);
  os.write(kMagic, 8);
  io::put_u32(os, static_cast<std::uint32_t>(kind));
  io::put_u32(os, sigma_index);
  io::put_u32(os, static_cast<std::uint32_t>(hyper.size()));
  for (const auto& [k, v] : hyper) {
    io::put_string(os, k);
    io::put_f64(os, v);
  }
  io::put_u32(os, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    io::put_string(os, k);
    io::put_string(os, v);
  }
  io::put_u32(os, static_cast<std::uint32_t>(arrays.size()));
  for (const NamedArray& a : arrays) {
    io::put_string(os, a.name);
    io::put_u32(os, static_cast<std::uint32_t>(a.shape.size()));
    std::size_t n = 1;
    for (std::uint32_t d : a.shape) {
      io::put_u32(os, d);
      n *= d;
    }
    if (n != a.data.size()) throw ShapeError("checkpoint array " + a.name + " shape/data mismatch");
    for (float v : a.data) io::put_f32(os, v);
  }
  return os.str();
}

Checkpoint Checkpoint::decode(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  io::expect_magic(is, kMagic, "checkpoint");
  Checkpoint ck;
  const std::uint32_t kind = io::get_u32(is, "checkpoint header");
  if (kind > 1) throw FormatError("unknown checkpoint model kind " + std::to_string(kind));
  ck.kind = static_cast<ModelKind>(kind);
  ck.sigma_index = io::get_u32(is, "checkpoint header");
  const std::uint32_t n_hyper = io::get_u32(is, "checkpoint hyperparameters");
  for (std::uint32_t i = 0; i < n_hyper; ++i) {
    std::string k = io::get_string(is, "checkpoint hyperparameters");
    ck.hyper[std::move(k)] = io::get_f64(is, "checkpoint hyperparameters");
  }
  const std::uint32_t n_meta = io::get_u32(is, "checkpoint metadata");
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = io::get_string(is, "checkpoint metadata");
    ck.meta[std::move(k)] = io::get_string(is, "checkpoint metadata");
  }
  const std::uint32_t n_arrays = io::get_u32(is, "checkpoint arrays");
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    NamedArray a;
    a.name = io::get_string(is, "checkpoint array name");
    const std::uint32_t rank = io::get_u32(is, "checkpoint array rank");
    if (rank > 8) throw FormatError("implausible array rank in checkpoint");
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      a.shape.push_back(io::get_u32(is, "checkpoint array shape"));
      n *= a.shape.back();
    }
    if (n > bytes.size()) throw FormatError("checkpoint array " + a.name + " larger than file");
    a.data.resize(n);
    for (float& v : a.data) v = io::get_f32(is, "checkpoint array data");
    ck.arrays.push_back(std::move(a));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint");
  return ck;
}

std::string Checkpoint::content_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(io::fnv1a(encode())));
  return buf;
}

void save_checkpoint(const Checkpoint& ck, const fs::path& path) {
  const std::string bytes = ck.encode();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return Checkpoint::decode(ss.str());
}

namespace {

void store_params(const ParameterSet& params, Checkpoint& ck) {
  for (const Parameter& p : params.all()) {
    NamedArray a;
    a.name = p.name;
    for (std::size_t d : p.value.shape()) a.shape.push_back(static_cast<std::uint32_t>(d));
    a.data.reserve(p.value.size());
    for (double v : p.value.values()) a.data.push_back(static_cast<float>(v));
    ck.arrays.push_back(std::move(a));
  }
}

void load_params(const Checkpoint& ck, ParameterSet& params) {
  if (ck.arrays.size() != params.size()) {
    throw FormatError("checkpoint has " + std::to_string(ck.arrays.size()) + " arrays, model expects " +
                      std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const NamedArray& a = ck.arrays[i];
    Parameter& p = params[i];
    if (a.name != p.name) throw FormatError("checkpoint array '" + a.name + "' where '" + p.name + "' expected");
    Tensor::Shape shape(a.shape.begin(), a.shape.end());
    if (shape != p.value.shape()) throw FormatError("checkpoint array '" + a.name + "' has wrong shape");
    for (std::size_t j = 0; j < a.data.size(); ++j) p.value[j] = a.data[j];
  }
}

void store_tag(const ModelTag& tag, Checkpoint& ck) {
  ck.sigma_index = sigma_index(tag.sigma);
  ck.hyper["sigma"] = tag.sigma;
  if (tag.source) ck.meta["source"] = std::string(source_name(*tag.source));
}

void load_tag(const Checkpoint& ck, ModelTag& tag) {
  if (ck.sigma_index != kCustomSigmaIndex) {
    if (ck.sigma_index >= std::size(kPaperSigmas)) throw FormatError("checkpoint sigma index out of range");
    tag.sigma = kPaperSigmas[ck.sigma_index];
  } else {
    const auto it = ck.hyper.find("sigma");
    if (it == ck.hyper.end()) throw FormatError("checkpoint with custom sigma lacks the sigma value");
    tag.sigma = it->second;
  }
  if (const auto it = ck.meta.find("source"); it != ck.meta.end()) tag.source = parse_source(it->second);
}

std::size_t hyper_size(const Checkpoint& ck, const char* key) {
  const auto it = ck.hyper.find(key);
  if (it == ck.hyper.end()) throw FormatError(std::string("checkpoint missing hyperparameter ") + key);
  return static_cast<std::size_t>(it->second);
}

}  // namespace

Checkpoint to_checkpoint(const FlowModel& model) {
  Checkpoint ck;
  ck.kind = ModelKind::Flow;
  const FlowConfig& c = model.config();
  ck.hyper = {{"blocks", double(c.blocks)}, {"flows", double(c.flows)},   {"layers", double(c.layers)},
              {"kernel", double(c.kernel)}, {"width", double(c.width)},
              {"actnorm_initialized", model.actnorm_initialized() ? 1.0 : 0.0}};
  store_tag(model.tag(), ck);
  store_params(model.params(), ck);
  return ck;
}

Checkpoint to_checkpoint(const ARModel& model) {
  Checkpoint ck;
  ck.kind = ModelKind::AutoRegressive;
  const ARConfig& c = model.config();
  ck.hyper = {{"blocks", double(c.blocks)}, {"layers", double(c.layers)}, {"kernel", double(c.kernel)},
              {"width", double(c.width)}};
  store_tag(model.tag(), ck);
  store_params(model.params(), ck);
  return ck;
}

std::unique_ptr<FlowModel> flow_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != ModelKind::Flow) throw FormatError("checkpoint is not a flow model");
  FlowConfig c{hyper_size(ck, "blocks"), hyper_size(ck, "flows"), hyper_size(ck, "layers"), hyper_size(ck, "kernel"),
               hyper_size(ck, "width")};
  auto model = std::make_unique<FlowModel>(c, 0);
  load_params(ck, model->params());
  model->set_actnorm_initialized(hyper_size(ck, "actnorm_initialized") != 0);
  load_tag(ck, model->tag());
  return model;
}

std::unique_ptr<ARModel> ar_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != ModelKind::AutoRegressive) throw FormatError("checkpoint is not an autoregressive model");
  ARConfig c{hyper_size(ck, "blocks"), hyper_size(ck, "layers"), hyper_size(ck, "kernel"), hyper_size(ck, "width")};
  auto model = std::make_unique<ARModel>(c, 0);
  load_params(ck, model->params());
  load_tag(ck, model->tag());
  return model;
}

std::unique_ptr<DensityModel> model_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind == ModelKind::Flow) return flow_from_checkpoint(ck);
  return ar_from_checkpoint(ck);
}


double checkpoint_sigma(const Checkpoint& ck) {
  const auto it = ck.hyper.find("sigma");
  return it == ck.hyper.end() ? 0.0 : it->second;
}

namespace {

std::string sigma_label(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", sigma);
  return buf;
}

std::string tag_prefix(ModelKind kind, const std::string& source, double sigma) {
  return std::string(model_kind_name(kind)) + "_" + source + "_sigma" + sigma_label(sigma) + "_";
}

}  // namespace

std::string checkpoint_file_name(const Checkpoint& ck) {
  const auto it = ck.meta.find("source");
  const std::string source = it == ck.meta.end() ? "any" : it->second;
  return tag_prefix(ck.kind, source, checkpoint_sigma(ck)) + ck.content_hash() + ".ck";
}

std::filesystem::path store_checkpoint(const Checkpoint& ck, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = dir / checkpoint_file_name(ck);
  if (!std::filesystem::exists(path)) {
    const std::filesystem::path tmp = path.string() + ".part";
    save_checkpoint(ck, tmp);
    std::filesystem::rename(tmp, path);
  }
  return path;
}

std::optional<std::filesystem::path> find_checkpoint(const std::filesystem::path& dir, ModelKind kind,
                                                     SourceKind source, double sigma) {
  if (!std::filesystem::is_directory(dir)) return std::nullopt;
  const std::string prefix = tag_prefix(kind, std::string(source_name(source)), sigma);
  std::optional<std::filesystem::path> best;
  std::filesystem::file_time_type best_time{};
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".ck") continue;
    const std::string name = entry.path().filename().string();
    // prefix, then exactly 16 hex digits and ".ck"
    if (name.size() != prefix.size() + 19 || name.compare(0, prefix.size(), prefix) != 0) continue;
    if (!std::all_of(name.begin() + static_cast<std::ptrdiff_t>(prefix.size()), name.end() - 3,
                     [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; })) {
      continue;
    }
    const auto t = entry.last_write_time();
    if (!best || t > best_time || (t == best_time && entry.path() > *best)) {
      best = entry.path();
      best_time = t;
    }
  }
  return best;
}

}  // namespace psep
