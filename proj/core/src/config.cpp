#include "psep/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "psep/errors.hpp"
#include "psep/report.hpp"

namespace psep {

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"data", "dir", "data", "dataset directory, relative to the workdir"},
      {"data", "n_train", "500", "training mixes"},
      {"data", "n_test", "200", "test mixes"},
      {"data", "sample_rate", "4000", "Hz"},
      {"data", "frame_len", "2048", "samples per frame"},
      {"data", "seed", "0", "mix i uses stream (seed, i)"},

      {"model", "flow_blocks", "3", "flow squeeze blocks"},
      {"model", "flow_flows", "4", "couplings per block"},
      {"model", "flow_layers", "6", "conditioner WaveNet layers"},
      {"model", "flow_kernel", "3", "conditioner kernel size"},
      {"model", "flow_width", "16", "conditioner channels"},
      {"model", "ar_blocks", "3", "WaveNet dilation cycles"},
      {"model", "ar_layers", "10", "layers per cycle"},
      {"model", "ar_kernel", "3", "kernel size"},
      {"model", "ar_width", "64", "residual channels"},

      {"train", "learning_rate", "0.001", "initial Adam learning rate"},
      {"train", "schedule_gamma", "0.6", "decay factor per milestone"},
      {"train", "schedule_steps", "5", "equally spaced decay milestones"},
      {"train", "batch_size", "4", "frames per step"},
      {"train", "total_steps", "2000", "steps for noise-free training"},
      {"train", "finetune_steps", "1000", "step budget for noise fine-tuning"},
      {"train", "crop_len", "512", "random crop per training frame, 0 = whole frame"},
      {"train", "seed", "0", "parameter init and batch stream"},

      {"sgld", "step_size", "1e-4", "Langevin step size eta"},
      {"sgld", "steps", "1000", "updates when not annealing"},
      {"sgld", "mix_noise", "0.1", "likelihood noise gamma"},
      {"sgld", "init", "from-mix", "from-mix | from-noise"},
      {"sgld", "init_std", "0.1", "noise added to the from-mix start"},
      {"sgld", "anneal", "", "sigma:steps list, e.g. 0.359:200,0.129:200"},
      {"sgld", "diag_stride", "1", "record diagnostics every n steps"},
      {"sgld", "seed", "0", "Langevin noise stream"},

      {"eval", "frames", "0", "test frames per source, 0 = all"},
      {"eval", "seed", "0", "data-noise and degenerate-input stream"},
      {"eval", "noise_draws", "32", "noise frames averaged per degenerate row"},
      {"eval", "noise_std", "0.5", "std of the degenerate noise input"},
  };
  return schema;
}

namespace {

std::string full_key(const std::string& section, const std::string& key) { return section + "." + key; }

template <class T>
T parse_integer(const std::string& text, const std::string& key) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("config key " + key + " expects a non-negative integer, got '" + text + "'");
  }
  return v;
}

}  // namespace

RunConfig::RunConfig() {
  for (const ConfigKey& k : config_schema()) values_[full_key(k.section, k.name)] = k.default_value;
}

RunConfig RunConfig::paper_scale() {
  RunConfig c;
  c.set("data", "n_train", "5000");
  c.set("data", "n_test", "1500");
  c.set("data", "sample_rate", "16000");
  c.set("data", "frame_len", "16384");
  const FlowConfig flow = FlowConfig::paper_toy();
  c.set("model", "flow_blocks", std::to_string(flow.blocks));
  c.set("model", "flow_flows", std::to_string(flow.flows));
  c.set("model", "flow_layers", std::to_string(flow.layers));
  c.set("model", "flow_kernel", std::to_string(flow.kernel));
  c.set("model", "flow_width", std::to_string(flow.width));
  const ARConfig ar = ARConfig::paper_toy();
  c.set("model", "ar_blocks", std::to_string(ar.blocks));
  c.set("model", "ar_layers", std::to_string(ar.layers));
  c.set("model", "ar_kernel", std::to_string(ar.kernel));
  c.set("model", "ar_width", std::to_string(ar.width));
  c.set("train", "learning_rate", "1e-4");
  c.set("train", "batch_size", "5");
  c.set("train", "total_steps", "150000");
  c.set("train", "finetune_steps", "40000");
  c.set("train", "crop_len", "0");
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' must sit inside a [section]");
    for (const auto& [key, value] : body) base.set(section, key, value.get_value<std::string>());
  }
  return base;
}

void RunConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  const auto it = values_.find(full_key(section, key));
  if (it == values_.end()) throw ConfigError("unknown config key [" + section + "] " + key);
  it->second = value;
}

const std::string& RunConfig::get(const std::string& section, const std::string& key) const {
  const auto it = values_.find(full_key(section, key));
  if (it == values_.end()) throw ConfigError("unknown config key [" + section + "] " + key);
  return it->second;
}

double RunConfig::get_double(const std::string& section, const std::string& key) const {
  try {
    return parse_double(get(section, key));
  } catch (const FormatError&) {
    throw ConfigError("config key " + full_key(section, key) + " expects a number, got '" + get(section, key) + "'");
  }
}

std::size_t RunConfig::get_size(const std::string& section, const std::string& key) const {
  return parse_integer<std::size_t>(get(section, key), full_key(section, key));
}

std::uint64_t RunConfig::get_u64(const std::string& section, const std::string& key) const {
  return parse_integer<std::uint64_t>(get(section, key), full_key(section, key));
}

bool RunConfig::get_bool(const std::string& section, const std::string& key) const {
  const std::string& v = get(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key " + full_key(section, key) + " expects a boolean, got '" + v + "'");
}

std::string RunConfig::to_string() const {
  std::ostringstream os;
  std::string section;
  for (const ConfigKey& k : config_schema()) {
    if (k.section != section) {
      if (!section.empty()) os << '\n';
      section = k.section;
      os << '[' << section << "]\n";
    }
    os << "; " << k.doc << " (default " << (k.default_value.empty() ? "empty" : k.default_value) << ")\n";
    os << k.name << " = " << get(k.section, k.name) << '\n';
  }
  return os.str();
}

void RunConfig::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write config " + path.string());
  out << to_string();
}

ToyDataConfig RunConfig::data() const {
  ToyDataConfig c;
  c.n_train = get_size("data", "n_train");
  c.n_test = get_size("data", "n_test");
  c.sample_rate = static_cast<std::uint32_t>(get_size("data", "sample_rate"));
  c.frame_len = get_size("data", "frame_len");
  c.seed = get_u64("data", "seed");
  if (c.sample_rate == 0 || c.frame_len == 0) throw ConfigError("sample_rate and frame_len must be positive");
  return c;
}

TrainConfig RunConfig::train() const {
  TrainConfig c;
  c.learning_rate = get_double("train", "learning_rate");
  c.schedule_gamma = get_double("train", "schedule_gamma");
  c.schedule_steps = get_size("train", "schedule_steps");
  c.batch_size = get_size("train", "batch_size");
  c.total_steps = get_size("train", "total_steps");
  c.crop_len = get_size("train", "crop_len");
  c.seed = get_u64("train", "seed");
  c.flow = FlowConfig{get_size("model", "flow_blocks"), get_size("model", "flow_flows"),
                      get_size("model", "flow_layers"), get_size("model", "flow_kernel"),
                      get_size("model", "flow_width")};
  c.ar = ARConfig{get_size("model", "ar_blocks"), get_size("model", "ar_layers"), get_size("model", "ar_kernel"),
                  get_size("model", "ar_width")};
  c.validate();
  return c;
}

TrainConfig RunConfig::finetune() const {
  TrainConfig c = train();
  c.total_steps = get_size("train", "finetune_steps");
  c.validate();
  return c;
}

SgldConfig RunConfig::sgld() const {
  SgldConfig c;
  c.step_size = get_double("sgld", "step_size");
  c.steps = get_size("sgld", "steps");
  c.mix_noise = get_double("sgld", "mix_noise");
  const std::string& init = get("sgld", "init");
  if (init == "from-mix") {
    c.init = InitPolicy::FromMix;
  } else if (init == "from-noise") {
    c.init = InitPolicy::FromNoise;
  } else {
    throw ConfigError("sgld.init must be from-mix or from-noise, got '" + init + "'");
  }
  c.init_std = get_double("sgld", "init_std");
  c.sigma_schedule = parse_schedule(get("sgld", "anneal"));
  c.diag_stride = get_size("sgld", "diag_stride");
  c.seed = get_u64("sgld", "seed");
  return c;
}

CrossLikelihoodOptions RunConfig::cross_likelihood() const {
  CrossLikelihoodOptions o;
  o.seed = get_u64("eval", "seed");
  return o;
}

DegenerateOptions RunConfig::degenerate() const {
  DegenerateOptions o;
  o.noise_std = get_double("eval", "noise_std");
  o.noise_draws = get_size("eval", "noise_draws");
  o.frame_len = get_size("data", "frame_len");
  o.sample_rate = static_cast<std::uint32_t>(get_size("data", "sample_rate"));
  o.seed = get_u64("eval", "seed");
  return o;
}

std::size_t RunConfig::eval_frames() const { return get_size("eval", "frames"); }

std::vector<NoiseStage> parse_schedule(const std::string& text) {
  std::vector<NoiseStage> stages;
  if (text.empty()) return stages;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("anneal stage '" + item + "' must be sigma:steps");
    NoiseStage st;
    try {
      st.sigma = parse_double(item.substr(0, colon));
    } catch (const FormatError&) {
      throw ConfigError("bad sigma in anneal stage '" + item + "'");
    }
    st.steps = parse_integer<std::size_t>(item.substr(colon + 1), "sgld.anneal");
    stages.push_back(st);
  }
  return stages;
}

}  // namespace psep
