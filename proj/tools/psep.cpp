// psep: toy-data generation, prior training, likelihood evaluation and
// Langevin separation, driven by an INI run config.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "psep/checkpoint.hpp"
#include "psep/config.hpp"
#include "psep/dataset.hpp"
#include "psep/errors.hpp"
#include "psep/evaluation.hpp"
#include "psep/report.hpp"
#include "psep/sgld.hpp"
#include "psep/training.hpp"
#include "psep/wav.hpp"

namespace fs = std::filesystem;
using namespace psep;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitNumerical = 4;

// Paths created by a command; removed unless the command commits.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (committed_) return;
    for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) {
      std::error_code ec;
      fs::remove_all(*it, ec);
    }
  }
  const fs::path& track(const fs::path& p) {
    paths_.push_back(p);
    return p;
  }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> paths_;
  bool committed_ = false;
};

struct Globals {
  std::string workdir = ".";
  std::string config_path;
  bool paper_scale = false;
  std::vector<std::string> overrides;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.paper_scale ? RunConfig::paper_scale() : RunConfig();
  if (!g.config_path.empty()) cfg = RunConfig::load(g.config_path, cfg);
  for (const std::string& o : g.overrides) {
    const auto dot = o.find('.');
    const auto eq = o.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
      throw ConfigError("--set expects section.key=value, got '" + o + "'");
    }
    cfg.set(o.substr(0, dot), o.substr(dot + 1, eq - dot - 1), o.substr(eq + 1));
  }
  return cfg;
}

fs::path data_dir(const Globals& g, const RunConfig& cfg) { return fs::path(g.workdir) / cfg.get("data", "dir"); }
fs::path checkpoint_dir(const Globals& g) { return fs::path(g.workdir) / "checkpoints"; }
fs::path report_dir(const Globals& g) { return fs::path(g.workdir) / "reports"; }

Dataset load_dataset(const Globals& g, const RunConfig& cfg) {
  const fs::path dir = data_dir(g, cfg);
  if (!fs::is_directory(dir / "train") || !fs::is_directory(dir / "test")) {
    throw MissingArtifact("no dataset at " + dir.string() + " (run gen-data first)");
  }
  return read_dataset(dir);
}

std::vector<SourceKind> selected_sources(const std::string& source, bool all) {
  if (all) return {std::begin(kAllSources), std::end(kAllSources)};
  if (source.empty()) throw ConfigError("give --source or --all");
  return {parse_source(source)};
}

std::vector<ModelKind> selected_families(const std::string& family, bool all) {
  if (all && family.empty()) return {ModelKind::Flow, ModelKind::AutoRegressive};
  return {parse_model_kind(family.empty() ? "flow" : family)};
}

void check_sigma(double sigma, bool any_sigma) {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
  if (!any_sigma && !is_paper_sigma(sigma)) {
    throw ConfigError("sigma " + format_double(sigma) +
                      " is not one of 0, 0.01, 0.027, 0.077, 0.129, 0.359 (pass --any-sigma to allow it)");
  }
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PSEP_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) n = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs jobs on up to worker_count threads; rethrows the first failure.
void run_parallel(std::vector<std::function<void()>> jobs) {
  const std::size_t workers = worker_count(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        jobs[i]();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t i = 1; i < workers; ++i) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::mutex g_print_mutex;

void say(const std::string& line) {
  std::lock_guard lock(g_print_mutex);
  std::cout << line << std::endl;
}

ProgressFn progress_printer(const std::string& label, std::size_t every) {
  return [label, every](const TelemetryRow& r) {
    if (r.step % every == 0) {
      say(label + " step " + std::to_string(r.step) + " loss " + format_double(r.loss) + " lr " +
          format_double(r.lr));
    }
  };
}

std::string label_of(ModelKind kind, SourceKind source, double sigma) {
  return std::string(model_kind_name(kind)) + "/" + std::string(source_name(source)) + "/sigma" +
         format_double(sigma);
}

// Saves the checkpoint, its telemetry and the resolved config side by side.
fs::path commit_training(const TrainResult& result, const Globals& g, const RunConfig& cfg) {
  const fs::path dir = checkpoint_dir(g);
  const fs::path ck = store_checkpoint(result.checkpoint, dir);
  const fs::path stem = ck.parent_path() / ck.stem();
  write_telemetry_csv(result.telemetry, stem.string() + ".telemetry.csv", false);
  cfg.write(stem.string() + ".config.ini");
  return ck;
}

struct LoadedPrior {
  std::unique_ptr<DensityModel> model;
  std::string hash;
  fs::path path;
};

LoadedPrior load_prior(const Globals& g, ModelKind kind, SourceKind source, double sigma) {
  const auto path = find_checkpoint(checkpoint_dir(g), kind, source, sigma);
  if (!path) throw MissingArtifact("missing checkpoint " + label_of(kind, source, sigma));
  const Checkpoint ck = load_checkpoint(*path);
  return LoadedPrior{model_from_checkpoint(ck), ck.content_hash(), *path};
}

std::vector<LoadedPrior> load_all_priors(const Globals& g, ModelKind kind, double sigma) {
  std::vector<LoadedPrior> priors;
  std::vector<std::string> missing;
  for (SourceKind s : kAllSources) {
    if (find_checkpoint(checkpoint_dir(g), kind, s, sigma)) {
      priors.push_back(load_prior(g, kind, s, sigma));
    } else {
      missing.push_back(label_of(kind, s, sigma));
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing checkpoints:";
    for (const auto& m : missing) msg += " " + m;
    throw MissingArtifact(msg);
  }
  return priors;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const Globals& g, const std::string& out_arg) {
  const RunConfig cfg = resolve_config(g);
  const fs::path out = out_arg.empty() ? data_dir(g, cfg) : fs::path(g.workdir) / out_arg;
  if (fs::exists(out) && !fs::is_empty(out)) {
    throw ConfigError("dataset directory " + out.string() + " already exists; datasets are never overwritten");
  }
  OutputGuard guard;
  if (!fs::exists(out)) guard.track(out);
  guard.track(out / "train");
  guard.track(out / "test");
  guard.track(out / "config.ini");
  const ToyDataConfig dc = cfg.data();
  const Dataset ds = make_toy_dataset(dc);
  write_dataset(ds, out);
  cfg.write(out / "config.ini");
  guard.commit();
  say("wrote " + std::to_string(ds.train.size()) + " train / " + std::to_string(ds.test.size()) +
      " test mixes (" + std::to_string(dc.sample_rate) + " Hz, frame " + std::to_string(dc.frame_len) + ") to " +
      out.string());
  return kExitOk;
}

int cmd_train(const Globals& g, const std::string& family, const std::string& source, bool all) {
  const RunConfig cfg = resolve_config(g);
  const TrainConfig tc = cfg.train();
  const Dataset ds = load_dataset(g, cfg);
  std::vector<std::function<void()>> jobs;
  for (ModelKind kind : selected_families(family, all)) {
    for (SourceKind src : selected_sources(source, all)) {
      jobs.push_back([&, kind, src] {
        const std::vector<Frame> frames = ds.source_frames(Split::Train, src);
        const std::string label = label_of(kind, src, 0.0);
        const TrainResult r = train_prior(kind, src, frames, tc, progress_printer(label, 100));
        const fs::path ck = commit_training(r, g, cfg);
        say(label + " done after " + std::to_string(r.steps_run) + " steps -> " + ck.string());
      });
    }
  }
  run_parallel(std::move(jobs));
  return kExitOk;
}

int cmd_finetune(const Globals& g, const std::string& family, const std::string& source, bool all, double sigma,
                 bool any_sigma) {
  check_sigma(sigma, any_sigma);
  if (!(sigma > 0.0)) throw ConfigError("finetune needs sigma > 0 (the noise-free prior comes from train)");
  const RunConfig cfg = resolve_config(g);
  const TrainConfig tc = cfg.finetune();
  const Dataset ds = load_dataset(g, cfg);
  std::vector<std::function<void()>> jobs;
  for (ModelKind kind : selected_families(family, all)) {
    for (SourceKind src : selected_sources(source, all)) {
      const auto base_path = find_checkpoint(checkpoint_dir(g), kind, src, 0.0);
      if (!base_path) throw MissingArtifact("missing base checkpoint " + label_of(kind, src, 0.0));
      jobs.push_back([&, kind, src, base = *base_path] {
        const Checkpoint base_ck = load_checkpoint(base);
        const std::vector<Frame> frames = ds.source_frames(Split::Train, src);
        const std::string label = label_of(kind, src, sigma);
        const TrainResult r = finetune_noisy(base_ck, sigma, frames, tc, progress_printer(label, 100));
        const fs::path ck = commit_training(r, g, cfg);
        say(label + " done after " + std::to_string(r.steps_run) + " steps" + (r.converged ? " (converged)" : "") +
            " -> " + ck.string());
      });
    }
  }
  run_parallel(std::move(jobs));
  return kExitOk;
}

std::vector<std::vector<Frame>> test_sets(const Dataset& ds, std::size_t limit) {
  std::vector<std::vector<Frame>> sets;
  for (SourceKind s : kAllSources) {
    std::vector<Frame> frames = ds.source_frames(Split::Test, s);
    if (limit > 0 && frames.size() > limit) frames.resize(limit);
    sets.push_back(std::move(frames));
  }
  return sets;
}

int cmd_eval_matrix(const Globals& g, const std::string& family, double data_noise, double cond, bool force) {
  const RunConfig cfg = resolve_config(g);
  const ModelKind kind = parse_model_kind(family);
  const Dataset ds = load_dataset(g, cfg);
  const std::vector<LoadedPrior> priors = load_all_priors(g, kind, cond);
  std::vector<const DensityModel*> models;
  Provenance prov;
  prov.seed = cfg.get_u64("eval", "seed");
  for (const auto& p : priors) {
    models.push_back(p.model.get());
    prov.checkpoints[p.path.filename().string()] = p.hash;
  }
  std::vector<std::string> labels;
  for (SourceKind s : kAllSources) labels.emplace_back(source_name(s));
  CrossLikelihoodOptions opts = cfg.cross_likelihood();
  opts.data_noise = data_noise;
  opts.force = force;
  const auto sets = test_sets(ds, cfg.eval_frames());
  const CrossLikelihoodMatrix m = cross_likelihood(models, sets, labels, opts);
  const DiscriminationReport r = discrimination_report(m);
  OutputGuard guard;
  const fs::path out = report_dir(g);
  const auto files = emit_matrix_report(m, r, prov, out);
  for (const auto& f : files) guard.track(f);
  cfg.write(guard.track(out / (matrix_file_stem(m) + ".config.ini")));
  guard.commit();
  std::cout << render_heatmap(m);
  say(std::string("diagonal dominance per row: ") + (r.all_rows_dominant ? "yes" : "no"));
  for (const auto& f : files) say("wrote " + f.string());
  return kExitOk;
}

int cmd_eval_degenerate(const Globals& g, const std::string& family) {
  const RunConfig cfg = resolve_config(g);
  const ModelKind kind = parse_model_kind(family);
  DegenerateOptions opts = cfg.degenerate();
  std::map<std::pair<int, double>, LoadedPrior> loaded;
  std::vector<std::string> missing;
  for (double sigma : opts.sigma_tags) {
    for (SourceKind s : kAllSources) {
      if (find_checkpoint(checkpoint_dir(g), kind, s, sigma)) {
        loaded.emplace(std::make_pair(static_cast<int>(s), sigma), load_prior(g, kind, s, sigma));
      } else {
        missing.push_back(label_of(kind, s, sigma));
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing checkpoints:";
    for (const auto& m : missing) msg += " " + m;
    throw MissingArtifact(msg);
  }
  const PriorLookup lookup = [&](SourceKind s, double sigma) -> const DensityModel* {
    const auto it = loaded.find({static_cast<int>(s), sigma});
    return it == loaded.end() ? nullptr : it->second.model.get();
  };
  const DegenerateTable t = degenerate_input_table(lookup, opts);
  Provenance prov;
  prov.seed = opts.seed;
  for (const auto& [key, p] : loaded) prov.checkpoints[p.path.filename().string()] = p.hash;
  OutputGuard guard;
  const fs::path out = report_dir(g);
  const auto files = emit_table_report(t, std::string(model_kind_name(kind)), prov, out);
  for (const auto& f : files) guard.track(f);
  cfg.write(guard.track(out / ("degenerate_" + std::string(model_kind_name(kind)) + ".config.ini")));
  guard.commit();
  std::cout << render_table(t);
  for (const auto& f : files) say("wrote " + f.string());
  return kExitOk;
}

// A mix is either a PSEP-DS1 record (ground truth available) or a mono WAV.
struct LoadedMix {
  Frame mix;
  std::vector<Frame> truth;
};

LoadedMix load_mix(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifact("no mix at " + path.string());
  if (path.extension() == ".wav") return LoadedMix{read_wav(path), {}};
  MixRecord rec = read_record(path);
  return LoadedMix{std::move(rec.mix), std::move(rec.sources)};
}

void write_quality(const SeparationQuality& q, const std::vector<std::string>& labels, const fs::path& path,
                   const std::string& extra) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "source,snr_db_identity,mse_identity,snr_db_best,mse_best,best_estimate\n";
  for (std::size_t k = 0; k < q.identity_snr_db.size(); ++k) {
    out << labels[k] << ',' << format_double(q.identity_snr_db[k]) << ',' << format_double(q.identity_mse[k]) << ','
        << format_double(q.best_snr_db[k]) << ',' << format_double(q.best_mse[k]) << ',' << q.best_permutation[k]
        << '\n';
  }
  if (!extra.empty()) out << extra;
}

int cmd_separate(const Globals& g, const std::string& mix_arg, const std::string& family, bool oracle_gaussian,
                 bool anneal, const std::string& out_arg) {
  const RunConfig cfg = resolve_config(g);
  const ModelKind kind = parse_model_kind(family);
  if (kind == ModelKind::AutoRegressive && !oracle_gaussian) {
    throw UnsupportedModel(
        "separate needs input gradients; the autoregressive prior models a categorical distribution over "
        "quantized samples and has no gradient with respect to the continuous signal");
  }
  SgldConfig sc = cfg.sgld();
  const LoadedMix lm = load_mix(fs::path(g.workdir) / mix_arg);
  const std::size_t n = lm.truth.empty() ? kNumSources : lm.truth.size();
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < n; ++k) {
    labels.emplace_back(n == kNumSources ? std::string(source_name(kAllSources[k])) : "source" + std::to_string(k));
  }

  SeparationResult result;
  std::string extra;
  if (oracle_gaussian) {
    sc.sigma_schedule.clear();
    std::vector<DiagonalGaussianPrior> gauss(n, DiagonalGaussianPrior::standard());
    std::vector<const DensityModel*> priors;
    for (const auto& p : gauss) priors.push_back(&p);
    result = sgld_separate(lm.mix, priors, sc);
    const GaussianPosterior post =
        gaussian_posterior_oracle(lm.mix, gauss, sc.resolved_weights(n), sc.mix_noise);
    const SeparationQuality vs_oracle = separation_quality(result.posterior_mean, post.means);
    extra = "# posterior-mean SNR against the analytic Gaussian posterior (dB):";
    for (double v : vs_oracle.identity_snr_db) extra += " " + format_double(v);
    extra += "\n";
    say(extra.substr(2, extra.size() - 3));
  } else if (anneal) {
    if (sc.sigma_schedule.empty()) throw ConfigError("--anneal needs sgld.anneal stages in the config");
    std::vector<std::vector<LoadedPrior>> owned;
    std::vector<std::vector<const DensityModel*>> stages;
    for (const NoiseStage& st : sc.sigma_schedule) {
      owned.push_back(load_all_priors(g, kind, st.sigma));
      std::vector<const DensityModel*> ptrs;
      for (const auto& p : owned.back()) ptrs.push_back(p.model.get());
      stages.push_back(std::move(ptrs));
    }
    result = sgld_separate_annealed(lm.mix, stages, sc);
  } else {
    sc.sigma_schedule.clear();
    const std::vector<LoadedPrior> owned = load_all_priors(g, kind, 0.0);
    std::vector<const DensityModel*> priors;
    for (const auto& p : owned) priors.push_back(p.model.get());
    result = sgld_separate(lm.mix, priors, sc);
  }

  const fs::path out = out_arg.empty() ? fs::path(g.workdir) / "separations" / fs::path(mix_arg).stem()
                                       : fs::path(g.workdir) / out_arg;
  if (fs::exists(out) && !fs::is_empty(out)) throw ConfigError("output directory " + out.string() + " already exists");
  OutputGuard guard;
  guard.track(out);
  write_separation_bundle(result, lm.mix, out);
  cfg.write(out / "config.ini");
  if (!lm.truth.empty()) {
    const SeparationQuality q = separation_quality(result.posterior_mean, lm.truth);
    write_quality(q, labels, out / "quality.csv", extra);
    for (std::size_t k = 0; k < n; ++k) {
      say(labels[k] + ": SNR " + format_double(q.identity_snr_db[k]) + " dB (best assignment " +
          format_double(q.best_snr_db[k]) + " dB)");
    }
  }
  guard.commit();
  say("wrote separation bundle to " + out.string());
  return kExitOk;
}

int cmd_sample(const Globals& g, const std::string& family, const std::string& source, double sigma, std::size_t n,
               std::size_t length, std::uint64_t seed, const std::string& out_arg) {
  const RunConfig cfg = resolve_config(g);
  const ModelKind kind = parse_model_kind(family);
  const SourceKind src = parse_source(source);
  const LoadedPrior prior = load_prior(g, kind, src, sigma);
  const ToyDataConfig dc = cfg.data();
  if (length == 0) length = dc.frame_len;
  Rng rng = stream_rng(seed, 0);
  const std::vector<Frame> frames = prior.model->sample(rng, n, length, dc.sample_rate);
  const fs::path out = out_arg.empty() ? fs::path(g.workdir) / "samples" : fs::path(g.workdir) / out_arg;
  fs::create_directories(out);
  OutputGuard guard;
  const std::string stem = std::string(model_kind_name(kind)) + "_" + std::string(source_name(src)) + "_sigma" +
                           format_double(sigma) + "_" + prior.hash.substr(0, 8);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const fs::path base = out / (stem + "_" + std::to_string(i));
    write_wav(frames[i], guard.track(base.string() + ".wav"));
    write_record(MixRecord{{frames[i]}, frames[i]}, guard.track(base.string() + ".psds"));
  }
  cfg.write(guard.track(out / (stem + ".config.ini")));
  guard.commit();
  say("wrote " + std::to_string(frames.size()) + " samples to " + out.string());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psep: generative source-separation priors on toy waveforms"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--workdir", g.workdir, "directory all paths are relative to");
  app.add_option("--config", g.config_path, "INI run config");
  app.add_flag("--paper-scale", g.paper_scale, "16 kHz, 2^14-sample frames, 5000/1500 mixes, full-size networks");
  app.add_option("--set", g.overrides, "override a config key: section.key=value");

  std::string out, family = "flow", source, mix;
  bool all = false, any_sigma = false, force = false, oracle = false, anneal = false;
  double sigma = 0.0, data_noise = 0.0, cond = 0.0;
  std::size_t n_samples = 1, length = 0;
  std::uint64_t seed = 0;

  auto* show = app.add_subcommand("config", "print the resolved run config");

  auto* gen = app.add_subcommand("gen-data", "write the toy dataset");
  gen->add_option("--out", out, "output directory (default: data.dir)");

  auto* train = app.add_subcommand("train", "train noise-free priors");
  train->add_option("--family", family, "flow | ar");
  train->add_option("--source", source, "sine | saw | square | triangle");
  train->add_flag("--all", all, "every family and source (or every source of --family)");

  auto* ft = app.add_subcommand("finetune", "fine-tune noise-free priors on noisy inputs");
  ft->add_option("--family", family, "flow | ar");
  ft->add_option("--source", source, "source to fine-tune");
  ft->add_flag("--all", all, "every source");
  ft->add_option("--sigma", sigma, "noise level")->required();
  ft->add_flag("--any-sigma", any_sigma, "allow sigma outside the standard list");

  auto* em = app.add_subcommand("eval-matrix", "cross-likelihood matrix over the four priors");
  em->add_option("--family", family, "flow | ar");
  em->add_option("--data-noise", data_noise, "noise std added to test frames");
  em->add_option("--cond", cond, "conditioning sigma of the priors");
  em->add_flag("--force", force, "allow mixed families or conditioning levels");

  auto* ed = app.add_subcommand("eval-degenerate", "likelihood of constant and noise inputs");
  ed->add_option("--family", family, "flow | ar");

  auto* sep = app.add_subcommand("separate", "Langevin separation of a mix");
  sep->add_option("--mix", mix, "PSEP-DS1 record or mono WAV")->required();
  sep->add_option("--family", family, "prior family (flow)");
  sep->add_flag("--oracle-gaussian", oracle, "standard normal priors with an analytic posterior check");
  sep->add_flag("--anneal", anneal, "run the sgld.anneal schedule over noise-conditioned priors");
  sep->add_option("--out", out, "output directory");

  auto* smp = app.add_subcommand("sample", "draw frames from a prior");
  smp->add_option("--family", family, "flow | ar");
  smp->add_option("--source", source, "source prior")->required();
  smp->add_option("--sigma", sigma, "conditioning sigma of the prior");
  smp->add_option("-n", n_samples, "number of frames");
  smp->add_option("--length", length, "samples per frame (default data.frame_len)");
  smp->add_option("--seed", seed, "sampling seed");
  smp->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*show) {
      std::cout << resolve_config(g).to_string();
      return kExitOk;
    }
    if (*gen) return cmd_gen_data(g, out);
    if (*train) return cmd_train(g, all && !train->count("--family") ? "" : family, source, all);
    if (*ft) return cmd_finetune(g, all && !ft->count("--family") ? "" : family, source, all, sigma, any_sigma);
    if (*em) return cmd_eval_matrix(g, family, data_noise, cond, force);
    if (*ed) return cmd_eval_degenerate(g, family);
    if (*sep) return cmd_separate(g, mix, family, oracle, anneal, out);
    if (*smp) return cmd_sample(g, family, source, sigma, n_samples, length, seed, out);
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissing;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissing;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}
