// Batch front end: scene generation, training, evaluation, noise sweeps,
// lift-strategy comparison and the communication cost report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coop/caa.hpp"
#include "coop/config.hpp"
#include "coop/error.hpp"
#include "coop/eval.hpp"
#include "coop/random.hpp"
#include "coop/scene_io.hpp"
#include "coop/text.hpp"

namespace fs = std::filesystem;
using namespace coop;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigInvalid:
      return 2;
    case ErrorKind::IoFailure:
      return 3;
    case ErrorKind::DivergenceDetected:
      return 4;
    default:
      return 1;
  }
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) fail(ErrorKind::IoFailure, "failed writing " + path.string());
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

RunConfig resolve(const Options& o) {
  std::vector<std::string> overrides = o.overrides;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  if (o.threads) overrides.push_back("threads=" + std::to_string(*o.threads));
  std::optional<fs::path> path;
  if (!o.config.empty()) path = o.config;
  return load_config(path, overrides);
}

void write_manifest(const fs::path& out, const std::string& command, const RunConfig& config) {
  nlohmann::ordered_json m;
  m["command"] = command;
  const nlohmann::ordered_json resolved = to_json(config);
  for (const auto& [k, v] : resolved.items()) m[k] = v;
  const fs::path path = out / "manifest.json";
  std::ofstream f = open_output(path);
  f << m.dump(2) << '\n';
  finish(f, path);
}

std::string scene_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04d.txt", i);
  return buf;
}

std::vector<SceneRecord> scenes_for(const RunConfig& c, bool training) {
  std::vector<SceneRecord> out;
  if (!c.data.scenes.empty()) {
    for (const fs::path& p : list_scene_files(fs::path(c.data.scenes) / (training ? "train" : "eval"))) {
      out.push_back(load_scene(p));
    }
    return out;
  }
  const ScenarioConfig scenario = c.scenario();
  const int n = training ? c.train_scenes : c.eval_scenes;
  for (int i = 0; i < n; ++i) {
    out.push_back(simulate_episode(scenario, training ? train_scene_seed(c, i) : eval_scene_seed(c, i)));
  }
  return out;
}

std::optional<CaaParams> params_for(const RunConfig& c) {
  bool needs = false;
  for (const MatcherSpec& s : c.matcher.specs()) needs = needs || s.kind == MatcherKind::Caa;
  if (!needs) return std::nullopt;
  if (c.data.params.empty()) fail(ErrorKind::ConfigInvalid, "data.params is required to evaluate a CAA matcher");
  CaaParams p = load_params(c.data.params);
  if (p.dim != c.descriptors.dim) fail(ErrorKind::ConfigInvalid, "parameter file dim does not match the descriptors");
  return p;
}

void gen_scenes(const RunConfig& c, const fs::path& out) {
  const ScenarioConfig scenario = c.scenario();
  for (bool training : {true, false}) {
    const fs::path dir = out / (training ? "train" : "eval");
    prepare_dir(dir);
    const int n = training ? c.train_scenes : c.eval_scenes;
    for (int i = 0; i < n; ++i) {
      save_scene(dir / scene_name(i),
                 simulate_episode(scenario, training ? train_scene_seed(c, i) : eval_scene_seed(c, i)));
    }
  }
  std::printf("wrote %d training and %d evaluation scenes to %s\n", c.train_scenes, c.eval_scenes,
              out.string().c_str());
}

void train(const RunConfig& c, const fs::path& out) {
  std::vector<TrainingExample> dataset;
  for (const SceneRecord& r : scenes_for(c, true)) {
    dataset.push_back(to_training_example(make_frame(r, c.train.noise, noise_seed_for(r), c.gt_radius)));
  }
  const CaaParams init = initialize_caa(c.matcher.layers, c.matcher.dim, c.matcher.heads, c.seed);
  const LossWeights weights{c.train.nll_weight, c.train.bce_weight};
  const TrainingResult result =
      train_caa(init, dataset, c.train.steps, c.train.learning_rate, c.seed, c.matcher.caa_options(), weights);
  save_params(out / "params.bin", result.params);
  save_loss_curve(out / "loss.csv", result.loss_curve);
  const double before = mean_loss(init, dataset, c.matcher.caa_options(), weights);
  const double after = mean_loss(result.params, dataset, c.matcher.caa_options(), weights);
  std::printf("trained %zu parameters for %d steps on %zu examples: mean loss %s -> %s\n",
              parameter_count(result.params), c.train.steps, dataset.size(), text::fixed(before, 4).c_str(),
              text::fixed(after, 4).c_str());
}

void evaluate(const RunConfig& c, const fs::path& out) {
  const std::optional<CaaParams> params = params_for(c);
  const std::vector<MatcherSpec> specs = c.matcher.specs();
  const std::vector<SceneRecord> scenes = scenes_for(c, false);
  const CaaOptions options = c.matcher.caa_options();
  const FusionOptions fusion{c.eval.merge_radius};
  const std::size_t nb = c.eval.buckets.count();

  const fs::path assoc_path = out / "metrics.csv";
  const fs::path det_path = out / "detection_metrics.csv";
  std::ofstream assoc = open_output(assoc_path);
  std::ofstream det = open_output(det_path);
  assoc << "matcher,true_positive,false_positive,false_negative,precision,recall,f1\n";
  det << "matcher,range_lo,range_hi,n_gt,matched,duplicates,recall,duplicate_rate,position_rmse\n";
  for (const MatcherSpec& spec : specs) {
    AssociationMetrics total;
    std::vector<BucketDetectionMetrics> pooled(nb);
    std::vector<double> squared(nb, 0.0);
    for (const SceneRecord& r : scenes) {
      const CooperativeFrame frame = make_frame(r, c.eval.noise, noise_seed_for(r), c.gt_radius);
      const std::vector<MatchResult> matches = run_matcher(spec, params ? &*params : nullptr, options, frame);
      for (std::size_t i = 0; i < matches.size(); ++i) {
        total = total + association_metrics(matches[i], frame.gt_pairs[i]);
      }
      const auto detections = fuse(frame.ego, frame.coop, matches, fusion);
      const auto buckets = detection_metrics(detections, frame.gt_objects, c.eval.buckets, c.eval.match_radius);
      for (std::size_t k = 0; k < nb; ++k) {
        pooled[k].n_gt += buckets[k].n_gt;
        pooled[k].matched += buckets[k].matched;
        pooled[k].duplicates += buckets[k].duplicates;
        squared[k] += buckets[k].position_rmse * buckets[k].position_rmse * static_cast<double>(buckets[k].matched);
      }
    }
    assoc << spec.name << ',' << total.true_positive << ',' << total.false_positive << ',' << total.false_negative
          << ',' << text::fixed(total.precision) << ',' << text::fixed(total.recall) << ','
          << text::fixed(total.f1) << '\n';
    for (std::size_t k = 0; k < nb; ++k) {
      const BucketDetectionMetrics& b = pooled[k];
      const double recall = b.n_gt ? static_cast<double>(b.matched) / static_cast<double>(b.n_gt) : 1.0;
      const double dup = b.n_gt ? static_cast<double>(b.duplicates) / static_cast<double>(b.n_gt) : 0.0;
      const double rmse = b.matched ? std::sqrt(squared[k] / static_cast<double>(b.matched)) : 0.0;
      det << spec.name << ',' << text::fixed(c.eval.buckets.edges[k], 1) << ','
          << text::fixed(c.eval.buckets.edges[k + 1], 1) << ',' << b.n_gt << ',' << b.matched << ','
          << b.duplicates << ',' << text::fixed(recall) << ',' << text::fixed(dup) << ',' << text::fixed(rmse)
          << '\n';
    }
    std::printf("%-12s f1 %s\n", spec.name.c_str(), text::fixed(total.f1, 4).c_str());
  }
  finish(assoc, assoc_path);
  finish(det, det_path);
}

void sweep_noise(const RunConfig& c, const fs::path& out) {
  const std::optional<CaaParams> params = params_for(c);
  const std::vector<MatcherSpec> specs = c.matcher.specs();
  const std::vector<SceneRecord> scenes = scenes_for(c, false);
  const std::vector<SweepRow> rows = noise_sweep(scenes, specs, params ? &*params : nullptr, c.sweep());
  const fs::path table = out / "sweep.csv";
  const fs::path plot = out / "sweep_plot.csv";
  std::ofstream t = open_output(table);
  write_sweep_csv(t, rows);
  finish(t, table);
  std::ofstream p = open_output(plot);
  write_sweep_plot_data(p, rows);
  finish(p, plot);
  std::printf("wrote %zu sweep rows over %zu scenes\n", rows.size(), scenes.size());
}

void compare_lift(const RunConfig& c, const fs::path& out) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < c.lift.seeds; ++i) seeds.push_back(derive_seed(c.seed, {0x1F, static_cast<std::uint64_t>(i)}));
  const std::vector<LiftBucketRow> rows = strategy_comparison(c.lift.comparison(), seeds);
  const fs::path table = out / "lift.csv";
  const fs::path plot = out / "lift_plot.csv";
  std::ofstream t = open_output(table);
  write_lift_csv(t, rows);
  finish(t, table);
  std::ofstream p = open_output(plot);
  write_lift_plot_data(p, rows);
  finish(p, plot);
  for (const LiftBucketRow& r : rows) {
    std::printf("%5.0f-%-5.0f %-14s mean error %s m\n", r.lo, r.hi, std::string(to_string(r.strategy)).c_str(),
                text::fixed(r.mean_error, 3).c_str());
  }
}

void cost(const RunConfig& c, const fs::path& out) {
  const CostReport r = cost_report(c.cost);
  nlohmann::ordered_json j{{"dense_bps", r.dense_bps}, {"sparse_bps", r.sparse_bps}, {"ratio", r.ratio}};
  const fs::path path = out / "cost.json";
  std::ofstream f = open_output(path);
  f << j.dump(2) << '\n';
  finish(f, path);
  std::printf("%s\n", j.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative perception association toolkit"};
  app.require_subcommand(1);
  Options o;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file (a previous manifest.json also works)");
    sub->add_option("--set", o.overrides, "Override a config leaf: key.path=value (repeatable)");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--threads", o.threads, "Worker threads for sweeps");
  };
  using Handler = void (*)(const RunConfig&, const fs::path&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands{
      {"gen-scenes", "Generate training and evaluation scene files", gen_scenes},
      {"train", "Train the association network", train},
      {"eval", "Association and detection metrics at one noise level", evaluate},
      {"sweep-noise", "Localisation-noise robustness sweep", sweep_noise},
      {"compare-lift", "Height-derived vs direct-depth lifting error by range", compare_lift},
      {"cost-report", "Dense vs sparse communication cost", cost},
  };
  for (const auto& [name, help, handler] : commands) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: code=ConfigInvalid message=\"%s\"\n", escape(e.what()).c_str());
    std::fprintf(stderr, "%s", app.help().c_str());
    return 2;
  }

  try {
    for (const auto& [name, help, handler] : commands) {
      if (!app.got_subcommand(name)) continue;
      const RunConfig config = resolve(o);
      const fs::path out = o.out;
      prepare_dir(out);
      write_manifest(out, name, config);
      handler(config, out);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: code=%s message=\"%s\"\n", std::string(to_string(e.kind())).c_str(),
                 escape(e.what()).c_str());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: code=Internal message=\"%s\"\n", escape(e.what()).c_str());
    return 1;
  }
  return 0;
}
