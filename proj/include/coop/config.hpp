#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "coop/caa.hpp"
#include "coop/eval.hpp"

namespace coop {

struct MatcherConfig {
  std::vector<std::string> evaluate{"greedy", "hungarian", "caa@0.4", "caa@0.8"};
  double greedy_radius = 3.0;
  double hungarian_threshold = 3.0;
  double tau = 0.4;
  double temperature = 0.1;
  int sinkhorn_iters = 20;
  int layers = 1;
  int dim = 32;
  int heads = 1;
  double position_scale = 10.0;

  CaaOptions caa_options() const;
  std::vector<MatcherSpec> specs() const;
};

struct TrainConfig {
  int steps = 2000;
  double learning_rate = 0.01;
  NoiseSpec noise{0.5, 1.0};  // localisation noise applied to training frames
  double nll_weight = 1.0;
  double bce_weight = 1.0;
};

struct EvalConfig {
  NoiseSpec noise;
  double match_radius = 2.0;
  double merge_radius = 1.0;
  RangeBuckets buckets;
};

struct LiftConfig {
  AgentSpec agent = default_drone();
  double sigma_height = 0.3;
  double sigma_depth_base = 0.0;
  double sigma_depth_per_meter = 0.05;
  double min_height = 0.6;
  double max_height = 1.0;
  int points_per_seed = 200;
  int seeds = 20;
  RangeBuckets buckets;

  LiftComparisonConfig comparison() const;
};

struct DataConfig {
  std::string scenes;  // directory written by gen-scenes; empty = simulate in memory
  std::string params;  // trained parameter file for eval / sweep-noise
};

struct RunConfig {
  std::uint64_t seed = 7;
  int threads = 1;
  int n_objects = 60;
  double extent = 50.0;
  int max_queries = 20;
  double gt_radius = 150.0;
  DescriptorModel descriptors;
  std::vector<AgentSpec> agents = default_agent_specs();
  int train_scenes = 200;
  int eval_scenes = 50;
  MatcherConfig matcher;
  TrainConfig train;
  EvalConfig eval;
  std::vector<double> sweep_sigma_t{0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2};
  std::vector<double> sweep_sigma_r{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  LiftConfig lift;
  CostModelConfig cost;
  DataConfig data;

  ScenarioConfig scenario() const;
  SweepConfig sweep() const;
  /// Throws ConfigInvalid naming the first offending key.
  void validate() const;
};

nlohmann::ordered_json to_json(const RunConfig& config);

/// Overlays `user` onto the defaults. Unknown keys, wrong types, and failed
/// validation throw ConfigInvalid. A top-level "command" key (present in
/// manifests) is ignored.
RunConfig config_from_json(const nlohmann::ordered_json& user);

/// "a.b.c=value": the value is parsed as JSON when possible, otherwise taken
/// as a string. Numeric path segments index arrays. Throws ConfigInvalid.
void apply_override(nlohmann::ordered_json& doc, const std::string& assignment);

/// Reads an optional config file, applies overrides in order, then validates.
RunConfig load_config(const std::optional<std::filesystem::path>& path, std::span<const std::string> overrides);

/// Seed of the i-th training or evaluation scene.
std::uint64_t train_scene_seed(const RunConfig& config, int index);
std::uint64_t eval_scene_seed(const RunConfig& config, int index);

}  // namespace coop
