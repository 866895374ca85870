#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coop/assignment.hpp"
#include "coop/caa.hpp"
#include "coop/fusion.hpp"
#include "coop/scene.hpp"
#include "coop/scene_io.hpp"

namespace coop {

// ---------------------------------------------------------------------------
// Metrics

struct AssociationMetrics {
  long true_positive = 0;
  long false_positive = 0;
  long false_negative = 0;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 0.0;

  /// Rates from counts: 0/0 gives precision 1, recall 1, f1 0.
  static AssociationMetrics from_counts(long tp, long fp, long fn);
};

/// Pooled counts, rates recomputed.
AssociationMetrics operator+(const AssociationMetrics& a, const AssociationMetrics& b);

/// Predicted pairs scored against (coop_index, ego_index) ground truth.
/// Throws LabelInconsistency if the ground truth is not injective.
AssociationMetrics association_metrics(const MatchResult& predicted,
                                       std::span<const std::pair<int, int>> ground_truth);

struct RangeBuckets {
  std::vector<double> edges{0.0, 50.0, 100.0, 150.0};

  void validate() const;
  std::size_t count() const { return edges.size() - 1; }
  /// Bucket of a range in [edges[k], edges[k+1]) (last bucket closed), or -1.
  int index_of(double range) const;
};

struct BucketDetectionMetrics {
  double lo = 0.0;
  double hi = 0.0;
  long n_gt = 0;
  long matched = 0;
  long duplicates = 0;
  double recall = 1.0;          // matched / n_gt, 1 when the bucket is empty
  double duplicate_rate = 0.0;  // duplicates / n_gt, 0 when the bucket is empty
  double position_rmse = 0.0;   // over matched pairs
};

struct DetectionMatch {
  int detection = 0;
  int gt = 0;
  double distance = 0.0;
};

/// Greedy centre-distance matching: all (detection, gt) pairs within the
/// radius in ascending distance (ties by detection then gt index), each side
/// used once.
std::vector<DetectionMatch> match_detections(std::span<const Detection> detections,
                                             std::span<const SceneObject> gt, double match_radius);

/// Matches detections to ground truth (ego frame), then buckets each GT by its
/// horizontal range from the ego origin. A detection left unmatched whose
/// nearest GT within the radius is already claimed counts as a duplicate of
/// that GT.
std::vector<BucketDetectionMetrics> detection_metrics(std::span<const Detection> detections,
                                                      std::span<const SceneObject> gt,
                                                      const RangeBuckets& buckets = {},
                                                      double match_radius = 2.0);

// ---------------------------------------------------------------------------
// Scenario simulation

/// Human-level description of one agent; angles in degrees.
struct AgentSpec {
  int id = 0;
  Vantage vantage = Vantage::GroundLevel;
  double x = 0.0;
  double y = 0.0;
  double height = 1.6;  // camera height above ground
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;  // positive tilts the camera down
  double max_range = 100.0;
  double fov_deg = 180.0;  // half angle off the optical axis
  double detect_prob = 0.9;
  double noise_base = 0.2;
  double noise_per_meter = 0.01;
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 960.0;
  double cy = 540.0;
};

/// Agent frame at (x, y, 0) with the given heading; camera at (x, y, height).
AgentConfig build_agent(const AgentSpec& spec);

/// Ground vehicle ego, roadside unit, and a drone.
std::vector<AgentSpec> default_agent_specs();

/// Everything needed to draw one cooperative frame. agents[0] is the ego.
struct ScenarioConfig {
  int n_objects = 60;
  double extent = 50.0;
  DescriptorModel descriptors;
  std::vector<AgentConfig> agents;
  int max_queries = 20;      // per agent, highest confidence first
  double gt_radius = 150.0;  // ego-frame evaluation region (horizontal)

  void validate() const;
};

ScenarioConfig default_scenario();

/// Generates the scene and every agent's capped observations.
SceneRecord simulate_episode(const ScenarioConfig& config, std::uint64_t seed);

/// Keeps the `max_queries` most confident queries (stable, original order).
std::vector<Query> cap_queries(std::vector<Query> queries, int max_queries);

/// One frame as seen by the ego after every cooperative agent's believed pose
/// is perturbed.
struct CooperativeFrame {
  std::vector<Query> ego;
  std::vector<std::vector<Query>> coop;                     // ego frame
  std::vector<std::vector<std::pair<int, int>>> gt_pairs;  // per coop set
  std::vector<SceneObject> gt_objects;                      // ego frame, seen by someone
};

/// Noise for agent k is drawn from derive_seed(noise_seed, {k}), so the same
/// seed yields paired draws at every noise level.
CooperativeFrame make_frame(const SceneRecord& record, const NoiseSpec& noise, std::uint64_t noise_seed,
                            double gt_radius = 150.0);

/// Training example from a frame (positions and labels).
TrainingExample to_training_example(const CooperativeFrame& frame);

// ---------------------------------------------------------------------------
// Matchers

enum class MatcherKind { Greedy, Hungarian, Caa };

struct MatcherSpec {
  std::string name;
  MatcherKind kind = MatcherKind::Hungarian;
  double radius = 3.0;  // greedy radius or Hungarian reject threshold
  double tau = 0.4;     // CAA only
};

/// "greedy", "hungarian", "caa" or "caa@<tau>".
MatcherSpec parse_matcher(const std::string& text, double greedy_radius, double hungarian_threshold,
                          double default_tau);

/// `params` is required for CAA and ignored otherwise.
std::vector<MatchResult> run_matcher(const MatcherSpec& spec, const CaaParams* params,
                                     const CaaOptions& options, const CooperativeFrame& frame);

// ---------------------------------------------------------------------------
// Evaluation of one matcher over a set of frames

struct FrameEvaluation {
  AssociationMetrics association;
  long n_gt = 0;
  long matched_gt = 0;
  long duplicates = 0;
  long detections = 0;
};

FrameEvaluation evaluate_frame(const MatcherSpec& spec, const CaaParams* params, const CaaOptions& options,
                               const CooperativeFrame& frame, const FusionOptions& fusion,
                               double match_radius);

FrameEvaluation operator+(const FrameEvaluation& a, const FrameEvaluation& b);

// ---------------------------------------------------------------------------
// Noise sweep

struct SweepConfig {
  std::vector<double> sigma_translation{0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2};
  std::vector<double> sigma_rotation{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  double match_radius = 2.0;
  double gt_radius = 150.0;
  FusionOptions fusion;
  CaaOptions caa;
  int threads = 1;
};

struct SweepRow {
  std::string matcher;
  double sigma_t = 0.0;
  double sigma_r = 0.0;
  std::optional<double> tau;
  AssociationMetrics association;  // pooled over every frame and coop agent
  double duplicate_rate = 0.0;     // pooled duplicates / pooled GT
  double recall = 1.0;             // pooled matched GT / pooled GT
  int frames = 0;
};

/// Every (sigma_t, sigma_r) grid point × matcher over the same episodes and
/// the same noise draws. Rows are sorted by (sigma_t, sigma_r, matcher order).
std::vector<SweepRow> noise_sweep(std::span<const SceneRecord> episodes, std::span<const MatcherSpec> matchers,
                                  const CaaParams* params, const SweepConfig& config);

/// Noise draws for an episode derive from its scene seed.
std::uint64_t noise_seed_for(const SceneRecord& record);

// ---------------------------------------------------------------------------
// Lift-strategy comparison

struct LiftComparisonConfig {
  AgentConfig agent;              // a high-vantage agent
  double sigma_height = 0.3;      // meters
  double sigma_depth_base = 0.0;  // meters
  double sigma_depth_per_meter = 0.05;
  double min_height = 0.6;        // sampled object-centre heights
  double max_height = 1.0;
  int points_per_seed = 200;
  RangeBuckets buckets;

  void validate() const;
};

/// Drone at 25 m altitude pitched 45° down.
AgentSpec default_drone();

struct LiftBucketRow {
  double lo = 0.0;
  double hi = 0.0;
  LiftStrategy strategy = LiftStrategy::HeightDerived;
  long count = 0;
  double mean_error = 0.0;
  double rmse = 0.0;
};

/// Samples points in the agent's view with horizontal range uniform over the
/// bucket span, projects them without noise, lifts each with a noisy height
/// and with a noisy depth, and reports the world-position error per
/// horizontal-range bucket. Rows are ordered bucket-major, HeightDerived first.
std::vector<LiftBucketRow> strategy_comparison(const LiftComparisonConfig& config,
                                               std::span<const std::uint64_t> seeds);

// ---------------------------------------------------------------------------
// Communication cost

struct CostModelConfig {
  struct Dense {
    double range = 100.0;  // meters, grid spans [-range, range]²
    double cell_size = 1.0;
    int channels = 8;
    int bytes_per_value = 1;
  } dense;
  struct Sparse {
    int n_queries = 50;
    int bytes_per_query = 380;
  } sparse;
  double rate_hz = 10.0;

  void validate() const;
};

struct CostReport {
  double dense_bps = 0.0;
  double sparse_bps = 0.0;
  double ratio = 0.0;
};

CostReport cost_report(const CostModelConfig& config);

// ---------------------------------------------------------------------------
// Tabular output

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
/// x = sigma_t, y = f1, series = "<matcher> r=<sigma_r>".
void write_sweep_plot_data(std::ostream& out, std::span<const SweepRow> rows);
void write_lift_csv(std::ostream& out, std::span<const LiftBucketRow> rows);
/// x = bucket midpoint, y = mean error, series = strategy.
void write_lift_plot_data(std::ostream& out, std::span<const LiftBucketRow> rows);

}  // namespace coop
