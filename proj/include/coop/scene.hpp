#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "coop/geometry.hpp"

namespace coop {

struct SceneObject {
  int id = 0;
  Vec3 center_glb = Vec3::Zero();
  Vec3 size = Vec3(4.5, 1.9, 1.6);  // length, width, height
  int class_id = 0;
};

enum class Vantage { HighVantage, GroundLevel };

std::string_view to_string(Vantage vantage);

struct AgentConfig {
  int agent_id = 0;
  RigidTransform pose_glb;  // agent → world
  CameraModel camera;
  Vantage vantage = Vantage::GroundLevel;
  double max_range = 100.0;
  double fov_half_angle = 3.141592653589793;
  double detect_prob_base = 1.0;
  double obs_noise_base = 0.2;
  double obs_noise_per_meter = 0.01;

  void validate() const;
};

/// Range from the camera centre and angle off the optical axis both within
/// the agent's limits.
bool in_sensing_region(const AgentConfig& agent, const Vec3& point_glb);

struct Query {
  int owner_agent = 0;
  Vec3 position = Vec3::Zero();
  Vec3 size = Vec3::Zero();
  Eigen::VectorXd descriptor;
  double confidence = 1.0;
  std::optional<int> gt_object_id;  // simulation label; matchers never read it
};

struct NoiseSpec {
  double sigma_translation = 0.0;  // meters, per horizontal axis
  double sigma_rotation = 0.0;     // degrees of yaw
};

struct Roi {
  enum class Shape { Square, Circle };
  Vec3 center = Vec3::Zero();
  double extent = 100.0;  // half side for Square, radius for Circle
  Shape shape = Shape::Circle;

  /// Closed region in the horizontal plane.
  bool contains(const Vec3& point) const;
};

/// How synthetic appearance descriptors are formed: a shared per-class
/// embedding plus a per-object identity embedding plus per-observation noise,
/// unit-normalised.
struct DescriptorModel {
  int dim = 32;
  int n_classes = 3;
  double class_weight = 1.0;
  double identity_weight = 1.0;
  double noise_sigma = 0.15;
};

struct Scene {
  std::uint64_t seed = 0;
  double extent = 100.0;
  DescriptorModel descriptors;
  std::vector<SceneObject> objects;
  std::vector<AgentConfig> agents;
};

inline constexpr double kMinObjectSeparation = 2.0;
inline constexpr int kPlacementRetries = 10000;

/// Uniform placement in [-extent, extent]² with at least 2 m between centres.
/// Throws PlacementFailure when rejection sampling runs out of retries.
Scene generate_scene(int n_objects, double extent, std::vector<AgentConfig> agents,
                     std::uint64_t seed, const DescriptorModel& descriptors = {});

Eigen::VectorXd class_embedding(const DescriptorModel& model, int class_id);
Eigen::VectorXd identity_embedding(const DescriptorModel& model, std::uint64_t scene_seed,
                                   int object_id);

/// Simulated detector output of one agent, positions in the agent frame.
std::vector<Query> observe(const Scene& scene, const AgentConfig& agent, std::uint64_t seed);

/// Localisation-noise injection: x/y translation jitter and a yaw rotation
/// applied about the agent origin. Draws are standard normals scaled by the
/// sigmas, so one seed gives paired noise across sigma levels.
RigidTransform perturb_pose(const RigidTransform& pose, const NoiseSpec& noise, std::uint64_t seed);

/// Maps owner-frame queries into the ego frame via ego⁻¹ ∘ believed_coop_pose.
std::vector<Query> project_queries_to_ego(std::span<const Query> queries,
                                          const RigidTransform& believed_coop_pose,
                                          const RigidTransform& ego_pose);

/// Union of ego and cooperative annotations by object id (ego wins), with
/// cooperative centres moved into the ego frame, restricted to the ROI.
std::vector<SceneObject> gt_union(std::span<const SceneObject> gt_ego,
                                  std::span<const SceneObject> gt_coop,
                                  const RigidTransform& coop_to_ego, const Roi& roi);

/// Annotations visible to one agent, expressed in that agent's frame.
std::vector<SceneObject> annotations_for(const Scene& scene, const AgentConfig& agent);

enum class Visibility { CoVisible, EgoMissed, EgoInvisible, EgoOnly, Unobserved };

std::string_view to_string(Visibility visibility);

std::map<int, Visibility> label_visibility(const Scene& scene, const AgentConfig& ego,
                                           std::span<const Query> ego_queries,
                                           std::span<const std::vector<Query>> coop_query_sets);

}  // namespace coop
