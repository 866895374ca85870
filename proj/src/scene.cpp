#include "coop/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "coop/error.hpp"
#include "coop/random.hpp"

namespace coop {

namespace {

constexpr std::uint64_t kClassEmbeddingSeed = 0xC1A55E5ULL;

Eigen::VectorXd gaussian_unit(Rng& rng, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = standard_normal(rng);
  const double n = v.norm();
  return n > 0.0 ? Eigen::VectorXd(v / n) : v;
}

}  // namespace

std::string_view to_string(Vantage vantage) {
  return vantage == Vantage::HighVantage ? "high" : "ground";
}

std::string_view to_string(Visibility visibility) {
  switch (visibility) {
    case Visibility::CoVisible: return "co_visible";
    case Visibility::EgoMissed: return "ego_missed";
    case Visibility::EgoInvisible: return "ego_invisible";
    case Visibility::EgoOnly: return "ego_only";
    case Visibility::Unobserved: return "unobserved";
  }
  return "unknown";
}

void AgentConfig::validate() const {
  camera.validate();
  require(max_range > 0.0, ErrorKind::InvalidArgument, "agent max_range must be positive");
  require(fov_half_angle > 0.0 && fov_half_angle <= std::numbers::pi, ErrorKind::InvalidArgument,
          "agent fov_half_angle must lie in (0, pi]");
  require(detect_prob_base >= 0.0 && detect_prob_base <= 1.0, ErrorKind::InvalidArgument,
          "agent detect_prob_base must lie in [0, 1]");
  require(obs_noise_base >= 0.0 && obs_noise_per_meter >= 0.0, ErrorKind::InvalidArgument,
          "agent noise parameters must be non-negative");
}

bool in_sensing_region(const AgentConfig& agent, const Vec3& point_glb) {
  const Vec3 offset = point_glb - agent.camera.center();
  const double range = offset.norm();
  if (range > agent.max_range) return false;
  if (range == 0.0) return true;
  const double cos_angle = std::clamp(agent.camera.forward().dot(offset) / range, -1.0, 1.0);
  return std::acos(cos_angle) <= agent.fov_half_angle;
}

bool Roi::contains(const Vec3& point) const {
  const double dx = point.x() - center.x();
  const double dy = point.y() - center.y();
  if (shape == Shape::Circle) return std::hypot(dx, dy) <= extent;
  return std::abs(dx) <= extent && std::abs(dy) <= extent;
}

Scene generate_scene(int n_objects, double extent, std::vector<AgentConfig> agents,
                     std::uint64_t seed, const DescriptorModel& descriptors) {
  require(n_objects >= 0, ErrorKind::InvalidArgument, "n_objects must be non-negative");
  require(extent > 0.0, ErrorKind::InvalidArgument, "scene extent must be positive");
  require(descriptors.dim > 0 && descriptors.n_classes > 0, ErrorKind::InvalidArgument,
          "descriptor model needs positive dim and class count");
  for (const AgentConfig& a : agents) a.validate();

  Scene scene;
  scene.seed = seed;
  scene.extent = extent;
  scene.descriptors = descriptors;
  scene.agents = std::move(agents);
  scene.objects.reserve(n_objects);

  Rng rng(derive_seed(seed, {1}));
  std::uniform_int_distribution<int> class_dist(0, descriptors.n_classes - 1);
  const double min_sep2 = kMinObjectSeparation * kMinObjectSeparation;
  for (int id = 0; id < n_objects; ++id) {
    Vec3 xy;
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      xy = Vec3(uniform(rng, -extent, extent), uniform(rng, -extent, extent), 0.0);
      placed = std::none_of(scene.objects.begin(), scene.objects.end(), [&](const SceneObject& o) {
        return (o.center_glb.head<2>() - xy.head<2>()).squaredNorm() < min_sep2;
      });
    }
    if (!placed) {
      fail(ErrorKind::PlacementFailure,
           "could not place object " + std::to_string(id) + " with 2 m separation");
    }
    SceneObject obj;
    obj.id = id;
    obj.size = Vec3(std::max(3.0, 4.5 + 0.3 * standard_normal(rng)),
                    std::max(1.4, 1.9 + 0.1 * standard_normal(rng)),
                    std::max(1.2, 1.6 + 0.1 * standard_normal(rng)));
    obj.center_glb = Vec3(xy.x(), xy.y(), 0.5 * obj.size.z());
    obj.class_id = class_dist(rng);
    scene.objects.push_back(obj);
  }
  return scene;
}

Eigen::VectorXd class_embedding(const DescriptorModel& model, int class_id) {
  Rng rng(derive_seed(kClassEmbeddingSeed, {static_cast<std::uint64_t>(class_id),
                                            static_cast<std::uint64_t>(model.dim)}));
  return model.class_weight * gaussian_unit(rng, model.dim);
}

Eigen::VectorXd identity_embedding(const DescriptorModel& model, std::uint64_t scene_seed,
                                   int object_id) {
  Rng rng(derive_seed(scene_seed, {2, static_cast<std::uint64_t>(object_id)}));
  return model.identity_weight * gaussian_unit(rng, model.dim);
}

std::vector<Query> observe(const Scene& scene, const AgentConfig& agent, std::uint64_t seed) {
  agent.validate();
  const RigidTransform agent_from_glb = agent.pose_glb.inverse();
  const DescriptorModel& dm = scene.descriptors;
  std::vector<Query> out;
  for (const SceneObject& obj : scene.objects) {
    if (!in_sensing_region(agent, obj.center_glb)) continue;
    // Per-object stream: an object's observation does not depend on which
    // other objects happen to be in view.
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(agent.agent_id),
                               static_cast<std::uint64_t>(obj.id)}));
    const double range = (obj.center_glb - agent.camera.center()).norm();
    const double ratio = range / agent.max_range;
    const double p = agent.detect_prob_base * std::clamp(1.0 - 0.5 * ratio, 0.0, 1.0);
    if (!(uniform(rng, 0.0, 1.0) < p)) continue;

    const double sigma = agent.obs_noise_base + agent.obs_noise_per_meter * range;
    Query q;
    q.owner_agent = agent.agent_id;
    q.position = agent_from_glb.apply(obj.center_glb);
    for (int i = 0; i < 3; ++i) q.position(i) += sigma * standard_normal(rng);
    q.size = obj.size;
    Eigen::VectorXd desc = class_embedding(dm, obj.class_id) +
                           identity_embedding(dm, scene.seed, obj.id);
    for (int i = 0; i < dm.dim; ++i) desc(i) += dm.noise_sigma * standard_normal(rng);
    const double n = desc.norm();
    q.descriptor = n > 0.0 ? Eigen::VectorXd(desc / n) : desc;
    q.confidence = std::clamp(1.0 - 0.5 * ratio, 0.5, 1.0);
    q.gt_object_id = obj.id;
    out.push_back(std::move(q));
  }
  return out;
}

RigidTransform perturb_pose(const RigidTransform& pose, const NoiseSpec& noise, std::uint64_t seed) {
  require(noise.sigma_translation >= 0.0 && noise.sigma_rotation >= 0.0,
          ErrorKind::InvalidArgument, "noise sigmas must be non-negative");
  Rng rng(derive_seed(seed, {3}));
  const double zx = standard_normal(rng);
  const double zy = standard_normal(rng);
  const double zr = standard_normal(rng);
  const double yaw = zr * noise.sigma_rotation * std::numbers::pi / 180.0;
  const Vec3 t = pose.translation() + Vec3(zx * noise.sigma_translation, zy * noise.sigma_translation, 0.0);
  return RigidTransform(yaw_rotation(yaw) * pose.rotation(), t);
}

std::vector<Query> project_queries_to_ego(std::span<const Query> queries,
                                          const RigidTransform& believed_coop_pose,
                                          const RigidTransform& ego_pose) {
  const RigidTransform ego_from_coop = compose(ego_pose.inverse(), believed_coop_pose);
  std::vector<Query> out(queries.begin(), queries.end());
  for (Query& q : out) q.position = ego_from_coop.apply(q.position);
  return out;
}

std::vector<SceneObject> gt_union(std::span<const SceneObject> gt_ego,
                                  std::span<const SceneObject> gt_coop,
                                  const RigidTransform& coop_to_ego, const Roi& roi) {
  std::vector<SceneObject> merged;
  std::set<int> seen;
  for (const SceneObject& o : gt_ego) {
    if (seen.insert(o.id).second) merged.push_back(o);
  }
  for (SceneObject o : gt_coop) {
    if (!seen.insert(o.id).second) continue;
    o.center_glb = coop_to_ego.apply(o.center_glb);
    merged.push_back(o);
  }
  std::vector<SceneObject> out;
  for (const SceneObject& o : merged) {
    if (roi.contains(o.center_glb)) out.push_back(o);
  }
  return out;
}

std::vector<SceneObject> annotations_for(const Scene& scene, const AgentConfig& agent) {
  const RigidTransform agent_from_glb = agent.pose_glb.inverse();
  std::vector<SceneObject> out;
  for (SceneObject o : scene.objects) {
    if (!in_sensing_region(agent, o.center_glb)) continue;
    o.center_glb = agent_from_glb.apply(o.center_glb);
    out.push_back(o);
  }
  return out;
}

std::map<int, Visibility> label_visibility(const Scene& scene, const AgentConfig& ego,
                                           std::span<const Query> ego_queries,
                                           std::span<const std::vector<Query>> coop_query_sets) {
  std::set<int> by_ego;
  std::set<int> by_coop;
  for (const Query& q : ego_queries) {
    if (q.gt_object_id) by_ego.insert(*q.gt_object_id);
  }
  for (const auto& set : coop_query_sets) {
    for (const Query& q : set) {
      if (q.gt_object_id) by_coop.insert(*q.gt_object_id);
    }
  }
  std::map<int, Visibility> out;
  for (const SceneObject& o : scene.objects) {
    const bool e = by_ego.count(o.id) > 0;
    const bool c = by_coop.count(o.id) > 0;
    Visibility v = Visibility::Unobserved;
    if (e && c) {
      v = Visibility::CoVisible;
    } else if (e) {
      v = Visibility::EgoOnly;
    } else if (c) {
      v = in_sensing_region(ego, o.center_glb) ? Visibility::EgoMissed : Visibility::EgoInvisible;
    }
    out[o.id] = v;
  }
  return out;
}

}  // namespace coop
