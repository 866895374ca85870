#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "coop/scene.hpp"

namespace coop {

/// A generated scene plus every agent's observations (owner frame), in the
/// order of scene.agents.
struct SceneRecord {
  Scene scene;
  std::vector<std::vector<Query>> queries;
};

// Line-oriented scene file. Field order per record:
//
//   COOPSCENE 1
//   SCENE seed extent dim n_classes class_weight identity_weight noise_sigma
//   OBJECTS n
//   OBJ id cx cy cz length width height class_id
//   AGENTS n
//   AGENT id vantage max_range fov_half_angle detect_prob_base obs_noise_base
//         obs_noise_per_meter pose[r00..r22 tx ty tz] camera[fx fy cx cy r00..r22 tx ty tz]
//   QUERIES n
//   Q owner gt_id(-1 if none) confidence px py pz sx sy sz descriptor[dim]
//   END
//
// Floats are written with 17 significant digits so a read-back is exact.
void write_scene(std::ostream& out, const SceneRecord& record);
SceneRecord read_scene(std::istream& in);

void save_scene(const std::filesystem::path& path, const SceneRecord& record);
SceneRecord load_scene(const std::filesystem::path& path);

/// Sorted *.txt scene files in a directory; throws IoFailure if none exist.
std::vector<std::filesystem::path> list_scene_files(const std::filesystem::path& dir);

}  // namespace coop
