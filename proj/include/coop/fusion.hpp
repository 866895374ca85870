#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "coop/assignment.hpp"
#include "coop/scene.hpp"

namespace coop {

struct DetectionSource {
  int agent_id = 0;
  int query_index = 0;

  friend bool operator==(const DetectionSource&, const DetectionSource&) = default;
};

struct Detection {
  Vec3 position = Vec3::Zero();  // ego frame
  Vec3 size = Vec3::Zero();
  double confidence = 0.0;
  std::vector<DetectionSource> sources;
  std::optional<int> gt_object_id;
};

struct FusionOptions {
  // Unmatched cooperative queries from different agents closer than this are
  // merged into one detection. Zero disables merging.
  double merge_radius = 1.0;
};

/// One detection per ego query, absorbing every cooperative query matched to
/// it (confidence-weighted mean position and size, noisy-OR confidence), then
/// the unmatched cooperative queries. `coop_sets` must already be in the ego
/// frame and `matches[i]` must partition coop_sets[i] × ego. Throws
/// IndexMismatch otherwise.
std::vector<Detection> fuse(std::span<const Query> ego, std::span<const std::vector<Query>> coop_sets,
                            std::span<const MatchResult> matches, const FusionOptions& options = {});

/// 1 − Π(1 − cᵢ).
double noisy_or(std::span<const double> confidences);

// One line per detection:
//   DET x y z length width height confidence n_sources agent:index ... gt_id|-
void write_detections(std::ostream& out, std::span<const Detection> detections);

}  // namespace coop
