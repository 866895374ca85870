#include "coop/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>
#include <thread>

#include "coop/error.hpp"
#include "coop/random.hpp"
#include "coop/text.hpp"

namespace coop {

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

double ratio_or(long num, long den, double fallback) {
  return den == 0 ? fallback : static_cast<double>(num) / static_cast<double>(den);
}

std::vector<Vec3> positions_of(std::span<const Query> queries) {
  std::vector<Vec3> out;
  out.reserve(queries.size());
  for (const Query& q : queries) out.push_back(q.position);
  return out;
}

std::vector<double> confidences_of(std::span<const Query> queries) {
  std::vector<double> out;
  out.reserve(queries.size());
  for (const Query& q : queries) out.push_back(q.confidence);
  return out;
}

double horizontal_range(const Vec3& p) { return std::hypot(p.x(), p.y()); }

}  // namespace

// ---------------------------------------------------------------------------

AssociationMetrics AssociationMetrics::from_counts(long tp, long fp, long fn) {
  AssociationMetrics m;
  m.true_positive = tp;
  m.false_positive = fp;
  m.false_negative = fn;
  m.precision = ratio_or(tp, tp + fp, 1.0);
  m.recall = ratio_or(tp, tp + fn, 1.0);
  const double s = m.precision + m.recall;
  m.f1 = (tp == 0 || s == 0.0) ? 0.0 : 2.0 * m.precision * m.recall / s;
  return m;
}

AssociationMetrics operator+(const AssociationMetrics& a, const AssociationMetrics& b) {
  return AssociationMetrics::from_counts(a.true_positive + b.true_positive, a.false_positive + b.false_positive,
                                         a.false_negative + b.false_negative);
}

AssociationMetrics association_metrics(const MatchResult& predicted,
                                       std::span<const std::pair<int, int>> ground_truth) {
  std::set<std::pair<int, int>> gt;
  std::set<int> gt_coop, gt_ego;
  for (const auto& p : ground_truth) {
    require(gt_coop.insert(p.first).second && gt_ego.insert(p.second).second, ErrorKind::LabelInconsistency,
            "ground-truth correspondences must be injective");
    gt.insert(p);
  }
  long tp = 0;
  for (const MatchPair& p : predicted.pairs) tp += gt.count({p.coop_index, p.ego_index}) ? 1 : 0;
  const long fp = static_cast<long>(predicted.pairs.size()) - tp;
  const long fn = static_cast<long>(gt.size()) - tp;
  return AssociationMetrics::from_counts(tp, fp, fn);
}

void RangeBuckets::validate() const {
  require(edges.size() >= 2, ErrorKind::InvalidArgument, "range buckets need at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    require(edges[i] > edges[i - 1], ErrorKind::InvalidArgument, "range bucket edges must be strictly increasing");
  }
}

int RangeBuckets::index_of(double range) const {
  if (!(range >= edges.front() && range <= edges.back())) return -1;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    if (range < edges[k + 1]) return static_cast<int>(k);
  }
  return static_cast<int>(edges.size()) - 2;
}

std::vector<DetectionMatch> match_detections(std::span<const Detection> detections,
                                             std::span<const SceneObject> gt, double match_radius) {
  require(match_radius > 0.0, ErrorKind::InvalidArgument, "match radius must be positive");
  std::vector<DetectionMatch> candidates;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double dist = (detections[d].position - gt[g].center_glb).norm();
      if (dist <= match_radius) candidates.push_back({static_cast<int>(d), static_cast<int>(g), dist});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const DetectionMatch& a, const DetectionMatch& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.detection != b.detection) return a.detection < b.detection;
    return a.gt < b.gt;
  });
  std::vector<bool> det_used(detections.size(), false), gt_used(gt.size(), false);
  std::vector<DetectionMatch> out;
  for (const DetectionMatch& c : candidates) {
    if (det_used[static_cast<std::size_t>(c.detection)] || gt_used[static_cast<std::size_t>(c.gt)]) continue;
    det_used[static_cast<std::size_t>(c.detection)] = true;
    gt_used[static_cast<std::size_t>(c.gt)] = true;
    out.push_back(c);
  }
  return out;
}

std::vector<BucketDetectionMetrics> detection_metrics(std::span<const Detection> detections,
                                                      std::span<const SceneObject> gt, const RangeBuckets& buckets,
                                                      double match_radius) {
  buckets.validate();
  const std::vector<DetectionMatch> matches = match_detections(detections, gt, match_radius);
  std::vector<bool> det_used(detections.size(), false);
  for (const DetectionMatch& m : matches) det_used[static_cast<std::size_t>(m.detection)] = true;

  std::vector<BucketDetectionMetrics> out(buckets.count());
  std::vector<double> squared(buckets.count(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].lo = buckets.edges[k];
    out[k].hi = buckets.edges[k + 1];
  }
  std::vector<int> bucket_of(gt.size());
  for (std::size_t g = 0; g < gt.size(); ++g) {
    bucket_of[g] = buckets.index_of(horizontal_range(gt[g].center_glb));
    if (bucket_of[g] >= 0) ++out[static_cast<std::size_t>(bucket_of[g])].n_gt;
  }
  for (const DetectionMatch& m : matches) {
    const int k = bucket_of[static_cast<std::size_t>(m.gt)];
    if (k < 0) continue;
    ++out[static_cast<std::size_t>(k)].matched;
    squared[static_cast<std::size_t>(k)] += m.distance * m.distance;
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (det_used[d]) continue;
    int nearest = -1;
    double best = match_radius;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double dist = (detections[d].position - gt[g].center_glb).norm();
      if (dist <= best) {
        if (nearest < 0 || dist < best) nearest = static_cast<int>(g);
        best = dist;
      }
    }
    // Every GT within the radius of an unused detection is already claimed,
    // otherwise the greedy pass would have paired them.
    if (nearest >= 0 && bucket_of[static_cast<std::size_t>(nearest)] >= 0) {
      ++out[static_cast<std::size_t>(bucket_of[static_cast<std::size_t>(nearest)])].duplicates;
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    BucketDetectionMetrics& b = out[k];
    b.recall = ratio_or(b.matched, b.n_gt, 1.0);
    b.duplicate_rate = ratio_or(b.duplicates, b.n_gt, 0.0);
    b.position_rmse = b.matched > 0 ? std::sqrt(squared[k] / static_cast<double>(b.matched)) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

void ScenarioConfig::validate() const {
  require(n_objects >= 0, ErrorKind::InvalidArgument, "n_objects must be non-negative");
  require(extent > 0.0, ErrorKind::InvalidArgument, "extent must be positive");
  require(descriptors.dim > 0 && descriptors.n_classes > 0, ErrorKind::InvalidArgument,
          "descriptor dim and class count must be positive");
  require(descriptors.noise_sigma >= 0.0, ErrorKind::InvalidArgument, "descriptor noise must be non-negative");
  require(agents.size() >= 2, ErrorKind::InvalidArgument, "a scenario needs an ego and at least one coop agent");
  require(max_queries >= 1, ErrorKind::InvalidArgument, "max_queries must be positive");
  require(gt_radius > 0.0, ErrorKind::InvalidArgument, "gt_radius must be positive");
  std::set<int> ids;
  for (const AgentConfig& a : agents) {
    a.validate();
    require(ids.insert(a.agent_id).second, ErrorKind::InvalidArgument, "agent ids must be unique");
  }
}

AgentConfig build_agent(const AgentSpec& s) {
  AgentConfig a;
  a.agent_id = s.id;
  a.vantage = s.vantage;
  a.pose_glb = RigidTransform::from_yaw(s.yaw_deg * kDegree, Vec3(s.x, s.y, 0.0));
  a.camera.fx = s.fx;
  a.camera.fy = s.fy;
  a.camera.cx = s.cx;
  a.camera.cy = s.cy;
  a.camera.pose_cam2glb =
      RigidTransform(camera_rotation(s.yaw_deg * kDegree, s.pitch_deg * kDegree), Vec3(s.x, s.y, s.height));
  a.max_range = s.max_range;
  a.fov_half_angle = s.fov_deg * kDegree;
  a.detect_prob_base = s.detect_prob;
  a.obs_noise_base = s.noise_base;
  a.obs_noise_per_meter = s.noise_per_meter;
  a.validate();
  return a;
}

std::vector<AgentSpec> default_agent_specs() {
  AgentSpec ego;
  AgentSpec rsu;
  rsu.id = 1;
  rsu.vantage = Vantage::HighVantage;
  rsu.x = 30.0;
  rsu.y = 20.0;
  rsu.height = 7.0;
  rsu.yaw_deg = 214.0;
  rsu.pitch_deg = 10.0;
  rsu.max_range = 120.0;
  rsu.fov_deg = 70.0;
  rsu.detect_prob = 0.95;
  AgentSpec drone = default_drone();
  drone.x = -20.0;
  drone.y = -25.0;
  drone.yaw_deg = 53.0;
  drone.max_range = 150.0;
  drone.detect_prob = 0.95;
  return {ego, rsu, drone};
}

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  for (const AgentSpec& s : default_agent_specs()) c.agents.push_back(build_agent(s));
  return c;
}

std::vector<Query> cap_queries(std::vector<Query> queries, int max_queries) {
  require(max_queries >= 0, ErrorKind::InvalidArgument, "max_queries must be non-negative");
  if (queries.size() <= static_cast<std::size_t>(max_queries)) return queries;
  std::vector<std::size_t> order(queries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return queries[a].confidence > queries[b].confidence; });
  order.resize(static_cast<std::size_t>(max_queries));
  std::sort(order.begin(), order.end());
  std::vector<Query> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(std::move(queries[i]));
  return out;
}

SceneRecord simulate_episode(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  SceneRecord r;
  r.scene = generate_scene(config.n_objects, config.extent, config.agents, seed, config.descriptors);
  for (const AgentConfig& a : r.scene.agents) {
    r.queries.push_back(cap_queries(observe(r.scene, a, derive_seed(seed, {4})), config.max_queries));
  }
  return r;
}

CooperativeFrame make_frame(const SceneRecord& record, const NoiseSpec& noise, std::uint64_t noise_seed,
                            double gt_radius) {
  const auto& agents = record.scene.agents;
  require(!agents.empty() && record.queries.size() == agents.size(), ErrorKind::DimensionMismatch,
          "scene record needs one query list per agent");
  const RigidTransform& ego_pose = agents[0].pose_glb;
  CooperativeFrame f;
  f.ego = record.queries[0];
  for (std::size_t k = 1; k < agents.size(); ++k) {
    const RigidTransform believed = perturb_pose(agents[k].pose_glb, noise, derive_seed(noise_seed, {k}));
    f.coop.push_back(project_queries_to_ego(record.queries[k], believed, ego_pose));
    std::vector<std::pair<int, int>> pairs;
    const auto& coop = f.coop.back();
    for (std::size_t u = 0; u < coop.size(); ++u) {
      if (!coop[u].gt_object_id) continue;
      for (std::size_t x = 0; x < f.ego.size(); ++x) {
        if (f.ego[x].gt_object_id == coop[u].gt_object_id) {
          pairs.emplace_back(static_cast<int>(u), static_cast<int>(x));
          break;
        }
      }
    }
    f.gt_pairs.push_back(std::move(pairs));
  }
  const RigidTransform ego_from_glb = ego_pose.inverse();
  for (const SceneObject& o : record.scene.objects) {
    const bool seen = std::any_of(agents.begin(), agents.end(),
                                  [&](const AgentConfig& a) { return in_sensing_region(a, o.center_glb); });
    if (!seen) continue;
    SceneObject local = o;
    local.center_glb = ego_from_glb.apply(o.center_glb);
    if (horizontal_range(local.center_glb) <= gt_radius) f.gt_objects.push_back(local);
  }
  return f;
}

TrainingExample to_training_example(const CooperativeFrame& frame) {
  TrainingExample ex;
  ex.ego = make_query_set(frame.ego);
  for (const auto& set : frame.coop) ex.coop.push_back(make_query_set(set));
  ex.pairs = frame.gt_pairs;
  check_labels(ex);
  return ex;
}

// ---------------------------------------------------------------------------

MatcherSpec parse_matcher(const std::string& text, double greedy_radius, double hungarian_threshold,
                          double default_tau) {
  MatcherSpec s;
  s.name = text;
  if (text == "greedy") {
    s.kind = MatcherKind::Greedy;
    s.radius = greedy_radius;
  } else if (text == "hungarian") {
    s.kind = MatcherKind::Hungarian;
    s.radius = hungarian_threshold;
  } else if (text == "caa") {
    s.kind = MatcherKind::Caa;
    s.tau = default_tau;
  } else if (text.starts_with("caa@")) {
    s.kind = MatcherKind::Caa;
    try {
      s.tau = text::parse_double(std::string_view(text).substr(4));
    } catch (const Error&) {
      fail(ErrorKind::ConfigInvalid, "matcher '" + text + "': bad threshold");
    }
  } else {
    fail(ErrorKind::ConfigInvalid, "unknown matcher '" + text + "'");
  }
  if (s.kind == MatcherKind::Caa) {
    require(s.tau > 0.0 && s.tau < 1.0, ErrorKind::ConfigInvalid, "matcher '" + text + "': tau must lie in (0, 1)");
  } else {
    require(s.radius > 0.0, ErrorKind::ConfigInvalid, "matcher '" + text + "': radius must be positive");
  }
  return s;
}

std::vector<MatchResult> run_matcher(const MatcherSpec& spec, const CaaParams* params, const CaaOptions& options,
                                     const CooperativeFrame& frame) {
  std::vector<MatchResult> out;
  if (frame.coop.empty()) return out;
  const std::vector<Vec3> ego_pos = positions_of(frame.ego);
  switch (spec.kind) {
    case MatcherKind::Greedy:
      for (const auto& set : frame.coop) {
        out.push_back(greedy_distance_match(positions_of(set), ego_pos, spec.radius, confidences_of(set)));
      }
      break;
    case MatcherKind::Hungarian:
      for (const auto& set : frame.coop) out.push_back(hungarian_match(positions_of(set), ego_pos, spec.radius));
      break;
    case MatcherKind::Caa: {
      require(params != nullptr, ErrorKind::InvalidArgument, "CAA matcher needs trained parameters");
      std::vector<QuerySet> coop;
      for (const auto& set : frame.coop) coop.push_back(make_query_set(set));
      CaaOptions o = options;
      o.tau = spec.tau;
      out = caa_match(*params, make_query_set(frame.ego), coop, o);
      break;
    }
  }
  return out;
}

FrameEvaluation evaluate_frame(const MatcherSpec& spec, const CaaParams* params, const CaaOptions& options,
                               const CooperativeFrame& frame, const FusionOptions& fusion, double match_radius) {
  const std::vector<MatchResult> matches = run_matcher(spec, params, options, frame);
  FrameEvaluation e;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    e.association = e.association + association_metrics(matches[i], frame.gt_pairs[i]);
  }
  const std::vector<Detection> detections = fuse(frame.ego, frame.coop, matches, fusion);
  const RangeBuckets all{{0.0, std::numeric_limits<double>::infinity()}};
  const BucketDetectionMetrics m = detection_metrics(detections, frame.gt_objects, all, match_radius).front();
  e.n_gt = m.n_gt;
  e.matched_gt = m.matched;
  e.duplicates = m.duplicates;
  e.detections = static_cast<long>(detections.size());
  return e;
}

FrameEvaluation operator+(const FrameEvaluation& a, const FrameEvaluation& b) {
  FrameEvaluation e;
  e.association = a.association + b.association;
  e.n_gt = a.n_gt + b.n_gt;
  e.matched_gt = a.matched_gt + b.matched_gt;
  e.duplicates = a.duplicates + b.duplicates;
  e.detections = a.detections + b.detections;
  return e;
}

// ---------------------------------------------------------------------------

std::uint64_t noise_seed_for(const SceneRecord& record) { return derive_seed(record.scene.seed, {0x5EED}); }

std::vector<SweepRow> noise_sweep(std::span<const SceneRecord> episodes, std::span<const MatcherSpec> matchers,
                                  const CaaParams* params, const SweepConfig& config) {
  require(!config.sigma_translation.empty() && !config.sigma_rotation.empty(), ErrorKind::InvalidArgument,
          "noise grids must be non-empty");
  require(!matchers.empty(), ErrorKind::InvalidArgument, "at least one matcher is required");
  require(config.threads >= 1, ErrorKind::InvalidArgument, "threads must be ≥ 1");
  std::vector<double> st = config.sigma_translation;
  std::vector<double> sr = config.sigma_rotation;
  std::sort(st.begin(), st.end());
  std::sort(sr.begin(), sr.end());
  for (double v : st) require(v >= 0.0, ErrorKind::InvalidArgument, "noise sigmas must be non-negative");
  for (double v : sr) require(v >= 0.0, ErrorKind::InvalidArgument, "noise sigmas must be non-negative");
  for (const MatcherSpec& m : matchers) {
    require(m.kind != MatcherKind::Caa || params != nullptr, ErrorKind::InvalidArgument,
            "CAA matcher needs trained parameters");
  }

  const std::size_t n_points = st.size() * sr.size();
  std::vector<std::vector<FrameEvaluation>> results(n_points, std::vector<FrameEvaluation>(matchers.size()));
  std::vector<std::exception_ptr> errors(n_points);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t p = next++; p < n_points; p = next++) {
      try {
        const NoiseSpec noise{st[p / sr.size()], sr[p % sr.size()]};
        for (const SceneRecord& ep : episodes) {
          const CooperativeFrame frame = make_frame(ep, noise, noise_seed_for(ep), config.gt_radius);
          for (std::size_t m = 0; m < matchers.size(); ++m) {
            results[p][m] = results[p][m] + evaluate_frame(matchers[m], params, config.caa, frame, config.fusion,
                                                           config.match_radius);
          }
        }
      } catch (...) {
        errors[p] = std::current_exception();
      }
    }
  };
  const int n_threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(config.threads), n_points));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<SweepRow> rows;
  for (std::size_t p = 0; p < n_points; ++p) {
    for (std::size_t m = 0; m < matchers.size(); ++m) {
      const FrameEvaluation& e = results[p][m];
      SweepRow r;
      r.matcher = matchers[m].name;
      r.sigma_t = st[p / sr.size()];
      r.sigma_r = sr[p % sr.size()];
      if (matchers[m].kind == MatcherKind::Caa) r.tau = matchers[m].tau;
      r.association = e.association;
      r.duplicate_rate = ratio_or(e.duplicates, e.n_gt, 0.0);
      r.recall = ratio_or(e.matched_gt, e.n_gt, 1.0);
      r.frames = static_cast<int>(episodes.size());
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------

void LiftComparisonConfig::validate() const {
  agent.validate();
  require(agent.vantage == Vantage::HighVantage, ErrorKind::InvalidArgument,
          "lift comparison needs a high-vantage agent");
  require(sigma_height >= 0.0 && sigma_depth_base >= 0.0 && sigma_depth_per_meter >= 0.0,
          ErrorKind::InvalidArgument, "noise levels must be non-negative");
  require(min_height <= max_height && max_height < agent.camera.height(), ErrorKind::InvalidArgument,
          "object heights must lie below the camera");
  require(points_per_seed >= 1, ErrorKind::InvalidArgument, "points_per_seed must be positive");
  buckets.validate();
  require(buckets.edges.front() >= 0.0 && std::isfinite(buckets.edges.back()), ErrorKind::InvalidArgument,
          "lift buckets must be finite and non-negative");
}

AgentSpec default_drone() {
  AgentSpec a;
  a.id = 2;
  a.vantage = Vantage::HighVantage;
  a.height = 25.0;
  a.pitch_deg = 45.0;
  a.max_range = 250.0;
  a.fov_deg = 65.0;
  a.detect_prob = 1.0;
  return a;
}

std::vector<LiftBucketRow> strategy_comparison(const LiftComparisonConfig& config,
                                               std::span<const std::uint64_t> seeds) {
  config.validate();
  require(!seeds.empty(), ErrorKind::InvalidArgument, "at least one seed is required");
  const CameraModel& cam = config.agent.camera;
  const Vec3 center = cam.center();
  const Vec3 forward = cam.forward();
  const double heading = std::atan2(forward.y(), forward.x());
  const double lo = config.buckets.edges.front();
  const double hi = config.buckets.edges.back();
  const std::size_t n = config.buckets.count();
  // Index 2k is HeightDerived, 2k+1 DirectDepth.
  std::vector<long> count(2 * n, 0);
  std::vector<double> sum(2 * n, 0.0), squared(2 * n, 0.0);
  constexpr int kMaxAttempts = 1000;

  for (std::uint64_t seed : seeds) {
    Rng rng(derive_seed(seed, {0x11F7}));
    for (int i = 0; i < config.points_per_seed; ++i) {
      Vec3 point;
      bool visible = false;
      for (int attempt = 0; attempt < kMaxAttempts && !visible; ++attempt) {
        const double r = uniform(rng, lo, hi);
        const double azimuth = heading + uniform(rng, -config.agent.fov_half_angle, config.agent.fov_half_angle);
        point = Vec3(center.x() + r * std::cos(azimuth), center.y() + r * std::sin(azimuth),
                     uniform(rng, config.min_height, config.max_height));
        const Vec3 offset = point - center;
        visible = offset.dot(forward) > 0.0 &&
                  std::acos(std::clamp(forward.dot(offset) / offset.norm(), -1.0, 1.0)) <= config.agent.fov_half_angle;
      }
      require(visible, ErrorKind::InvalidArgument, "the agent sees no point in the requested range span");
      const PixelProjection px = project_point(cam, point);
      const double range = (point - center).norm();
      PixelProposal proposal;
      proposal.u = px.u;
      proposal.v = px.v;
      proposal.predicted_global_height = point.z() + config.sigma_height * standard_normal(rng);
      proposal.predicted_depth =
          px.depth + (config.sigma_depth_base + config.sigma_depth_per_meter * range) * standard_normal(rng);
      const int k = config.buckets.index_of(std::hypot(point.x() - center.x(), point.y() - center.y()));
      if (k < 0) continue;
      const LiftStrategy strategies[2] = {LiftStrategy::HeightDerived, LiftStrategy::DirectDepth};
      for (std::size_t s = 0; s < 2; ++s) {
        const double err = (lift_proposal(cam, proposal, strategies[s], RigidTransform()) - point).norm();
        const std::size_t slot = 2 * static_cast<std::size_t>(k) + s;
        ++count[slot];
        sum[slot] += err;
        squared[slot] += err * err;
      }
    }
  }

  std::vector<LiftBucketRow> rows;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t s = 0; s < 2; ++s) {
      const std::size_t slot = 2 * k + s;
      LiftBucketRow r;
      r.lo = config.buckets.edges[k];
      r.hi = config.buckets.edges[k + 1];
      r.strategy = s == 0 ? LiftStrategy::HeightDerived : LiftStrategy::DirectDepth;
      r.count = count[slot];
      if (count[slot] > 0) {
        r.mean_error = sum[slot] / static_cast<double>(count[slot]);
        r.rmse = std::sqrt(squared[slot] / static_cast<double>(count[slot]));
      }
      rows.push_back(r);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------

void CostModelConfig::validate() const {
  require(dense.range > 0.0 && dense.cell_size > 0.0 && dense.channels > 0 && dense.bytes_per_value > 0,
          ErrorKind::InvalidArgument, "dense cost parameters must be positive");
  require(sparse.n_queries > 0 && sparse.bytes_per_query > 0, ErrorKind::InvalidArgument,
          "sparse cost parameters must be positive");
  require(rate_hz > 0.0, ErrorKind::InvalidArgument, "rate must be positive");
}

CostReport cost_report(const CostModelConfig& config) {
  config.validate();
  CostReport r;
  const double cells = 2.0 * config.dense.range / config.dense.cell_size;
  r.dense_bps = cells * cells * config.dense.channels * config.dense.bytes_per_value * config.rate_hz;
  r.sparse_bps = static_cast<double>(config.sparse.n_queries) * config.sparse.bytes_per_query * config.rate_hz;
  r.ratio = r.dense_bps / r.sparse_bps;
  return r;
}

// ---------------------------------------------------------------------------

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "matcher,sigma_t,sigma_r,tau,true_positive,false_positive,false_negative,precision,recall,f1,"
         "duplicate_rate,detection_recall,frames\n";
  for (const SweepRow& r : rows) {
    out << r.matcher << ',' << text::fixed(r.sigma_t, 3) << ',' << text::fixed(r.sigma_r, 3) << ','
        << (r.tau ? text::fixed(*r.tau, 3) : std::string()) << ',' << r.association.true_positive << ','
        << r.association.false_positive << ',' << r.association.false_negative << ','
        << text::fixed(r.association.precision) << ',' << text::fixed(r.association.recall) << ','
        << text::fixed(r.association.f1) << ',' << text::fixed(r.duplicate_rate) << ',' << text::fixed(r.recall)
        << ',' << r.frames << '\n';
  }
}

void write_sweep_plot_data(std::ostream& out, std::span<const SweepRow> rows) {
  out << "x,y,series\n";
  for (const SweepRow& r : rows) {
    out << text::fixed(r.sigma_t, 3) << ',' << text::fixed(r.association.f1) << ',' << r.matcher
        << " r=" << text::fixed(r.sigma_r, 1) << '\n';
  }
}

void write_lift_csv(std::ostream& out, std::span<const LiftBucketRow> rows) {
  out << "range_lo,range_hi,strategy,count,mean_error,rmse\n";
  for (const LiftBucketRow& r : rows) {
    out << text::fixed(r.lo, 1) << ',' << text::fixed(r.hi, 1) << ',' << to_string(r.strategy) << ',' << r.count
        << ',' << text::fixed(r.mean_error) << ',' << text::fixed(r.rmse) << '\n';
  }
}

void write_lift_plot_data(std::ostream& out, std::span<const LiftBucketRow> rows) {
  out << "x,y,series\n";
  for (const LiftBucketRow& r : rows) {
    out << text::fixed(0.5 * (r.lo + r.hi), 1) << ',' << text::fixed(r.mean_error) << ',' << to_string(r.strategy)
        << '\n';
  }
}

}  // namespace coop
