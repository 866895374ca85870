#include "coop/config.hpp"

#include <fstream>
#include <sstream>

#include "coop/error.hpp"
#include "coop/random.hpp"
#include "coop/text.hpp"

namespace coop {

using Json = nlohmann::ordered_json;

namespace {

Json agent_json(const AgentSpec& a) {
  return Json{{"id", a.id},
              {"vantage", std::string(to_string(a.vantage))},
              {"x", a.x},
              {"y", a.y},
              {"height", a.height},
              {"yaw_deg", a.yaw_deg},
              {"pitch_deg", a.pitch_deg},
              {"max_range", a.max_range},
              {"fov_deg", a.fov_deg},
              {"detect_prob", a.detect_prob},
              {"noise_base", a.noise_base},
              {"noise_per_meter", a.noise_per_meter},
              {"fx", a.fx},
              {"fy", a.fy},
              {"cx", a.cx},
              {"cy", a.cy}};
}

Json noise_json(const NoiseSpec& n) { return Json{{"sigma_t", n.sigma_translation}, {"sigma_r", n.sigma_rotation}}; }

// Copies `user` into `base`, refusing keys that `base` does not have. Arrays
// and scalars are replaced wholesale; agent entries are overlaid on the
// default agent so partial agent objects are allowed.
void overlay(Json& base, const Json& user, const std::string& path) {
  if (!base.is_object()) {
    if (base.is_array() && !user.is_array()) fail(ErrorKind::ConfigInvalid, "key '" + path + "' expects an array");
    base = user;
    return;
  }
  if (!user.is_object()) fail(ErrorKind::ConfigInvalid, "key '" + path + "' expects an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) fail(ErrorKind::ConfigInvalid, "unknown config key '" + key + "'");
    overlay(base[it.key()], it.value(), key);
  }
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& path) {
  const std::string full = path.empty() ? key : path + "." + key;
  if (!j.contains(key)) fail(ErrorKind::ConfigInvalid, "missing config key '" + full + "'");
  const Json& v = j.at(key);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) fail(ErrorKind::ConfigInvalid, "key '" + full + "' expects a string");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) fail(ErrorKind::ConfigInvalid, "key '" + full + "' expects an integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) fail(ErrorKind::ConfigInvalid, "key '" + full + "' expects a number");
  }
  try {
    out = v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ConfigInvalid, "key '" + full + "': " + e.what());
  }
}

AgentSpec agent_from(const Json& user, const std::string& path) {
  Json j = agent_json(AgentSpec{});
  overlay(j, user, path);
  AgentSpec a;
  std::string vantage;
  read(j, "id", a.id, path);
  read(j, "vantage", vantage, path);
  if (vantage == "high") {
    a.vantage = Vantage::HighVantage;
  } else if (vantage == "ground") {
    a.vantage = Vantage::GroundLevel;
  } else {
    fail(ErrorKind::ConfigInvalid, "key '" + path + ".vantage' must be \"high\" or \"ground\"");
  }
  read(j, "x", a.x, path);
  read(j, "y", a.y, path);
  read(j, "height", a.height, path);
  read(j, "yaw_deg", a.yaw_deg, path);
  read(j, "pitch_deg", a.pitch_deg, path);
  read(j, "max_range", a.max_range, path);
  read(j, "fov_deg", a.fov_deg, path);
  read(j, "detect_prob", a.detect_prob, path);
  read(j, "noise_base", a.noise_base, path);
  read(j, "noise_per_meter", a.noise_per_meter, path);
  read(j, "fx", a.fx, path);
  read(j, "fy", a.fy, path);
  read(j, "cx", a.cx, path);
  read(j, "cy", a.cy, path);
  return a;
}

NoiseSpec noise_from(const Json& j, const std::string& path) {
  NoiseSpec n;
  read(j, "sigma_t", n.sigma_translation, path);
  read(j, "sigma_r", n.sigma_rotation, path);
  return n;
}

void check(bool ok, const std::string& message) {
  if (!ok) fail(ErrorKind::ConfigInvalid, message);
}

}  // namespace

CaaOptions MatcherConfig::caa_options() const {
  CaaOptions o;
  o.temperature = temperature;
  o.sinkhorn_iters = sinkhorn_iters;
  o.tau = tau;
  o.position_scale = position_scale;
  return o;
}

std::vector<MatcherSpec> MatcherConfig::specs() const {
  std::vector<MatcherSpec> out;
  for (const std::string& m : evaluate) out.push_back(parse_matcher(m, greedy_radius, hungarian_threshold, tau));
  return out;
}

LiftComparisonConfig LiftConfig::comparison() const {
  LiftComparisonConfig c;
  c.agent = build_agent(agent);
  c.sigma_height = sigma_height;
  c.sigma_depth_base = sigma_depth_base;
  c.sigma_depth_per_meter = sigma_depth_per_meter;
  c.min_height = min_height;
  c.max_height = max_height;
  c.points_per_seed = points_per_seed;
  c.buckets = buckets;
  return c;
}

ScenarioConfig RunConfig::scenario() const {
  ScenarioConfig s;
  s.n_objects = n_objects;
  s.extent = extent;
  s.descriptors = descriptors;
  for (const AgentSpec& a : agents) s.agents.push_back(build_agent(a));
  s.max_queries = max_queries;
  s.gt_radius = gt_radius;
  return s;
}

SweepConfig RunConfig::sweep() const {
  SweepConfig s;
  s.sigma_translation = sweep_sigma_t;
  s.sigma_rotation = sweep_sigma_r;
  s.match_radius = eval.match_radius;
  s.gt_radius = gt_radius;
  s.fusion.merge_radius = eval.merge_radius;
  s.caa = matcher.caa_options();
  s.threads = threads;
  return s;
}

void RunConfig::validate() const {
  check(threads >= 1, "threads must be ≥ 1");
  check(train_scenes >= 1, "scene.train_scenes must be ≥ 1");
  check(eval_scenes >= 1, "scene.eval_scenes must be ≥ 1");
  check(matcher.dim == descriptors.dim, "matcher.dim must equal scene.descriptor.dim");
  check(matcher.layers >= 0, "matcher.layers must be ≥ 0");
  check(matcher.heads >= 1 && matcher.dim % matcher.heads == 0, "matcher.heads must divide matcher.dim");
  check(matcher.temperature > 0.0, "matcher.temperature must be positive");
  check(matcher.sinkhorn_iters >= 1, "matcher.sinkhorn_iters must be ≥ 1");
  check(matcher.tau > 0.0 && matcher.tau < 1.0, "matcher.tau must lie in (0, 1)");
  check(matcher.position_scale > 0.0, "matcher.position_scale must be positive");
  check(!matcher.evaluate.empty(), "matcher.evaluate must list at least one matcher");
  check(train.steps >= 1, "train.steps must be ≥ 1");
  check(train.learning_rate >= 0.0, "train.learning_rate must be non-negative");
  check(train.noise.sigma_translation >= 0.0 && train.noise.sigma_rotation >= 0.0,
        "train.noise sigmas must be non-negative");
  check(train.nll_weight >= 0.0 && train.bce_weight >= 0.0, "train loss weights must be non-negative");
  check(eval.noise.sigma_translation >= 0.0 && eval.noise.sigma_rotation >= 0.0,
        "eval.noise sigmas must be non-negative");
  check(eval.match_radius > 0.0, "eval.match_radius must be positive");
  check(eval.merge_radius >= 0.0, "eval.merge_radius must be non-negative");
  check(!sweep_sigma_t.empty() && !sweep_sigma_r.empty(), "sweep grids must be non-empty");
  for (double v : sweep_sigma_t) check(v >= 0.0, "sweep.sigma_t values must be non-negative");
  for (double v : sweep_sigma_r) check(v >= 0.0, "sweep.sigma_r values must be non-negative");
  check(lift.seeds >= 1, "lift.seeds must be ≥ 1");
  try {
    scenario().validate();
    (void)matcher.specs();
    eval.buckets.validate();
    lift.comparison().validate();
    cost.validate();
  } catch (const Error& e) {
    fail(ErrorKind::ConfigInvalid, e.what());
  }
}

Json to_json(const RunConfig& c) {
  Json agents = Json::array();
  for (const AgentSpec& a : c.agents) agents.push_back(agent_json(a));
  return Json{
      {"seed", c.seed},
      {"threads", c.threads},
      {"scene",
       {{"n_objects", c.n_objects},
        {"extent", c.extent},
        {"max_queries", c.max_queries},
        {"gt_radius", c.gt_radius},
        {"train_scenes", c.train_scenes},
        {"eval_scenes", c.eval_scenes},
        {"descriptor",
         {{"dim", c.descriptors.dim},
          {"n_classes", c.descriptors.n_classes},
          {"class_weight", c.descriptors.class_weight},
          {"identity_weight", c.descriptors.identity_weight},
          {"noise_sigma", c.descriptors.noise_sigma}}},
        {"agents", agents}}},
      {"matcher",
       {{"evaluate", c.matcher.evaluate},
        {"greedy_radius", c.matcher.greedy_radius},
        {"hungarian_threshold", c.matcher.hungarian_threshold},
        {"tau", c.matcher.tau},
        {"temperature", c.matcher.temperature},
        {"sinkhorn_iters", c.matcher.sinkhorn_iters},
        {"layers", c.matcher.layers},
        {"dim", c.matcher.dim},
        {"heads", c.matcher.heads},
        {"position_scale", c.matcher.position_scale}}},
      {"train",
       {{"steps", c.train.steps},
        {"learning_rate", c.train.learning_rate},
        {"noise", noise_json(c.train.noise)},
        {"nll_weight", c.train.nll_weight},
        {"bce_weight", c.train.bce_weight}}},
      {"eval",
       {{"noise", noise_json(c.eval.noise)},
        {"match_radius", c.eval.match_radius},
        {"merge_radius", c.eval.merge_radius},
        {"buckets", c.eval.buckets.edges}}},
      {"sweep", {{"sigma_t", c.sweep_sigma_t}, {"sigma_r", c.sweep_sigma_r}}},
      {"lift",
       {{"agent", agent_json(c.lift.agent)},
        {"sigma_height", c.lift.sigma_height},
        {"sigma_depth_base", c.lift.sigma_depth_base},
        {"sigma_depth_per_meter", c.lift.sigma_depth_per_meter},
        {"min_height", c.lift.min_height},
        {"max_height", c.lift.max_height},
        {"points_per_seed", c.lift.points_per_seed},
        {"seeds", c.lift.seeds},
        {"buckets", c.lift.buckets.edges}}},
      {"cost",
       {{"dense",
         {{"range", c.cost.dense.range},
          {"cell_size", c.cost.dense.cell_size},
          {"channels", c.cost.dense.channels},
          {"bytes_per_value", c.cost.dense.bytes_per_value}}},
        {"sparse", {{"n_queries", c.cost.sparse.n_queries}, {"bytes_per_query", c.cost.sparse.bytes_per_query}}},
        {"rate_hz", c.cost.rate_hz}}},
      {"data", {{"scenes", c.data.scenes}, {"params", c.data.params}}},
  };
}

RunConfig config_from_json(const Json& user) {
  Json j = to_json(RunConfig{});
  Json input = user;
  if (input.is_object()) input.erase("command");
  overlay(j, input, "");

  RunConfig c;
  read(j, "seed", c.seed, "");
  read(j, "threads", c.threads, "");

  const Json& s = j["scene"];
  read(s, "n_objects", c.n_objects, "scene");
  read(s, "extent", c.extent, "scene");
  read(s, "max_queries", c.max_queries, "scene");
  read(s, "gt_radius", c.gt_radius, "scene");
  read(s, "train_scenes", c.train_scenes, "scene");
  read(s, "eval_scenes", c.eval_scenes, "scene");
  const Json& d = s["descriptor"];
  read(d, "dim", c.descriptors.dim, "scene.descriptor");
  read(d, "n_classes", c.descriptors.n_classes, "scene.descriptor");
  read(d, "class_weight", c.descriptors.class_weight, "scene.descriptor");
  read(d, "identity_weight", c.descriptors.identity_weight, "scene.descriptor");
  read(d, "noise_sigma", c.descriptors.noise_sigma, "scene.descriptor");
  c.agents.clear();
  for (std::size_t i = 0; i < s["agents"].size(); ++i) {
    c.agents.push_back(agent_from(s["agents"][i], "scene.agents." + std::to_string(i)));
  }

  const Json& m = j["matcher"];
  read(m, "evaluate", c.matcher.evaluate, "matcher");
  read(m, "greedy_radius", c.matcher.greedy_radius, "matcher");
  read(m, "hungarian_threshold", c.matcher.hungarian_threshold, "matcher");
  read(m, "tau", c.matcher.tau, "matcher");
  read(m, "temperature", c.matcher.temperature, "matcher");
  read(m, "sinkhorn_iters", c.matcher.sinkhorn_iters, "matcher");
  read(m, "layers", c.matcher.layers, "matcher");
  read(m, "dim", c.matcher.dim, "matcher");
  read(m, "heads", c.matcher.heads, "matcher");
  read(m, "position_scale", c.matcher.position_scale, "matcher");

  const Json& t = j["train"];
  read(t, "steps", c.train.steps, "train");
  read(t, "learning_rate", c.train.learning_rate, "train");
  c.train.noise = noise_from(t["noise"], "train.noise");
  read(t, "nll_weight", c.train.nll_weight, "train");
  read(t, "bce_weight", c.train.bce_weight, "train");

  const Json& e = j["eval"];
  c.eval.noise = noise_from(e["noise"], "eval.noise");
  read(e, "match_radius", c.eval.match_radius, "eval");
  read(e, "merge_radius", c.eval.merge_radius, "eval");
  read(e, "buckets", c.eval.buckets.edges, "eval");

  read(j["sweep"], "sigma_t", c.sweep_sigma_t, "sweep");
  read(j["sweep"], "sigma_r", c.sweep_sigma_r, "sweep");

  const Json& l = j["lift"];
  c.lift.agent = agent_from(l["agent"], "lift.agent");
  read(l, "sigma_height", c.lift.sigma_height, "lift");
  read(l, "sigma_depth_base", c.lift.sigma_depth_base, "lift");
  read(l, "sigma_depth_per_meter", c.lift.sigma_depth_per_meter, "lift");
  read(l, "min_height", c.lift.min_height, "lift");
  read(l, "max_height", c.lift.max_height, "lift");
  read(l, "points_per_seed", c.lift.points_per_seed, "lift");
  read(l, "seeds", c.lift.seeds, "lift");
  read(l, "buckets", c.lift.buckets.edges, "lift");

  const Json& k = j["cost"];
  read(k["dense"], "range", c.cost.dense.range, "cost.dense");
  read(k["dense"], "cell_size", c.cost.dense.cell_size, "cost.dense");
  read(k["dense"], "channels", c.cost.dense.channels, "cost.dense");
  read(k["dense"], "bytes_per_value", c.cost.dense.bytes_per_value, "cost.dense");
  read(k["sparse"], "n_queries", c.cost.sparse.n_queries, "cost.sparse");
  read(k["sparse"], "bytes_per_query", c.cost.sparse.bytes_per_query, "cost.sparse");
  read(k, "rate_hz", c.cost.rate_hz, "cost");

  read(j["data"], "scenes", c.data.scenes, "data");
  read(j["data"], "params", c.data.params, "data");

  c.validate();
  return c;
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(ErrorKind::ConfigInvalid, "override '" + assignment + "' is not of the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  Json* node = &doc;
  std::stringstream segments(path);
  std::string segment;
  std::vector<std::string> parts;
  while (std::getline(segments, segment, '.')) parts.push_back(segment);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    if (node->is_array()) {
      long long idx = -1;
      try {
        idx = text::parse_int(p);
      } catch (const Error&) {
      }
      if (idx < 0 || static_cast<std::size_t>(idx) >= node->size()) {
        fail(ErrorKind::ConfigInvalid, "override path '" + path + "': bad array index '" + p + "'");
      }
      node = &(*node)[static_cast<std::size_t>(idx)];
    } else if (node->is_object() && node->contains(p)) {
      node = &(*node)[p];
    } else {
      fail(ErrorKind::ConfigInvalid, "unknown config key '" + path + "'");
    }
  }
  *node = value;
}

RunConfig load_config(const std::optional<std::filesystem::path>& path, std::span<const std::string> overrides) {
  Json doc = to_json(RunConfig{});
  if (path) {
    std::ifstream in(*path);
    if (!in) fail(ErrorKind::IoFailure, "cannot open config " + path->string());
    Json user = Json::parse(in, nullptr, false);
    if (user.is_discarded()) fail(ErrorKind::ConfigInvalid, "config " + path->string() + " is not valid JSON");
    if (user.is_object()) user.erase("command");
    overlay(doc, user, "");
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

std::uint64_t train_scene_seed(const RunConfig& config, int index) {
  return derive_seed(config.seed, {0x7A, static_cast<std::uint64_t>(index)});
}

std::uint64_t eval_scene_seed(const RunConfig& config, int index) {
  return derive_seed(config.seed, {0xE7, static_cast<std::uint64_t>(index)});
}

}  // namespace coop
