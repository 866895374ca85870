#include "coop/scene_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "coop/error.hpp"
#include "coop/text.hpp"

namespace coop {

namespace {

using text::exact;

void put_transform(std::string& line, const RigidTransform& t) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) line += ' ' + exact(t.rotation()(i, j));
  for (int i = 0; i < 3; ++i) line += ' ' + exact(t.translation()(i));
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next(std::string_view expected_tag) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      auto tokens = text::split_whitespace(line);
      if (tokens.empty() || tokens.front().starts_with('#')) continue;
      if (tokens.front() != expected_tag) {
        bad("expected " + std::string(expected_tag) + ", found " + tokens.front());
      }
      return tokens;
    }
    bad("unexpected end of file, expected " + std::string(expected_tag));
  }

  [[noreturn]] void bad(const std::string& what) const {
    fail(ErrorKind::IoFailure, "scene file line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

struct Fields {
  const std::vector<std::string>& tokens;
  const LineReader& reader;
  std::size_t pos = 1;

  double real() {
    check();
    try {
      return text::parse_double(tokens[pos++]);
    } catch (const Error& e) {
      reader.bad(e.what());
    }
  }
  long long integer() {
    check();
    try {
      return text::parse_int(tokens[pos++]);
    } catch (const Error& e) {
      reader.bad(e.what());
    }
  }
  const std::string& word() {
    check();
    return tokens[pos++];
  }
  RigidTransform transform() {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = real();
    Vec3 t;
    for (int i = 0; i < 3; ++i) t(i) = real();
    try {
      return RigidTransform(r, t);
    } catch (const Error& e) {
      reader.bad(e.what());
    }
  }
  void done() const {
    if (pos != tokens.size()) reader.bad("trailing fields on " + tokens.front() + " record");
  }
  void check() const {
    if (pos >= tokens.size()) reader.bad("too few fields on " + tokens.front() + " record");
  }
};

}  // namespace

void write_scene(std::ostream& out, const SceneRecord& record) {
  const Scene& s = record.scene;
  require(record.queries.size() == s.agents.size(), ErrorKind::IndexMismatch,
          "scene record needs one query list per agent");
  out << "COOPSCENE 1\n";
  out << "SCENE " << s.seed << ' ' << exact(s.extent) << ' ' << s.descriptors.dim << ' '
      << s.descriptors.n_classes << ' ' << exact(s.descriptors.class_weight) << ' '
      << exact(s.descriptors.identity_weight) << ' ' << exact(s.descriptors.noise_sigma) << '\n';
  out << "OBJECTS " << s.objects.size() << '\n';
  for (const SceneObject& o : s.objects) {
    out << "OBJ " << o.id;
    for (int i = 0; i < 3; ++i) out << ' ' << exact(o.center_glb(i));
    for (int i = 0; i < 3; ++i) out << ' ' << exact(o.size(i));
    out << ' ' << o.class_id << '\n';
  }
  out << "AGENTS " << s.agents.size() << '\n';
  for (const AgentConfig& a : s.agents) {
    std::string line = "AGENT " + std::to_string(a.agent_id) + ' ' + std::string(to_string(a.vantage));
    for (double v : {a.max_range, a.fov_half_angle, a.detect_prob_base, a.obs_noise_base,
                     a.obs_noise_per_meter}) {
      line += ' ' + exact(v);
    }
    put_transform(line, a.pose_glb);
    for (double v : to_record(a.camera)) line += ' ' + exact(v);
    out << line << '\n';
  }
  std::size_t total = 0;
  for (const auto& qs : record.queries) total += qs.size();
  out << "QUERIES " << total << '\n';
  for (const auto& qs : record.queries) {
    for (const Query& q : qs) {
      require(q.descriptor.size() == s.descriptors.dim, ErrorKind::DimensionMismatch,
              "query descriptor dimension differs from scene descriptor dim");
      std::string line = "Q " + std::to_string(q.owner_agent) + ' ' +
                         std::to_string(q.gt_object_id.value_or(-1)) + ' ' + exact(q.confidence);
      for (int i = 0; i < 3; ++i) line += ' ' + exact(q.position(i));
      for (int i = 0; i < 3; ++i) line += ' ' + exact(q.size(i));
      for (int i = 0; i < q.descriptor.size(); ++i) line += ' ' + exact(q.descriptor(i));
      out << line << '\n';
    }
  }
  out << "END\n";
}

SceneRecord read_scene(std::istream& in) {
  LineReader reader(in);
  SceneRecord record;
  Scene& s = record.scene;
  {
    const auto t = reader.next("COOPSCENE");
    if (t.size() != 2 || t[1] != "1") reader.bad("unsupported scene file version");
  }
  {
    const auto t = reader.next("SCENE");
    Fields f{t, reader};
    const std::string& seed = f.word();
    const auto [ptr, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), s.seed);
    if (ec != std::errc() || ptr != seed.data() + seed.size()) reader.bad("bad scene seed " + seed);
    s.extent = f.real();
    s.descriptors.dim = static_cast<int>(f.integer());
    s.descriptors.n_classes = static_cast<int>(f.integer());
    s.descriptors.class_weight = f.real();
    s.descriptors.identity_weight = f.real();
    s.descriptors.noise_sigma = f.real();
    f.done();
  }
  const auto count = [&](std::string_view tag) {
    const auto t = reader.next(tag);
    Fields f{t, reader};
    const long long n = f.integer();
    f.done();
    if (n < 0) reader.bad("negative record count");
    return static_cast<std::size_t>(n);
  };
  const std::size_t n_objects = count("OBJECTS");
  for (std::size_t i = 0; i < n_objects; ++i) {
    const auto t = reader.next("OBJ");
    Fields f{t, reader};
    SceneObject o;
    o.id = static_cast<int>(f.integer());
    for (int k = 0; k < 3; ++k) o.center_glb(k) = f.real();
    for (int k = 0; k < 3; ++k) o.size(k) = f.real();
    o.class_id = static_cast<int>(f.integer());
    f.done();
    s.objects.push_back(o);
  }
  const std::size_t n_agents = count("AGENTS");
  for (std::size_t i = 0; i < n_agents; ++i) {
    const auto t = reader.next("AGENT");
    Fields f{t, reader};
    AgentConfig a;
    a.agent_id = static_cast<int>(f.integer());
    const std::string& vantage = f.word();
    if (vantage != "high" && vantage != "ground") reader.bad("unknown vantage " + vantage);
    a.vantage = vantage == "high" ? Vantage::HighVantage : Vantage::GroundLevel;
    a.max_range = f.real();
    a.fov_half_angle = f.real();
    a.detect_prob_base = f.real();
    a.obs_noise_base = f.real();
    a.obs_noise_per_meter = f.real();
    a.pose_glb = f.transform();
    a.camera.fx = f.real();
    a.camera.fy = f.real();
    a.camera.cx = f.real();
    a.camera.cy = f.real();
    a.camera.pose_cam2glb = f.transform();
    f.done();
    s.agents.push_back(a);
  }
  record.queries.resize(s.agents.size());
  const std::size_t n_queries = count("QUERIES");
  for (std::size_t i = 0; i < n_queries; ++i) {
    const auto t = reader.next("Q");
    Fields f{t, reader};
    Query q;
    q.owner_agent = static_cast<int>(f.integer());
    const long long gt = f.integer();
    if (gt >= 0) q.gt_object_id = static_cast<int>(gt);
    q.confidence = f.real();
    for (int k = 0; k < 3; ++k) q.position(k) = f.real();
    for (int k = 0; k < 3; ++k) q.size(k) = f.real();
    q.descriptor.resize(s.descriptors.dim);
    for (int k = 0; k < s.descriptors.dim; ++k) q.descriptor(k) = f.real();
    f.done();
    const auto owner = std::find_if(s.agents.begin(), s.agents.end(),
                                    [&](const AgentConfig& a) { return a.agent_id == q.owner_agent; });
    if (owner == s.agents.end()) reader.bad("query owner is not a listed agent");
    record.queries[static_cast<std::size_t>(owner - s.agents.begin())].push_back(std::move(q));
  }
  reader.next("END");
  return record;
}

void save_scene(const std::filesystem::path& path, const SceneRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
  write_scene(out, record);
  if (!out) fail(ErrorKind::IoFailure, "failed writing " + path.string());
}

SceneRecord load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open " + path.string());
  return read_scene(in);
}

std::vector<std::filesystem::path> list_scene_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    fail(ErrorKind::IoFailure, "scene directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorKind::IoFailure, "no scene files in " + dir.string());
  return files;
}

}  // namespace coop
