#include "coop/fusion.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "coop/error.hpp"
#include "coop/text.hpp"

namespace coop {

namespace {

struct Member {
  const Query* query;
  DetectionSource source;
};

Detection combine(std::span<const Member> members) {
  Detection d;
  double weight = 0.0;
  std::vector<double> confidences;
  for (const Member& m : members) weight += m.query->confidence;
  for (const Member& m : members) {
    // Zero total confidence falls back to a plain mean.
    const double w = weight > 0.0 ? m.query->confidence / weight : 1.0 / static_cast<double>(members.size());
    d.position += w * m.query->position;
    d.size += w * m.query->size;
    confidences.push_back(m.query->confidence);
    d.sources.push_back(m.source);
  }
  d.confidence = noisy_or(confidences);
  d.gt_object_id = members.front().query->gt_object_id;
  return d;
}

void check_query(const Query& q) {
  require(q.confidence >= 0.0 && q.confidence <= 1.0, ErrorKind::InvalidArgument,
          "query confidence must lie in [0, 1]");
}

}  // namespace

double noisy_or(std::span<const double> confidences) {
  if (confidences.size() == 1) return confidences[0];
  double miss = 1.0;
  for (double c : confidences) miss *= 1.0 - c;
  return std::clamp(1.0 - miss, 0.0, 1.0);
}

std::vector<Detection> fuse(std::span<const Query> ego, std::span<const std::vector<Query>> coop_sets,
                            std::span<const MatchResult> matches, const FusionOptions& options) {
  require(matches.size() == coop_sets.size(), ErrorKind::IndexMismatch,
          "expected one match result per cooperative set");
  require(options.merge_radius >= 0.0, ErrorKind::InvalidArgument, "merge radius must be non-negative");
  for (std::size_t i = 0; i < coop_sets.size(); ++i) {
    require(matches[i].is_partition(coop_sets[i].size(), ego.size()), ErrorKind::IndexMismatch,
            "match result " + std::to_string(i) + " does not partition its query sets");
  }
  for (const Query& q : ego) check_query(q);
  for (const auto& set : coop_sets)
    for (const Query& q : set) check_query(q);

  std::vector<std::vector<Member>> groups(ego.size());
  for (std::size_t x = 0; x < ego.size(); ++x) {
    groups[x].push_back({&ego[x], {ego[x].owner_agent, static_cast<int>(x)}});
  }
  for (std::size_t i = 0; i < coop_sets.size(); ++i) {
    for (const MatchPair& p : matches[i].pairs) {
      const Query& q = coop_sets[i][static_cast<std::size_t>(p.coop_index)];
      groups[static_cast<std::size_t>(p.ego_index)].push_back({&q, {q.owner_agent, p.coop_index}});
    }
  }

  // Unmatched cooperative queries: each joins the nearest cluster seeded by a
  // different set that does not yet hold a query from its own set.
  struct Cluster {
    std::vector<Member> members;
    std::vector<std::size_t> sets;
  };
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < coop_sets.size(); ++i) {
    for (int u : matches[i].unmatched_coop) {
      const Query& q = coop_sets[i][static_cast<std::size_t>(u)];
      const Member m{&q, {q.owner_agent, u}};
      Cluster* best = nullptr;
      double best_d = options.merge_radius;
      if (options.merge_radius > 0.0) {
        for (Cluster& c : clusters) {
          if (std::find(c.sets.begin(), c.sets.end(), i) != c.sets.end()) continue;
          const double d = (c.members.front().query->position - q.position).norm();
          if (d < best_d || (!best && d <= best_d)) {
            best_d = d;
            best = &c;
          }
        }
      }
      if (best) {
        best->members.push_back(m);
        best->sets.push_back(i);
      } else {
        clusters.push_back({{m}, {i}});
      }
    }
  }

  std::vector<Detection> out;
  out.reserve(groups.size() + clusters.size());
  for (const auto& g : groups) out.push_back(combine(g));
  for (const Cluster& c : clusters) out.push_back(combine(c.members));
  return out;
}

void write_detections(std::ostream& out, std::span<const Detection> detections) {
  for (const Detection& d : detections) {
    out << "DET";
    for (int k = 0; k < 3; ++k) out << ' ' << text::exact(d.position[k]);
    for (int k = 0; k < 3; ++k) out << ' ' << text::exact(d.size[k]);
    out << ' ' << text::exact(d.confidence) << ' ' << d.sources.size();
    for (const DetectionSource& s : d.sources) out << ' ' << s.agent_id << ':' << s.query_index;
    out << ' ';
    if (d.gt_object_id) {
      out << *d.gt_object_id;
    } else {
      out << '-';
    }
    out << '\n';
  }
}

}  // namespace coop
