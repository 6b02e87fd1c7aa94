#include "detcal/matching.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <tuple>

#include "detcal/error.hpp"

namespace detcal {

std::string to_string(const ImageId &id) {
  if (const auto *n = std::get_if<std::int64_t>(&id))
    return std::to_string(*n);
  return std::get<std::string>(id);
}

SizeClass size_class_for_area(double area) noexcept {
  constexpr double small_max = 32.0 * 32.0;
  constexpr double medium_max = 96.0 * 96.0;
  if (area < small_max)
    return SizeClass::Small;
  if (area < medium_max)
    return SizeClass::Medium;
  return SizeClass::Large;
}

const char *to_string(SizeClass c) noexcept {
  switch (c) {
  case SizeClass::Small:
    return "small";
  case SizeClass::Medium:
    return "medium";
  case SizeClass::Large:
    return "large";
  }
  return "small";
}

MatchConfig MatchConfig::for_link(const LinkSpec &link, double score_threshold) {
  MatchConfig cfg;
  cfg.link = link;
  cfg.score_threshold = score_threshold;
  cfg.match_iou = link.kind() == LinkSpec::Kind::Threshold ? link.beta() : kMatchFloor;
  return cfg;
}

void MatchConfig::validate() const {
  if (!(match_iou > 0.0 && match_iou <= 1.0))
    throw ValidationError("matching threshold must lie in (0, 1], got " +
                          std::to_string(match_iou));
  if (!(score_threshold >= 0.0 && score_threshold < 1.0))
    throw ValidationError("score threshold must lie in [0, 1), got " +
                          std::to_string(score_threshold));
}

namespace {

using GroupKey = std::pair<ImageId, CategoryId>;

struct Group {
  std::vector<std::size_t> dets;
  std::vector<std::size_t> gts;
};

double similarity_of(Similarity kind, const Box &a, const Box &b) {
  return kind == Similarity::IoU ? iou(a, b) : dice(a, b);
}

} // namespace

std::vector<MatchedSample> match_detections(const std::vector<Detection> &dets,
                                            const std::vector<GroundTruthBox> &gts,
                                            const MatchConfig &cfg) {
  cfg.validate();

  std::map<GroupKey, Group> groups;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto &d = dets[i];
    if (cfg.categories && !cfg.categories->contains(d.category_id)) {
      std::ostringstream msg;
      msg << "detection " << i << " has category " << d.category_id
          << " which is not in the category vocabulary";
      throw ValidationError(msg.str());
    }
    if (d.score < cfg.score_threshold)
      continue;
    groups[{d.image_id, d.category_id}].dets.push_back(i);
  }
  for (std::size_t j = 0; j < gts.size(); ++j) {
    auto it = groups.find({gts[j].image_id, gts[j].category_id});
    if (it != groups.end())
      it->second.gts.push_back(j);
  }

  std::vector<MatchedSample> out;
  out.reserve(dets.size());
  for (auto &[key, group] : groups) {
    std::stable_sort(group.dets.begin(), group.dets.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    std::vector<bool> taken(group.gts.size(), false);

    for (std::size_t di : group.dets) {
      const auto &d = dets[di];
      double best = -1.0;
      std::ptrdiff_t best_gt = -1;
      double best_ignore = -1.0;
      for (std::size_t g = 0; g < group.gts.size(); ++g) {
        const auto &gt = gts[group.gts[g]];
        const double sim = similarity_of(cfg.similarity, d.box, gt.box);
        if (sim < cfg.match_iou)
          continue;
        if (gt.ignore) {
          best_ignore = std::max(best_ignore, sim);
        } else if (!taken[g] && sim > best) {
          best = sim;
          best_gt = static_cast<std::ptrdiff_t>(g);
        }
      }

      MatchedSample s;
      s.score = d.score;
      s.category_id = d.category_id;
      s.image_id = d.image_id;
      if (best_gt >= 0) {
        taken[static_cast<std::size_t>(best_gt)] = true;
        s.matched = true;
        s.similarity = best;
        s.size_class = size_class_for_area(area(gts[group.gts[best_gt]].box));
      } else if (best_ignore >= 0.0) {
        continue;
      } else {
        s.similarity = 0.0;
        s.size_class = size_class_for_area(area(d.box));
      }
      s.correctness = cfg.link.apply(s.similarity);
      out.push_back(std::move(s));
    }
  }
  // Groups are visited in key order and each group in descending score
  // order, so `out` is already canonical.
  return out;
}

std::map<SizeClass, std::vector<MatchedSample>>
partition_by_size(const std::vector<MatchedSample> &samples) {
  std::map<SizeClass, std::vector<MatchedSample>> parts;
  for (auto c : kSizeClasses)
    parts[c];
  for (const auto &s : samples)
    parts[s.size_class].push_back(s);
  return parts;
}

} // namespace detcal
