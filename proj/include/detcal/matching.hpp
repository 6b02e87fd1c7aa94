#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "detcal/geometry.hpp"
#include "detcal/links.hpp"

namespace detcal {

/// Image identifiers are opaque: COCO files use integers, other tools use
/// strings. Integer 1 and string "1" are distinct ids.
using ImageId = std::variant<std::int64_t, std::string>;
using CategoryId = std::int64_t;

std::string to_string(const ImageId &id);

struct Detection {
  ImageId image_id;
  CategoryId category_id = 0;
  Box box;
  double score = 0.0;
};

struct GroundTruthBox {
  ImageId image_id;
  CategoryId category_id = 0;
  Box box;
  bool ignore = false;
};

enum class SizeClass { Small, Medium, Large };

inline constexpr std::array<SizeClass, 3> kSizeClasses{SizeClass::Small, SizeClass::Medium,
                                                       SizeClass::Large};

/// COCO size partition: area < 32^2 small, < 96^2 medium, otherwise large.
SizeClass size_class_for_area(double area) noexcept;
const char *to_string(SizeClass c) noexcept;

enum class Similarity { IoU, Dice };

struct MatchedSample {
  double score = 0.0;
  double similarity = 0.0; ///< 0 when unmatched
  double correctness = 0.0; ///< psi(similarity)
  CategoryId category_id = 0;
  ImageId image_id;
  bool matched = false;
  SizeClass size_class = SizeClass::Small;
};

/// Smallest matching threshold used for continuous links: any positive
/// overlap may match.
inline constexpr double kMatchFloor = 1e-6;

struct MatchConfig {
  double match_iou = 0.5;       ///< tau in (0, 1]
  double score_threshold = 0.5; ///< gamma in [0, 1)
  LinkSpec link = LinkSpec::threshold(0.5);
  Similarity similarity = Similarity::IoU;
  /// When set, every detection category must belong to this vocabulary.
  std::optional<std::set<CategoryId>> categories;

  /// Matching threshold implied by a link: beta for Threshold, the floor
  /// for continuous links.
  static MatchConfig for_link(const LinkSpec &link, double score_threshold);

  void validate() const;
};

/// Greedy COCO-style matching per (image, category) group.
///
/// Detections below the score threshold are dropped. Within a group,
/// detections are visited in descending score order (ties by input order)
/// and take the free ground-truth box of highest similarity, provided it is
/// at least `match_iou`. Detections that can only match an ignore-flagged
/// box are removed from the output; ignore-flagged boxes may absorb any
/// number of detections, as COCO crowd regions do.
///
/// Output is sorted by (image, category, descending score, input order).
std::vector<MatchedSample> match_detections(const std::vector<Detection> &dets,
                                            const std::vector<GroundTruthBox> &gts,
                                            const MatchConfig &cfg);

std::map<SizeClass, std::vector<MatchedSample>>
partition_by_size(const std::vector<MatchedSample> &samples);

} // namespace detcal
