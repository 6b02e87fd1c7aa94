#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "detcal/matching.hpp"

namespace detcal {

struct LoadedDetections {
  std::vector<Detection> detections;
  std::size_t clamped_scores = 0; ///< scores moved into [0, 1]
};

struct LoadedGroundTruth {
  std::vector<GroundTruthBox> boxes;
  std::map<CategoryId, std::string> categories;
  std::set<ImageId> images;
};

/// COCO results: a JSON array of {image_id, category_id, bbox: [x,y,w,h], score}.
LoadedDetections parse_detections(const std::string &text);
LoadedDetections load_detections(const std::filesystem::path &path);

/// COCO annotation subset: {images: [{id}], annotations: [{image_id,
/// category_id, bbox, iscrowd}], categories: [{id, name}]}.
/// iscrowd = 1 sets the ignore flag.
LoadedGroundTruth parse_ground_truth(const std::string &text);
LoadedGroundTruth load_ground_truth(const std::filesystem::path &path);

struct DatasetBundle {
  std::vector<Detection> detections;
  std::vector<GroundTruthBox> ground_truth;
  std::map<CategoryId, std::string> categories;
  std::size_t clamped_scores = 0;
};

/// Loads both files and checks that every detection references a known
/// image and category.
DatasetBundle load_bundle(const std::filesystem::path &detections,
                          const std::filesystem::path &ground_truth);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, const std::string &text);

} // namespace detcal
