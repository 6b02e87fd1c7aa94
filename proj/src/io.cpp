#include "detcal/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "detcal/error.hpp"

namespace detcal {

using nlohmann::json;

namespace {

[[noreturn]] void record_error(const char *what, std::size_t index, const std::string &detail) {
  std::ostringstream msg;
  msg << what << " record " << index << ": " << detail;
  throw ValidationError(msg.str());
}

json parse_json(const std::string &text, const char *what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw ValidationError(std::string("malformed ") + what + " JSON: " + e.what());
  }
}

const json &field(const json &rec, const char *key, const char *what, std::size_t index) {
  if (!rec.is_object())
    record_error(what, index, "expected a JSON object");
  auto it = rec.find(key);
  if (it == rec.end())
    record_error(what, index, std::string("missing field \"") + key + "\"");
  return *it;
}

double number(const json &v, const char *key, const char *what, std::size_t index) {
  if (!v.is_number())
    record_error(what, index, std::string("field \"") + key + "\" must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x))
    record_error(what, index, std::string("field \"") + key + "\" is not finite");
  return x;
}

ImageId image_id(const json &v, const char *what, std::size_t index) {
  if (v.is_number_integer())
    return v.get<std::int64_t>();
  if (v.is_string())
    return v.get<std::string>();
  record_error(what, index, "field \"image_id\" must be an integer or a string");
}

CategoryId category_id(const json &v, const char *what, std::size_t index) {
  if (!v.is_number_integer())
    record_error(what, index, "field \"category_id\" must be an integer");
  return v.get<CategoryId>();
}

Box bbox(const json &v, const char *what, std::size_t index) {
  if (!v.is_array() || v.size() != 4)
    record_error(what, index, "field \"bbox\" must be an array [x, y, width, height]");
  const double x = number(v[0], "bbox", what, index);
  const double y = number(v[1], "bbox", what, index);
  const double w = number(v[2], "bbox", what, index);
  const double h = number(v[3], "bbox", what, index);
  if (w < 0.0 || h < 0.0)
    record_error(what, index, "negative bbox width or height");
  return Box::from_xywh(x, y, w, h);
}

} // namespace

LoadedDetections parse_detections(const std::string &text) {
  const auto j = parse_json(text, "detections");
  if (!j.is_array())
    throw ValidationError("detections JSON must be an array of result records");
  LoadedDetections out;
  out.detections.reserve(j.size());
  constexpr const char *what = "detection";
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto &rec = j[i];
    Detection d;
    d.image_id = image_id(field(rec, "image_id", what, i), what, i);
    d.category_id = category_id(field(rec, "category_id", what, i), what, i);
    d.box = bbox(field(rec, "bbox", what, i), what, i);
    double score = number(field(rec, "score", what, i), "score", what, i);
    if (score < 0.0 || score > 1.0) {
      score = std::clamp(score, 0.0, 1.0);
      ++out.clamped_scores;
    }
    d.score = score;
    out.detections.push_back(std::move(d));
  }
  return out;
}

LoadedGroundTruth parse_ground_truth(const std::string &text) {
  const auto j = parse_json(text, "ground-truth");
  if (!j.is_object())
    throw ValidationError("ground-truth JSON must be an object with images, annotations and "
                          "categories");
  LoadedGroundTruth out;
  for (const char *key : {"images", "annotations", "categories"})
    if (!j.contains(key) || !j[key].is_array())
      throw ValidationError(std::string("ground-truth JSON needs an array \"") + key + "\"");

  for (std::size_t i = 0; i < j["images"].size(); ++i)
    out.images.insert(image_id(field(j["images"][i], "id", "image", i), "image", i));
  for (std::size_t i = 0; i < j["categories"].size(); ++i) {
    const auto &rec = j["categories"][i];
    const auto id = category_id(field(rec, "id", "category", i), "category", i);
    std::string name;
    if (auto it = rec.find("name"); it != rec.end() && it->is_string())
      name = it->get<std::string>();
    out.categories[id] = name;
  }

  constexpr const char *what = "annotation";
  const auto &anns = j["annotations"];
  out.boxes.reserve(anns.size());
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const auto &rec = anns[i];
    GroundTruthBox g;
    g.image_id = image_id(field(rec, "image_id", what, i), what, i);
    g.category_id = category_id(field(rec, "category_id", what, i), what, i);
    g.box = bbox(field(rec, "bbox", what, i), what, i);
    if (auto it = rec.find("iscrowd"); it != rec.end()) {
      if (!it->is_number_integer() && !it->is_boolean())
        record_error(what, i, "field \"iscrowd\" must be 0 or 1");
      g.ignore = it->is_boolean() ? it->get<bool>() : it->get<int>() != 0;
    }
    if (!out.images.contains(g.image_id))
      record_error(what, i, "unknown image id " + to_string(g.image_id));
    if (!out.categories.contains(g.category_id))
      record_error(what, i, "unknown category id " + std::to_string(g.category_id));
    out.boxes.push_back(std::move(g));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad())
    throw IoError("error reading " + path.string());
  return buf.str();
}

void write_text_file(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out)
    throw IoError("error writing " + path.string());
}

LoadedDetections load_detections(const std::filesystem::path &path) {
  return parse_detections(read_text_file(path));
}

LoadedGroundTruth load_ground_truth(const std::filesystem::path &path) {
  return parse_ground_truth(read_text_file(path));
}

DatasetBundle load_bundle(const std::filesystem::path &detections,
                          const std::filesystem::path &ground_truth) {
  auto gt = load_ground_truth(ground_truth);
  auto dets = load_detections(detections);
  for (std::size_t i = 0; i < dets.detections.size(); ++i) {
    const auto &d = dets.detections[i];
    if (!gt.categories.contains(d.category_id))
      record_error("detection", i, "unknown category id " + std::to_string(d.category_id));
    if (!gt.images.contains(d.image_id))
      record_error("detection", i, "unknown image id " + to_string(d.image_id));
  }
  return {std::move(dets.detections), std::move(gt.boxes), std::move(gt.categories),
          dets.clamped_scores};
}

} // namespace detcal
