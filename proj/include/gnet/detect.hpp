#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "gnet/error.hpp"
#include "gnet/ops.hpp"
#include "gnet/tensor.hpp"

namespace gnet {

/// One decoded detection in pixel space. Corners satisfy x1 <= x2 and
/// y1 <= y2 and are clamped to the image bounds by the decoder.
struct BoundingBox {
  int class_id = 0;
  double score = 0.0;
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  bool operator==(const BoundingBox&) const = default;
};

/// Decode thresholds and the fixed grid geometry: 14x14 cells with two
/// boxes per cell.
struct DecodeConfig {
  double confidence_threshold = 0.10;
  double score_threshold = 0.20;
  double nms_iou_threshold = 0.45;
  int grid = 14;
  int boxes_per_cell = 2;
};

namespace detail {

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Deterministic ordering: score descending, ties broken by lower x1,
// then y1, then the remaining fields so the order is total.
inline bool score_order(const BoundingBox& a, const BoundingBox& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.x1 != b.x1) return a.x1 < b.x1;
  if (a.y1 != b.y1) return a.y1 < b.y1;
  if (a.x2 != b.x2) return a.x2 < b.x2;
  if (a.y2 != b.y2) return a.y2 < b.y2;
  return a.class_id < b.class_id;
}

}  // namespace detail

/// Intersection over union. Empty intersections and degenerate
/// zero-area unions both give 0.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double iw = std::max(0.0, ix2 - ix1);
  const double ih = std::max(0.0, iy2 - iy1);
  const double inter = iw * ih;
  const double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
  const double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

/// Turns the (10+C)x14x14 detection tensor into pixel-space boxes.
/// Channel layout: 0-3 box one (x, y, w, h), 4-7 box two, 8-9 the two
/// confidences, 10.. the C class scores. (x, y) are cell-relative
/// offsets, (w, h) whole-image fractions; raw values are clamped to
/// [0, 1]. A cell's class distribution is the softmax of its class
/// channels and is shared by both boxes; a box is kept when its
/// confidence and its score = confidence * best class probability clear
/// their thresholds.
inline std::vector<BoundingBox> decode(const Tensor& output, int image_w,
                                       int image_h,
                                       const DecodeConfig& cfg = {}) {
  const int grid = cfg.grid;
  if (output.channels() < 11) {
    throw Error(ErrorKind::Shape,
                "decode: need at least 11 channels (10 + C), got " +
                    std::to_string(output.channels()));
  }
  if (output.height() != grid || output.width() != grid) {
    throw Error(ErrorKind::Shape, "decode: expected a " + std::to_string(grid) +
                                      "x" + std::to_string(grid) +
                                      " grid, got " + output.shape_string());
  }
  const int num_classes = output.channels() - 10;

  std::vector<BoundingBox> boxes;
  std::vector<double> logits(num_classes);
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      for (int i = 0; i < num_classes; ++i) {
        logits[i] = output.at(10 + i, r, c);
      }
      const std::vector<double> probs =
          softmax(std::span<const double>(logits));
      int best_class = 0;
      for (int i = 1; i < num_classes; ++i) {
        if (probs[i] > probs[best_class]) best_class = i;
      }

      for (int b = 0; b < cfg.boxes_per_cell; ++b) {
        const double conf = detail::clamp01(output.at(8 + b, r, c));
        if (conf < cfg.confidence_threshold) continue;
        const double score = conf * probs[best_class];
        if (score < cfg.score_threshold) continue;

        const double bx = detail::clamp01(output.at(4 * b + 0, r, c));
        const double by = detail::clamp01(output.at(4 * b + 1, r, c));
        const double bw = detail::clamp01(output.at(4 * b + 2, r, c));
        const double bh = detail::clamp01(output.at(4 * b + 3, r, c));

        const double center_x = (c + bx) / grid * image_w;
        const double center_y = (r + by) / grid * image_h;
        const double width = bw * image_w;
        const double height = bh * image_h;

        BoundingBox box;
        box.class_id = best_class;
        box.score = score;
        box.x1 = std::clamp(center_x - width / 2, 0.0, double(image_w));
        box.y1 = std::clamp(center_y - height / 2, 0.0, double(image_h));
        box.x2 = std::clamp(center_x + width / 2, 0.0, double(image_w));
        box.y2 = std::clamp(center_y + height / 2, 0.0, double(image_h));
        boxes.push_back(box);
      }
    }
  }
  return boxes;
}

/// Greedy per-class non-maximum suppression: within each class, keep
/// the best-scoring box and drop later boxes overlapping it with
/// IoU strictly above the threshold. Survivors come back sorted by
/// score descending across classes.
inline std::vector<BoundingBox> nms(std::vector<BoundingBox> boxes,
                                    double iou_threshold) {
  if (iou_threshold < 0.0 || iou_threshold > 1.0) {
    throw Error(ErrorKind::Shape, "nms: iou threshold must be in [0, 1]");
  }
  std::sort(boxes.begin(), boxes.end(), detail::score_order);
  std::vector<BoundingBox> kept;
  std::vector<char> suppressed(boxes.size(), 0);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (suppressed[i]) continue;
    kept.push_back(boxes[i]);
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (suppressed[j] || boxes[j].class_id != boxes[i].class_id) continue;
      if (iou(boxes[i], boxes[j]) > iou_threshold) suppressed[j] = 1;
    }
  }
  return kept;  // score_order already sorted the survivors
}

/// Detection line: `<class> <score:%.6f> <x1:%.2f> <y1:%.2f> <x2:%.2f>
/// <y2:%.2f>`. The class renders as its name when a table is given and
/// the id is in range, otherwise as the numeric id.
inline std::string format_detection(const BoundingBox& box,
                                    std::span<const std::string> names = {}) {
  char buf[192];
  std::string label;
  if (box.class_id >= 0 && static_cast<std::size_t>(box.class_id) < names.size()) {
    label = names[box.class_id];
  } else {
    label = std::to_string(box.class_id);
  }
  std::snprintf(buf, sizeof(buf), "%s %.6f %.2f %.2f %.2f %.2f", label.c_str(),
                box.score, box.x1, box.y1, box.x2, box.y2);
  return buf;
}

/// Parses one detection line. The first token resolves through the name
/// table when present; bare integers are accepted as class ids.
inline BoundingBox parse_detection(const std::string& line,
                                   std::span<const std::string> names = {}) {
  std::string label;
  BoundingBox box;
  char extra;
  char label_buf[128];
  const int n = std::sscanf(line.c_str(), "%127s %lf %lf %lf %lf %lf %c",
                            label_buf, &box.score, &box.x1, &box.y1, &box.x2,
                            &box.y2, &extra);
  if (n != 6) {
    throw Error(ErrorKind::Format, "bad detection line: '" + line + "'");
  }
  label = label_buf;

  bool numeric = !label.empty() &&
                 label.find_first_not_of("0123456789") == std::string::npos;
  if (numeric) {
    box.class_id = std::stoi(label);
  } else {
    auto it = std::find(names.begin(), names.end(), label);
    if (it == names.end()) {
      throw Error(ErrorKind::Format, "unknown class name '" + label + "'");
    }
    box.class_id = static_cast<int>(it - names.begin());
  }
  if (box.x2 < box.x1 || box.y2 < box.y1) {
    throw Error(ErrorKind::Format, "detection corners out of order: '" + line + "'");
  }
  return box;
}

}  // namespace gnet
