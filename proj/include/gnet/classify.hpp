#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gnet/error.hpp"
#include "gnet/ops.hpp"
#include "gnet/tensor.hpp"

namespace gnet {

/// Normalized class probabilities, summing to one.
struct ClassScores {
  std::vector<double> probabilities;

  /// Top k classes sorted by probability descending, ties broken by
  /// lower class id.
  std::vector<std::pair<int, double>> top_k(int k) const {
    std::vector<std::pair<int, double>> ranked;
    ranked.reserve(probabilities.size());
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      ranked.emplace_back(static_cast<int>(i), probabilities[i]);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (k >= 0 && ranked.size() > static_cast<std::size_t>(k)) {
      ranked.resize(k);
    }
    return ranked;
  }
};

/// How many classes a channels x grid x grid output can represent when
/// every pixel position carries one class score.
inline std::int64_t capacity(int channels, int grid) {
  if (channels < 1 || grid < 1) {
    throw Error(ErrorKind::Shape, "capacity: channels and grid must be >= 1");
  }
  return static_cast<std::int64_t>(channels) * grid * grid;
}

/// GnetFC-v1 decoding: the output is a Kx1x1 tensor whose first
/// num_classes channels are the class logits.
inline ClassScores decode_v1(const Tensor& output, int num_classes) {
  if (output.height() != 1 || output.width() != 1) {
    throw Error(ErrorKind::Shape,
                "decode_v1: expected a Kx1x1 tensor, got " +
                    output.shape_string());
  }
  if (num_classes < 1 || num_classes > output.channels()) {
    throw Error(ErrorKind::Capacity,
                "decode_v1: " + std::to_string(output.channels()) +
                    " channels cannot hold " + std::to_string(num_classes) +
                    " classes");
  }
  const std::span<const float> logits(output.data(),
                                      static_cast<std::size_t>(num_classes));
  return ClassScores{softmax(logits)};
}

/// GnetFC-v2 decoding: class ids map to pixel positions through
/// id = channel * grid^2 + row * grid + col, which is exactly the
/// tensor's flat layout, so the first num_classes values of the output
/// are the logits. Surplus positions are ignored.
inline ClassScores decode_v2(const Tensor& output, int num_classes) {
  if (output.height() != output.width()) {
    throw Error(ErrorKind::Shape,
                "decode_v2: expected a square grid, got " +
                    output.shape_string());
  }
  const std::int64_t cap = capacity(output.channels(), output.height());
  if (num_classes < 1 || num_classes > cap) {
    throw Error(ErrorKind::Capacity,
                "decode_v2: " + output.shape_string() + " holds at most " +
                    std::to_string(cap) + " classes, got " +
                    std::to_string(num_classes));
  }
  const std::span<const float> logits(output.data(),
                                      static_cast<std::size_t>(num_classes));
  return ClassScores{softmax(logits)};
}

/// Top-k listing, one `<rank> <class_id> <probability:%.6f>` line per
/// entry, ranks starting at 1.
inline std::string format_top_k(const ClassScores& scores, int k) {
  std::string out;
  char buf[64];
  int rank = 1;
  for (const auto& [cls, prob] : scores.top_k(k)) {
    std::snprintf(buf, sizeof(buf), "%d %d %.6f\n", rank++, cls, prob);
    out += buf;
  }
  return out;
}

}  // namespace gnet
