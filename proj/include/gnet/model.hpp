#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gnet/error.hpp"
#include "gnet/ops.hpp"
#include "gnet/tensor.hpp"

namespace gnet {

enum class Activation { Relu, None };

/// One 3x3 convolution plus optional ReLU — the chip's atomic compute
/// unit. The kernel size is fixed by construction; there is no field
/// for it.
struct SubLayer {
  int in_channels = 0;
  int out_channels = 0;
  Padding padding = Padding::Same;
  Activation activation = Activation::Relu;

  bool operator==(const SubLayer&) const = default;
};

/// A group of sublayers, optionally followed by a 2x2 max pool.
struct MajorLayer {
  std::vector<SubLayer> sublayers;
  bool pool_after = false;

  bool operator==(const MajorLayer&) const = default;
};

enum class HeadKind { Detection, ClassifyV1, ClassifyV2 };

/// How the final tensor is interpreted. Detection heads decode a
/// (10+C)x14x14 grid; ClassifyV1 reads class scores from the channels of
/// a 1x1 map; ClassifyV2 reads them from individual pixel positions of a
/// grid x grid map.
struct Head {
  HeadKind kind = HeadKind::Detection;
  int num_classes = 1;
  int grid = 14;  // Detection: 14; ClassifyV1: 1; ClassifyV2: 7 or 14

  bool operator==(const Head&) const = default;
};

/// Complete architecture description. Never holds weights; those live in
/// a WeightStore keyed by sublayer traversal order.
struct ModelSpec {
  std::string name;
  int input_size = 224;      // 224 or 448
  int input_channels = 1;    // 1 (Y) or 3 (RGB/YUV)
  int chip_max_channels = 512;
  std::vector<MajorLayer> major_layers;
  Head head;

  bool operator==(const ModelSpec&) const = default;
};

/// Per-sublayer kernels in model traversal order.
struct WeightStore {
  std::vector<ConvKernel> kernels;
};

struct Violation {
  std::string rule;     // stable rule id, see validate()
  std::string message;  // human-readable explanation
  int layer_index = -1; // flat sublayer index, or major-layer index for
                        // pooling rules, or -1 when global
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  bool operator==(const Shape&) const = default;
};

inline std::vector<SubLayer> flattened_sublayers(const ModelSpec& spec) {
  std::vector<SubLayer> out;
  for (const MajorLayer& major : spec.major_layers) {
    out.insert(out.end(), major.sublayers.begin(), major.sublayers.end());
  }
  return out;
}

/// Checks a spec against the chip's constraints. Violations are data,
/// not exceptions. Rule ids (stable contract):
///   empty-model        no major layers / a major layer with no sublayers
///   channel-chain      sublayer input does not match the previous output
///   channel-width      channel count outside [1, chip_max_channels]
///   input-size         input size not 224 or 448
///   input-channels     input channels not 1 or 3
///   odd-pool           2x2 pooling applied to an odd spatial size
///   spatial-underflow  valid convolutions shrink a map below 1x1
///   detect-grid        detection head does not end at 14x14
///   detect-channels    detection head does not end at 10+C channels
///   classify-grid      classifier head ends at the wrong spatial size
///   classify-capacity  num_classes exceeds what the head can represent
///   head-classes       head declares fewer than one class
///   backbone-relu      a backbone sublayer is missing its ReLU
inline ValidationReport validate(const ModelSpec& spec) {
  ValidationReport report;
  auto flag = [&report](std::string rule, std::string message, int index) {
    report.violations.push_back({std::move(rule), std::move(message), index});
  };

  if (spec.major_layers.empty()) {
    flag("empty-model", "model has no major layers", -1);
    return report;
  }
  for (std::size_t m = 0; m < spec.major_layers.size(); ++m) {
    if (spec.major_layers[m].sublayers.empty()) {
      flag("empty-model",
           "major layer " + std::to_string(m) + " has no sublayers",
           static_cast<int>(m));
      return report;
    }
  }

  // Channel chaining and width limits, in traversal order.
  int prev_out = spec.input_channels;
  int flat = 0;
  for (const MajorLayer& major : spec.major_layers) {
    for (const SubLayer& sl : major.sublayers) {
      if (sl.in_channels != prev_out) {
        flag("channel-chain",
             "sublayer " + std::to_string(flat) + " expects " +
                 std::to_string(sl.in_channels) + " input channels but gets " +
                 std::to_string(prev_out),
             flat);
      }
      if (sl.in_channels < 1 || sl.in_channels > spec.chip_max_channels ||
          sl.out_channels < 1 || sl.out_channels > spec.chip_max_channels) {
        flag("channel-width",
             "sublayer " + std::to_string(flat) +
                 " channel count outside [1, " +
                 std::to_string(spec.chip_max_channels) + "]",
             flat);
      }
      prev_out = sl.out_channels;
      ++flat;
    }
  }

  if (spec.input_size != 224 && spec.input_size != 448) {
    flag("input-size",
         "input size must be 224 or 448, got " + std::to_string(spec.input_size),
         -1);
  }
  if (spec.input_channels != 1 && spec.input_channels != 3) {
    flag("input-channels",
         "input channels must be 1 or 3, got " +
             std::to_string(spec.input_channels),
         -1);
  }

  // Spatial bookkeeping: valid convolutions subtract 2, pooling halves.
  bool trace_ok = spec.input_size == 224 || spec.input_size == 448;
  int size = spec.input_size;
  flat = 0;
  for (std::size_t m = 0; m < spec.major_layers.size() && trace_ok; ++m) {
    const MajorLayer& major = spec.major_layers[m];
    for (const SubLayer& sl : major.sublayers) {
      if (sl.padding == Padding::Valid) {
        if (size < 3) {
          flag("spatial-underflow",
               "valid convolution at sublayer " + std::to_string(flat) +
                   " would shrink a " + std::to_string(size) + "x" +
                   std::to_string(size) + " map below 1x1",
               flat);
          trace_ok = false;
          break;
        }
        size -= 2;
      }
      ++flat;
    }
    if (!trace_ok) break;
    if (major.pool_after) {
      if (size % 2 != 0) {
        flag("odd-pool",
             "2x2 pooling after major layer " + std::to_string(m) +
                 " needs an even spatial size, got " + std::to_string(size),
             static_cast<int>(m));
        trace_ok = false;
        break;
      }
      size /= 2;
    }
  }

  // Head contract, only meaningful when the spatial trace survived.
  const int final_channels = flattened_sublayers(spec).back().out_channels;
  if (spec.head.num_classes < 1) {
    flag("head-classes", "head must declare at least one class", -1);
  } else if (trace_ok) {
    switch (spec.head.kind) {
      case HeadKind::Detection:
        if (size != 14) {
          flag("detect-grid",
               "detection grid must be 14x14, got " + std::to_string(size) +
                   "x" + std::to_string(size),
               -1);
        }
        if (final_channels != 10 + spec.head.num_classes) {
          flag("detect-channels",
               "detection head must end at 10+C = " +
                   std::to_string(10 + spec.head.num_classes) +
                   " channels, got " + std::to_string(final_channels),
               -1);
        }
        break;
      case HeadKind::ClassifyV1:
        if (size != 1) {
          flag("classify-grid",
               "v1 classifier head must end at 1x1, got " +
                   std::to_string(size) + "x" + std::to_string(size),
               -1);
        }
        if (final_channels < spec.head.num_classes) {
          flag("classify-capacity",
               "v1 classifier holds at most " + std::to_string(final_channels) +
                   " classes, got " + std::to_string(spec.head.num_classes),
               -1);
        }
        break;
      case HeadKind::ClassifyV2: {
        if (size != spec.head.grid) {
          flag("classify-grid",
               "v2 classifier head must end at " +
                   std::to_string(spec.head.grid) + "x" +
                   std::to_string(spec.head.grid) + ", got " +
                   std::to_string(size) + "x" + std::to_string(size),
               -1);
        }
        const std::int64_t cap = static_cast<std::int64_t>(final_channels) *
                                 spec.head.grid * spec.head.grid;
        if (spec.head.num_classes > cap) {
          flag("classify-capacity",
               "v2 classifier holds at most " + std::to_string(cap) +
                   " classes, got " + std::to_string(spec.head.num_classes),
               -1);
        }
        break;
      }
    }
  }

  // Every sublayer outside the final major layer is backbone and must
  // keep its ReLU.
  flat = 0;
  for (std::size_t m = 0; m + 1 < spec.major_layers.size(); ++m) {
    for (const SubLayer& sl : spec.major_layers[m].sublayers) {
      if (sl.activation != Activation::Relu) {
        flag("backbone-relu",
             "backbone sublayer " + std::to_string(flat) + " is missing ReLU",
             flat);
      }
      ++flat;
    }
  }

  return report;
}

/// Predicts the forward-pass output shape from the spec alone, without
/// touching any weights. Throws on specs whose spatial trace is invalid.
inline Shape trace_output_shape(const ModelSpec& spec) {
  if (spec.major_layers.empty() || spec.major_layers.front().sublayers.empty()) {
    throw Error(ErrorKind::Shape, "cannot trace an empty model");
  }
  int size = spec.input_size;
  int channels = spec.input_channels;
  for (const MajorLayer& major : spec.major_layers) {
    for (const SubLayer& sl : major.sublayers) {
      if (sl.padding == Padding::Valid) {
        if (size < 3) {
          throw Error(ErrorKind::Shape,
                      "valid convolution would shrink the map below 1x1");
        }
        size -= 2;
      }
      channels = sl.out_channels;
    }
    if (major.pool_after) {
      if (size % 2 != 0) {
        throw Error(ErrorKind::Shape, "2x2 pooling on an odd spatial size");
      }
      size /= 2;
    }
  }
  return Shape{channels, size, size};
}

inline int pool_count(const ModelSpec& spec) {
  int pools = 0;
  for (const MajorLayer& major : spec.major_layers) {
    if (major.pool_after) ++pools;
  }
  return pools;
}

/// Total learnable parameters: 9*in*out weights plus out biases per
/// sublayer.
inline std::int64_t param_count(const ModelSpec& spec) {
  std::int64_t total = 0;
  for (const SubLayer& sl : flattened_sublayers(spec)) {
    total += static_cast<std::int64_t>(sl.in_channels) * sl.out_channels * 9 +
             sl.out_channels;
  }
  return total;
}

namespace detail {

inline MajorLayer make_major(int in_channels, const std::vector<int>& widths,
                             bool pool_after,
                             Activation last_activation = Activation::Relu,
                             Padding padding = Padding::Same) {
  MajorLayer major;
  major.pool_after = pool_after;
  int prev = in_channels;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const bool last = i + 1 == widths.size();
    major.sublayers.push_back(SubLayer{
        prev, widths[i], padding, last ? last_activation : Activation::Relu});
    prev = widths[i];
  }
  return major;
}

inline void require_detection_args(int input_size, int input_channels,
                                   int num_classes) {
  if (input_size != 224 && input_size != 448) {
    throw Error(ErrorKind::Shape, "input size must be 224 or 448");
  }
  if (input_channels != 1 && input_channels != 3) {
    throw Error(ErrorKind::Shape, "input channels must be 1 or 3");
  }
  if (num_classes < 1) {
    throw Error(ErrorKind::Shape, "need at least one class");
  }
}

}  // namespace detail

/// GnetDet-Large: six major layers. The first five form a VGG-like
/// backbone with the wide stages capped at 256 channels to fit the chip
/// memory; the sixth is the detection head ending at (10+C)x14x14.
/// 224 inputs pool after major layers 1-4, 448 inputs after 1-5.
inline ModelSpec build_gnetdet_large(int input_size, int input_channels,
                                     int num_classes, bool head_relu = false) {
  detail::require_detection_args(input_size, input_channels, num_classes);
  const int pools = input_size == 224 ? 4 : 5;

  ModelSpec spec;
  spec.name = "gnetdet-large-" + std::to_string(input_size) + "-" +
              (input_channels == 1 ? "y" : "rgb") + "-" +
              std::to_string(num_classes);
  spec.input_size = input_size;
  spec.input_channels = input_channels;
  spec.head = Head{HeadKind::Detection, num_classes, 14};

  const int widths[5] = {64, 128, 256, 256, 256};
  const int counts[5] = {2, 2, 3, 3, 3};
  int prev = input_channels;
  for (int m = 0; m < 5; ++m) {
    spec.major_layers.push_back(detail::make_major(
        prev, std::vector<int>(counts[m], widths[m]), m < pools));
    prev = widths[m];
  }
  spec.major_layers.push_back(detail::make_major(
      prev, {256, 256, 10 + num_classes}, false,
      head_relu ? Activation::Relu : Activation::None));
  return spec;
}

/// GnetDet-Small: five major layers. The first four form the backbone;
/// the fifth merges the head and holds exactly six sublayers, the last
/// producing 10+C channels. For 448 inputs the fifth pool lands after
/// the merged major layer so the output still reaches 14x14.
inline ModelSpec build_gnetdet_small(int input_size, int input_channels,
                                     int num_classes, bool head_relu = false) {
  detail::require_detection_args(input_size, input_channels, num_classes);

  ModelSpec spec;
  spec.name = "gnetdet-small-" + std::to_string(input_size) + "-" +
              (input_channels == 1 ? "y" : "rgb") + "-" +
              std::to_string(num_classes);
  spec.input_size = input_size;
  spec.input_channels = input_channels;
  spec.head = Head{HeadKind::Detection, num_classes, 14};

  const int widths[4] = {64, 128, 256, 256};
  const int counts[4] = {1, 2, 2, 3};
  int prev = input_channels;
  for (int m = 0; m < 4; ++m) {
    spec.major_layers.push_back(
        detail::make_major(prev, std::vector<int>(counts[m], widths[m]), true));
    prev = widths[m];
  }
  spec.major_layers.push_back(detail::make_major(
      prev, {256, 256, 256, 256, 256, 10 + num_classes}, input_size == 448,
      head_relu ? Activation::Relu : Activation::None));
  return spec;
}

/// GnetFC-v1: classification without FC layers. The backbone pools a
/// 224 input down to 7x7; three valid-padding sublayers then shrink
/// 7x7 -> 5x5 -> 3x3 -> 1x1 with one output channel per class, so the
/// class count is capped by the chip's channel width.
inline ModelSpec build_gnetfc_v1(int num_classes, int backbone_channels = 512,
                                 int chip_max_channels = 512,
                                 bool head_relu = false) {
  if (num_classes < 1) {
    throw Error(ErrorKind::Shape, "need at least one class");
  }
  if (num_classes > chip_max_channels) {
    throw Error(ErrorKind::Capacity,
                "gnetfc-v1 holds at most " + std::to_string(chip_max_channels) +
                    " classes, got " + std::to_string(num_classes));
  }
  if (backbone_channels < 1 || backbone_channels > chip_max_channels) {
    throw Error(ErrorKind::Capacity, "backbone width exceeds the chip limit");
  }

  ModelSpec spec;
  spec.name = "gnetfc-v1-" + std::to_string(num_classes);
  spec.input_size = 224;
  spec.input_channels = 3;
  spec.chip_max_channels = chip_max_channels;
  spec.head = Head{HeadKind::ClassifyV1, num_classes, 1};

  const int bc = backbone_channels;
  const std::vector<std::vector<int>> backbone = {
      {64}, {128}, {256, 256}, {bc, bc}, {bc, bc}};
  int prev = spec.input_channels;
  for (const auto& widths : backbone) {
    spec.major_layers.push_back(detail::make_major(prev, widths, true));
    prev = widths.back();
  }
  spec.major_layers.push_back(detail::make_major(
      prev, {bc, bc, num_classes}, false,
      head_relu ? Activation::Relu : Activation::None, Padding::Valid));
  return spec;
}

/// GnetFC-v2: every pixel of the final channels x grid x grid map is an
/// individual class score, lifting the class capacity to
/// channels * grid^2.
inline ModelSpec build_gnetfc_v2(int num_classes, int grid = 7,
                                 int channels = 256,
                                 int chip_max_channels = 512,
                                 bool head_relu = false) {
  if (num_classes < 1) {
    throw Error(ErrorKind::Shape, "need at least one class");
  }
  if (grid != 7 && grid != 14) {
    throw Error(ErrorKind::Shape, "gnetfc-v2 grid must be 7 or 14");
  }
  if (channels < 1 || channels > chip_max_channels) {
    throw Error(ErrorKind::Capacity, "channel width exceeds the chip limit");
  }
  const std::int64_t cap =
      static_cast<std::int64_t>(channels) * grid * grid;
  if (num_classes > cap) {
    throw Error(ErrorKind::Capacity,
                "gnetfc-v2 with " + std::to_string(channels) + "x" +
                    std::to_string(grid) + "x" + std::to_string(grid) +
                    " holds at most " + std::to_string(cap) + " classes, got " +
                    std::to_string(num_classes));
  }

  ModelSpec spec;
  spec.name = "gnetfc-v2-" + std::to_string(num_classes) + "-g" +
              std::to_string(grid) + "-c" + std::to_string(channels);
  spec.input_size = 224;
  spec.input_channels = 3;
  spec.chip_max_channels = chip_max_channels;
  spec.head = Head{HeadKind::ClassifyV2, num_classes, grid};

  std::vector<std::vector<int>> backbone = {{64}, {128}, {256, 256}};
  backbone.push_back({channels, channels});
  if (grid == 7) backbone.push_back({channels, channels});
  int prev = spec.input_channels;
  for (const auto& widths : backbone) {
    spec.major_layers.push_back(detail::make_major(prev, widths, true));
    prev = widths.back();
  }
  spec.major_layers.push_back(detail::make_major(
      prev, {channels, channels}, false,
      head_relu ? Activation::Relu : Activation::None));
  return spec;
}

/// True when the store holds one kernel per sublayer with matching
/// channel counts.
inline bool weights_match(const ModelSpec& spec, const WeightStore& store) {
  const std::vector<SubLayer> layers = flattened_sublayers(spec);
  if (store.kernels.size() != layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (store.kernels[i].in_channels != layers[i].in_channels ||
        store.kernels[i].out_channels != layers[i].out_channels) {
      return false;
    }
  }
  return true;
}

/// Seeded pseudo-random weights, uniform in [-s, s] with
/// s = sqrt(1/(9*in_channels)); biases start at zero. The generator
/// mapping is fixed (not distribution-library dependent), so a given
/// seed always produces the same bytes.
inline WeightStore init_weights(const ModelSpec& spec, std::uint64_t seed) {
  std::mt19937 rng(static_cast<std::uint32_t>(seed) ^
                   static_cast<std::uint32_t>(seed >> 32));
  auto next_unit = [&rng]() {
    return (rng() >> 8) * (1.0 / 16777216.0);  // 24-bit uniform in [0, 1)
  };
  WeightStore store;
  for (const SubLayer& sl : flattened_sublayers(spec)) {
    ConvKernel k(sl.out_channels, sl.in_channels);
    const double s = std::sqrt(1.0 / (9.0 * sl.in_channels));
    for (float& w : k.weights) {
      w = static_cast<float>((next_unit() * 2.0 - 1.0) * s);
    }
    store.kernels.push_back(std::move(k));
  }
  return store;
}

/// Runs the model: sublayer convolutions with their activations, then
/// pooling after each flagged major layer. Deterministic for fixed
/// inputs; threads only split whole output channels inside conv3x3.
/// Rejects weight stores and inputs that do not fit the spec's layer
/// chain. Chip-faithfulness is validate()'s job — callers run it first;
/// the executor itself happily runs any shape-consistent chain.
inline Tensor forward(const ModelSpec& spec, const WeightStore& store,
                      const Tensor& input, int threads = 1) {
  if (spec.major_layers.empty() || spec.major_layers.front().sublayers.empty()) {
    throw Error(ErrorKind::Shape, "forward: model has no sublayers");
  }
  if (!weights_match(spec, store)) {
    throw Error(ErrorKind::Shape,
                "forward: weight store does not match the model spec");
  }
  if (input.channels() != spec.major_layers.front().sublayers.front().in_channels) {
    throw Error(ErrorKind::Shape,
                "forward: input has " + std::to_string(input.channels()) +
                    " channels but the first sublayer expects " +
                    std::to_string(
                        spec.major_layers.front().sublayers.front().in_channels));
  }

  Tensor t = input;
  std::size_t ki = 0;
  for (const MajorLayer& major : spec.major_layers) {
    for (const SubLayer& sl : major.sublayers) {
      t = conv3x3(t, store.kernels[ki++], sl.padding, threads);
      if (sl.activation == Activation::Relu) t = relu(t);
    }
    if (major.pool_after) t = maxpool2x2(t);
  }
  return t;
}

}  // namespace gnet
