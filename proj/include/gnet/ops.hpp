#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <span>
#include <thread>
#include <vector>

#include "gnet/error.hpp"
#include "gnet/tensor.hpp"

namespace gnet {

/// Padding mode of the 3x3 convolution. Same keeps the spatial size
/// (zero-filled border of one), Valid shrinks each dimension by 2.
enum class Padding { Same, Valid };

/// Weights of one 3x3 convolution: kernel values in
/// [out][in][ky][kx] order plus one bias per output channel.
/// The 3x3 spatial extent is fixed by construction; the target chip
/// supports no other kernel size.
struct ConvKernel {
  int out_channels = 0;
  int in_channels = 0;
  std::vector<float> weights;  // out_channels * in_channels * 9
  std::vector<float> bias;     // out_channels

  ConvKernel() = default;

  ConvKernel(int out_ch, int in_ch)
      : out_channels(out_ch), in_channels(in_ch),
        weights(checked_count(out_ch, in_ch), 0.0f), bias(out_ch, 0.0f) {}

  ConvKernel(int out_ch, int in_ch, std::vector<float> w, std::vector<float> b)
      : out_channels(out_ch), in_channels(in_ch),
        weights(std::move(w)), bias(std::move(b)) {
    if (weights.size() != checked_count(out_ch, in_ch) ||
        bias.size() != static_cast<std::size_t>(out_ch)) {
      throw Error(ErrorKind::Shape, "kernel buffer sizes do not match shape");
    }
  }

  float weight_at(int oc, int ic, int ky, int kx) const {
    return weights[tap_index(oc, ic, ky, kx)];
  }
  float& weight_at(int oc, int ic, int ky, int kx) {
    return weights[tap_index(oc, ic, ky, kx)];
  }

  std::size_t tap_index(int oc, int ic, int ky, int kx) const {
    return (static_cast<std::size_t>(oc) * in_channels + ic) * 9 + ky * 3 + kx;
  }

 private:
  static std::size_t checked_count(int out_ch, int in_ch) {
    if (out_ch < 1 || in_ch < 1) {
      throw Error(ErrorKind::Shape, "kernel channel counts must be positive");
    }
    return static_cast<std::size_t>(out_ch) * in_ch * 9;
  }
};

namespace detail {

// Row-accumulator convolution. Output channels are processed in blocks of
// four; for every output row the partial sums stay in an L1-resident
// scratch row while the input planes stream through. Per output element
// the taps accumulate in (ic, ky, kx) order, matching the direct-loop
// form up to floating-point contraction.
inline void conv3x3_rows(const float* in, int in_ch, int h, int w,
                         const ConvKernel& k, Padding padding,
                         int oc_begin, int oc_end, float* out) {
  const int oh = padding == Padding::Same ? h : h - 2;
  const int ow = padding == Padding::Same ? w : w - 2;
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;

  constexpr int kBlock = 4;
  std::vector<float> scratch(static_cast<std::size_t>(kBlock) * ow);

  for (int oc0 = oc_begin; oc0 < oc_end; oc0 += kBlock) {
    const int ocn = std::min(kBlock, oc_end - oc0);
    for (int y = 0; y < oh; ++y) {
      float* acc[kBlock];
      for (int o = 0; o < ocn; ++o) {
        acc[o] = scratch.data() + static_cast<std::size_t>(o) * ow;
        std::fill(acc[o], acc[o] + ow, k.bias[oc0 + o]);
      }
      for (int ic = 0; ic < in_ch; ++ic) {
        const float* ip = in + ic * in_plane;
        for (int ky = 0; ky < 3; ++ky) {
          if (padding == Padding::Same) {
            const int yy = y + ky - 1;
            if (yy < 0 || yy >= h) continue;
            const float* irow = ip + static_cast<std::size_t>(yy) * w;
            for (int o = 0; o < ocn; ++o) {
              const float* taps = k.weights.data() +
                                  ((static_cast<std::size_t>(oc0 + o) * in_ch + ic) * 9 + ky * 3);
              const float k0 = taps[0], k1 = taps[1], k2 = taps[2];
              float* a = acc[o];
              for (int x = 1; x < ow - 1; ++x) {
                a[x] += k0 * irow[x - 1] + k1 * irow[x] + k2 * irow[x + 1];
              }
              a[0] += k1 * irow[0];
              if (ow > 1) {
                a[0] += k2 * irow[1];
                a[ow - 1] += k0 * irow[ow - 2] + k1 * irow[ow - 1];
              }
            }
          } else {
            const float* irow = ip + static_cast<std::size_t>(y + ky) * w;
            for (int o = 0; o < ocn; ++o) {
              const float* taps = k.weights.data() +
                                  ((static_cast<std::size_t>(oc0 + o) * in_ch + ic) * 9 + ky * 3);
              const float k0 = taps[0], k1 = taps[1], k2 = taps[2];
              float* a = acc[o];
              for (int x = 0; x < ow; ++x) {
                a[x] += k0 * irow[x] + k1 * irow[x + 1] + k2 * irow[x + 2];
              }
            }
          }
        }
      }
      for (int o = 0; o < ocn; ++o) {
        std::memcpy(out + (oc0 + o) * out_plane + static_cast<std::size_t>(y) * ow,
                    acc[o], static_cast<std::size_t>(ow) * sizeof(float));
      }
    }
  }
}

}  // namespace detail

/// 3x3 cross-correlation with stride 1 plus per-channel bias.
/// Same padding zero-fills a one-pixel border; Valid padding needs a
/// spatial size of at least 3 and shrinks each dimension by 2.
/// With threads > 1 the output channels are split across workers; each
/// channel is still accumulated in a fixed order, so the result does not
/// depend on the thread count.
inline Tensor conv3x3(const Tensor& input, const ConvKernel& kernel,
                      Padding padding, int threads = 1) {
  if (input.channels() != kernel.in_channels) {
    throw Error(ErrorKind::Shape,
                "conv3x3: input has " + std::to_string(input.channels()) +
                    " channels but kernel expects " +
                    std::to_string(kernel.in_channels));
  }
  if (padding == Padding::Valid &&
      (input.height() < 3 || input.width() < 3)) {
    throw Error(ErrorKind::Shape,
                "conv3x3: valid padding needs spatial size >= 3, got " +
                    input.shape_string());
  }

  const int oh = padding == Padding::Same ? input.height() : input.height() - 2;
  const int ow = padding == Padding::Same ? input.width() : input.width() - 2;
  Tensor out(kernel.out_channels, oh, ow);

  const int oc_n = kernel.out_channels;
  threads = std::clamp(threads, 1, oc_n);
  if (threads == 1) {
    detail::conv3x3_rows(input.data(), input.channels(), input.height(),
                         input.width(), kernel, padding, 0, oc_n, out.data());
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int per = (oc_n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int b = t * per;
      const int e = std::min(oc_n, b + per);
      if (b >= e) break;
      pool.emplace_back([&, b, e] {
        detail::conv3x3_rows(input.data(), input.channels(), input.height(),
                             input.width(), kernel, padding, b, e, out.data());
      });
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

/// Elementwise max(x, 0).
inline Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (float* p = out.data(); p != out.data() + out.size(); ++p) {
    *p = *p > 0.0f ? *p : 0.0f;
  }
  return out;
}

/// Non-overlapping 2x2 max pooling with stride 2. Both spatial
/// dimensions must be even.
inline Tensor maxpool2x2(const Tensor& input) {
  if (input.height() % 2 != 0 || input.width() % 2 != 0) {
    throw Error(ErrorKind::Shape,
                "maxpool2x2: spatial dimensions must be even, got " +
                    input.shape_string());
  }
  const int oh = input.height() / 2;
  const int ow = input.width() / 2;
  Tensor out(input.channels(), oh, ow);
  for (int c = 0; c < input.channels(); ++c) {
    const float* ip = input.plane(c);
    float* op = out.plane(c);
    for (int y = 0; y < oh; ++y) {
      const float* r0 = ip + static_cast<std::size_t>(2 * y) * input.width();
      const float* r1 = r0 + input.width();
      for (int x = 0; x < ow; ++x) {
        const float m0 = std::max(r0[2 * x], r0[2 * x + 1]);
        const float m1 = std::max(r1[2 * x], r1[2 * x + 1]);
        op[static_cast<std::size_t>(y) * ow + x] = std::max(m0, m1);
      }
    }
  }
  return out;
}

/// Numerically stable softmax: shifts by the max, exponentiates and
/// normalizes in double precision.
inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) {
    throw Error(ErrorKind::Shape, "softmax: empty input");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

inline std::vector<double> softmax(std::span<const float> logits) {
  std::vector<double> widened(logits.begin(), logits.end());
  return softmax(std::span<const double>(widened));
}

}  // namespace gnet
