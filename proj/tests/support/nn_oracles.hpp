#pragma once

// Independent reference implementations for the tensor operators. These
// stay deliberately naive (nested loops, no blocking) so they can serve
// as oracles for the optimized library paths.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "gnet/ops.hpp"
#include "gnet/tensor.hpp"

namespace oracle {

/// Six-nested-loop 3x3 cross-correlation; out-of-range taps read zero
/// under Same padding.
inline gnet::Tensor conv3x3_direct(const gnet::Tensor& in,
                                   const gnet::ConvKernel& k,
                                   gnet::Padding padding) {
  const int h = in.height(), w = in.width();
  const int oh = padding == gnet::Padding::Same ? h : h - 2;
  const int ow = padding == gnet::Padding::Same ? w : w - 2;
  const int off = padding == gnet::Padding::Same ? -1 : 0;
  gnet::Tensor out(k.out_channels, oh, ow);
  for (int oc = 0; oc < k.out_channels; ++oc) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        float sum = k.bias[oc];
        for (int ic = 0; ic < k.in_channels; ++ic) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int yy = y + ky + off;
              const int xx = x + kx + off;
              if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
              sum += k.weight_at(oc, ic, ky, kx) * in.at(ic, yy, xx);
            }
          }
        }
        out.at(oc, y, x) = sum;
      }
    }
  }
  return out;
}

/// Nested-loop 2x2 max pooling.
inline gnet::Tensor maxpool2x2_direct(const gnet::Tensor& in) {
  gnet::Tensor out(in.channels(), in.height() / 2, in.width() / 2);
  for (int c = 0; c < in.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        float m = in.at(c, 2 * y, 2 * x);
        m = std::max(m, in.at(c, 2 * y, 2 * x + 1));
        m = std::max(m, in.at(c, 2 * y + 1, 2 * x));
        m = std::max(m, in.at(c, 2 * y + 1, 2 * x + 1));
        out.at(c, y, x) = m;
      }
    }
  }
  return out;
}

/// Softmax evaluated directly in extended precision, without the
/// max-subtraction trick.
inline std::vector<double> softmax_extended(std::span<const double> logits) {
  std::vector<long double> e(logits.size());
  long double sum = 0.0L;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<long double>(logits[i]));
    sum += e[i];
  }
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = static_cast<double>(e[i] / sum);
  }
  return out;
}

}  // namespace oracle
