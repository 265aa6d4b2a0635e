// Copyright 2026 The densecap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "densecap/errors.hpp"
#include "densecap/tensor/ops.hpp"

namespace densecap::ad {

namespace {

std::size_t out_extent(std::size_t in, std::size_t pad, std::size_t k, std::size_t stride,
                       const char* op, const char* axis) {
  if (stride == 0) throw ShapeError(std::string(op) + ": stride along " + axis + " must be >= 1");
  if (k == 0 || in + 2 * pad < k) {
    throw ShapeError(std::string(op) + ": kernel " + std::to_string(k) + " does not fit " + axis +
                     " extent " + std::to_string(in) + " with padding " + std::to_string(pad));
  }
  return (in + 2 * pad - k) / stride + 1;
}

// Output index range [lo, hi) for which in = o * stride + k - pad lies in [0, n).
struct Range {
  std::size_t lo;
  std::size_t hi;
};

Range valid_range(std::size_t out_n, std::size_t in_n, std::size_t k, std::size_t stride,
                  std::size_t pad) {
  // o * stride + k >= pad  <=>  o >= ceil((pad - k) / stride) when pad > k.
  std::size_t lo = 0;
  if (pad > k) lo = (pad - k + stride - 1) / stride;
  // o * stride + k - pad <= in_n - 1  <=>  o <= (in_n - 1 + pad - k) / stride.
  std::size_t hi = 0;
  if (in_n + pad >= k + 1) hi = std::min(out_n, (in_n - 1 + pad - k) / stride + 1);
  if (hi < lo) hi = lo;
  return {lo, hi};
}

struct ConvGeometry {
  std::size_t cin, t, h, w;
  std::size_t cout, kt, kh, kw;
  std::size_t ot, oh, ow;
  Triple stride, pad;
  Range rt[16], rh[16], rw[16];
};

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<Matrix>;
using ConstMap = Eigen::Map<const Matrix>;

// Columns are kept below this many doubles by splitting the output along time.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

std::size_t time_chunk(const ConvGeometry& g) {
  const std::size_t per_slice = g.cin * g.kt * g.kh * g.kw * g.oh * g.ow;
  return std::clamp<std::size_t>(kColumnBudget / std::max<std::size_t>(per_slice, 1), 1, g.ot);
}

// Rows are (ci, a, b, c) kernel taps, columns the output positions of time
// slices [t0, t1); taps that fall into the padding stay zero.
Matrix im2col(const double* x, const ConvGeometry& g, std::size_t t0, std::size_t t1) {
  const std::size_t out_plane = (t1 - t0) * g.oh * g.ow;
  const std::size_t in_plane = g.t * g.h * g.w;
  Matrix cols = Matrix::Zero(static_cast<Eigen::Index>(g.cin * g.kt * g.kh * g.kw),
                             static_cast<Eigen::Index>(out_plane));
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    const double* xc = x + ci * in_plane;
    for (std::size_t a = 0; a < g.kt; ++a) {
      for (std::size_t bb = 0; bb < g.kh; ++bb) {
        for (std::size_t c = 0; c < g.kw; ++c, ++row) {
          double* dst = cols.data() + row * out_plane;
          const Range rw = g.rw[c];
          const std::size_t lo = std::max(t0, g.rt[a].lo), hi_t = std::min(t1, g.rt[a].hi);
          for (std::size_t to = lo; to < hi_t; ++to) {
            const std::size_t ti = to * g.stride.t + a - g.pad.t;
            for (std::size_t ho = g.rh[bb].lo; ho < g.rh[bb].hi; ++ho) {
              const std::size_t hi = ho * g.stride.h + bb - g.pad.h;
              const double* xrow = xc + (ti * g.h + hi) * g.w;
              double* drow = dst + ((to - t0) * g.oh + ho) * g.ow;
              for (std::size_t wo = rw.lo; wo < rw.hi; ++wo) {
                drow[wo] = xrow[wo * g.stride.w + c - g.pad.w];
              }
            }
          }
        }
      }
    }
  }
  return cols;
}

void col2im_add(const Matrix& cols, const ConvGeometry& g, std::size_t t0, std::size_t t1,
                double* gx) {
  const std::size_t out_plane = (t1 - t0) * g.oh * g.ow;
  const std::size_t in_plane = g.t * g.h * g.w;
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    double* gxc = gx + ci * in_plane;
    for (std::size_t a = 0; a < g.kt; ++a) {
      for (std::size_t bb = 0; bb < g.kh; ++bb) {
        for (std::size_t c = 0; c < g.kw; ++c, ++row) {
          const double* src = cols.data() + row * out_plane;
          const Range rw = g.rw[c];
          const std::size_t lo = std::max(t0, g.rt[a].lo), hi_t = std::min(t1, g.rt[a].hi);
          for (std::size_t to = lo; to < hi_t; ++to) {
            const std::size_t ti = to * g.stride.t + a - g.pad.t;
            for (std::size_t ho = g.rh[bb].lo; ho < g.rh[bb].hi; ++ho) {
              const std::size_t hi = ho * g.stride.h + bb - g.pad.h;
              double* grow = gxc + (ti * g.h + hi) * g.w;
              const double* srow = src + ((to - t0) * g.oh + ho) * g.ow;
              for (std::size_t wo = rw.lo; wo < rw.hi; ++wo) {
                grow[wo * g.stride.w + c - g.pad.w] += srow[wo];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv3d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              Triple stride, Triple padding) {
  if (input.rank() != 4) throw ShapeError("conv3d: input must be C x T x H x W, got " + to_string(input.shape()));
  if (weight.rank() != 5) throw ShapeError("conv3d: weight must be Cout x Cin x kT x kH x kW");
  if (weight.dim(1) != input.dim(0)) {
    throw ShapeError("conv3d: input has " + std::to_string(input.dim(0)) +
                     " channels but weight expects " + std::to_string(weight.dim(1)));
  }
  if (bias.numel() != weight.dim(0)) throw ShapeError("conv3d: bias size must equal Cout");

  auto g = std::make_shared<ConvGeometry>();
  g->cin = input.dim(0);
  g->t = input.dim(1);
  g->h = input.dim(2);
  g->w = input.dim(3);
  g->cout = weight.dim(0);
  g->kt = weight.dim(2);
  g->kh = weight.dim(3);
  g->kw = weight.dim(4);
  if (g->kt > 16 || g->kh > 16 || g->kw > 16) throw ShapeError("conv3d: kernel extent above 16");
  g->stride = stride;
  g->pad = padding;
  g->ot = out_extent(g->t, padding.t, g->kt, stride.t, "conv3d", "time");
  g->oh = out_extent(g->h, padding.h, g->kh, stride.h, "conv3d", "height");
  g->ow = out_extent(g->w, padding.w, g->kw, stride.w, "conv3d", "width");
  for (std::size_t k = 0; k < g->kt; ++k) g->rt[k] = valid_range(g->ot, g->t, k, stride.t, padding.t);
  for (std::size_t k = 0; k < g->kh; ++k) g->rh[k] = valid_range(g->oh, g->h, k, stride.h, padding.h);
  for (std::size_t k = 0; k < g->kw; ++k) g->rw[k] = valid_range(g->ow, g->w, k, stride.w, padding.w);

  Tensor out({g->cout, g->ot, g->oh, g->ow});
  const std::size_t out_plane = g->ot * g->oh * g->ow;
  const std::size_t slice = g->oh * g->ow;
  const auto rows = static_cast<Eigen::Index>(g->cin * g->kt * g->kh * g->kw);
  ConstMap w_mat(weight.values().data(), static_cast<Eigen::Index>(g->cout), rows);
  Map y(out.values_mut().data(), static_cast<Eigen::Index>(g->cout),
        static_cast<Eigen::Index>(out_plane));
  const std::size_t chunk = time_chunk(*g);
  for (std::size_t t0 = 0; t0 < g->ot; t0 += chunk) {
    const std::size_t t1 = std::min(g->ot, t0 + chunk);
    const Matrix cols = im2col(input.values().data(), *g, t0, t1);
    y.middleCols(static_cast<Eigen::Index>(t0 * slice), cols.cols()).noalias() = w_mat * cols;
  }
  const double* b = bias.values().data();
  for (std::size_t co = 0; co < g->cout; ++co) y.row(static_cast<Eigen::Index>(co)).array() += b[co];

  if (tape.wants({&input, &weight, &bias})) {
    tape.record("conv3d", {input, weight, bias}, out, [input, weight, bias, out, g]() {
      const std::size_t out_plane = g->ot * g->oh * g->ow;
      const std::size_t slice = g->oh * g->ow;
      const auto cout = static_cast<Eigen::Index>(g->cout);
      const auto rows = static_cast<Eigen::Index>(g->cin * g->kt * g->kh * g->kw);
      ConstMap gy(out.node().grad.data(), cout, static_cast<Eigen::Index>(out_plane));
      if (bias.requires_grad()) {
        Eigen::Map<Eigen::VectorXd> gb(bias.ensure_grad().data(), cout);
        gb += gy.rowwise().sum();
      }
      if (!weight.requires_grad() && !input.requires_grad()) return;
      ConstMap w_mat(weight.node().value.data(), cout, rows);
      const std::size_t chunk = time_chunk(*g);
      for (std::size_t t0 = 0; t0 < g->ot; t0 += chunk) {
        const std::size_t t1 = std::min(g->ot, t0 + chunk);
        const auto gy_block = gy.middleCols(static_cast<Eigen::Index>(t0 * slice),
                                            static_cast<Eigen::Index>((t1 - t0) * slice));
        if (weight.requires_grad()) {
          const Matrix cols = im2col(input.node().value.data(), *g, t0, t1);
          Map gw(weight.ensure_grad().data(), cout, rows);
          gw.noalias() += gy_block * cols.transpose();
        }
        if (input.requires_grad()) {
          const Matrix gcols = w_mat.transpose() * gy_block;
          col2im_add(gcols, *g, t0, t1, input.ensure_grad().data());
        }
      }
    });
  }
  return out;
}

Tensor maxpool3d(Tape& tape, const Tensor& input, Triple kernel, Triple stride) {
  if (input.rank() != 4) throw ShapeError("maxpool3d: input must be C x T x H x W, got " + to_string(input.shape()));
  const std::size_t c = input.dim(0), t = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t ot = out_extent(t, 0, kernel.t, stride.t, "maxpool3d", "time");
  const std::size_t oh = out_extent(h, 0, kernel.h, stride.h, "maxpool3d", "height");
  const std::size_t ow = out_extent(w, 0, kernel.w, stride.w, "maxpool3d", "width");
  Tensor out({c, ot, oh, ow});
  std::vector<std::size_t> argmax(out.numel());
  const double* x = input.values().data();
  double* y = out.values_mut().data();
  std::size_t o = 0;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t a = 0; a < ot; ++a) {
      for (std::size_t b = 0; b < oh; ++b) {
        for (std::size_t d = 0; d < ow; ++d, ++o) {
          std::size_t best = ((ch * t + a * stride.t) * h + b * stride.h) * w + d * stride.w;
          for (std::size_t i = 0; i < kernel.t; ++i) {
            for (std::size_t j = 0; j < kernel.h; ++j) {
              const std::size_t row = ((ch * t + a * stride.t + i) * h + b * stride.h + j) * w;
              for (std::size_t k = 0; k < kernel.w; ++k) {
                const std::size_t idx = row + d * stride.w + k;
                if (x[idx] > x[best]) best = idx;
              }
            }
          }
          y[o] = x[best];
          argmax[o] = best;
        }
      }
    }
  }
  if (tape.wants({&input})) {
    tape.record("maxpool3d", {input}, out, [input, out, argmax = std::move(argmax)]() {
      auto& gx = input.ensure_grad();
      const auto& gy = out.node().grad;
      for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += gy[i];
    });
  }
  return out;
}

Tensor linear(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2) throw ShapeError("linear: weight must be D x E");
  const std::size_t d = weight.dim(0), e = weight.dim(1);
  if (input.rank() > 2 || input.shape().back() != d) {
    throw ShapeError("linear: input " + to_string(input.shape()) + " does not match weight " +
                     to_string(weight.shape()));
  }
  if (bias.numel() != e) throw ShapeError("linear: bias size must equal E");
  const std::size_t n = input.rank() == 2 ? input.dim(0) : 1;
  Tensor out(input.rank() == 2 ? Shape{n, e} : Shape{e});
  const double* x = input.values().data();
  const double* wt = weight.values().data();
  const double* b = bias.values().data();
  double* y = out.values_mut().data();
  for (std::size_t r = 0; r < n; ++r) {
    double* yr = y + r * e;
    std::copy_n(b, e, yr);
    for (std::size_t k = 0; k < d; ++k) {
      const double xv = x[r * d + k];
      if (xv == 0.0) continue;
      const double* wr = wt + k * e;
      for (std::size_t j = 0; j < e; ++j) yr[j] += xv * wr[j];
    }
  }
  if (tape.wants({&input, &weight, &bias})) {
    tape.record("linear", {input, weight, bias}, out, [input, weight, bias, out, n, d, e]() {
      const auto& gy = out.node().grad;
      const auto& x = input.node().value;
      const auto& wt = weight.node().value;
      if (input.requires_grad()) {
        auto& gx = input.ensure_grad();
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t k = 0; k < d; ++k) {
            double s = 0.0;
            const double* wr = wt.data() + k * e;
            const double* gr = gy.data() + r * e;
            for (std::size_t j = 0; j < e; ++j) s += wr[j] * gr[j];
            gx[r * d + k] += s;
          }
        }
      }
      if (weight.requires_grad()) {
        auto& gw = weight.ensure_grad();
        for (std::size_t r = 0; r < n; ++r) {
          const double* gr = gy.data() + r * e;
          for (std::size_t k = 0; k < d; ++k) {
            const double xv = x[r * d + k];
            if (xv == 0.0) continue;
            double* gwr = gw.data() + k * e;
            for (std::size_t j = 0; j < e; ++j) gwr[j] += xv * gr[j];
          }
        }
      }
      if (bias.requires_grad()) {
        auto& gb = bias.ensure_grad();
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < e; ++j) gb[j] += gy[r * e + j];
        }
      }
    });
  }
  return out;
}

}  // namespace densecap::ad
