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
#include <cmath>
#include <limits>
#include <string>

#include "densecap/errors.hpp"
#include "densecap/tensor/ops.hpp"

namespace densecap::ad {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void require_axis(const Tensor& x, std::size_t axis, const char* op) {
  if (axis >= x.rank()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                     to_string(x.shape()));
  }
}

// Splits a shape around an axis into (outer, extent, inner).
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

// Elementwise op where the derivative is expressed through input and output.
template <typename F, typename DF>
Tensor unary(Tape& tape, const Tensor& x, const char* name, F f, DF df) {
  Tensor out(x.shape());
  auto xv = x.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = f(xv[i]);
  if (tape.wants({&x})) {
    tape.record(name, {x}, out, [x, out, df]() {
      auto& gx = x.ensure_grad();
      const auto& go = out.node().grad;
      const auto& xv = x.node().value;
      const auto& ov = out.node().value;
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * df(xv[i], ov[i]);
    });
  }
  return out;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, "sigmoid", [](double v) { return sigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, "tanh", [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor smooth_l1(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, "smooth_l1", [](double v) { return smooth_l1(v); },
      [](double v, double) {
        if (std::abs(v) < 1.0) return v;
        return v > 0.0 ? 1.0 : -1.0;
      });
}

Tensor scale(Tape& tape, const Tensor& x, double factor) {
  return unary(
      tape, x, "scale", [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  auto av = a.values(), bv = b.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (tape.wants({&a, &b})) {
    tape.record("add", {a, b}, out, [a, b, out]() {
      const auto& go = out.node().grad;
      for (const Tensor* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        auto& g = t->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
      }
    });
  }
  return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  auto av = a.values(), bv = b.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
  if (tape.wants({&a, &b})) {
    tape.record("sub", {a, b}, out, [a, b, out]() {
      const auto& go = out.node().grad;
      if (a.requires_grad()) {
        auto& g = a.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
      }
      if (b.requires_grad()) {
        auto& g = b.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= go[i];
      }
    });
  }
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  auto av = a.values(), bv = b.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (tape.wants({&a, &b})) {
    tape.record("mul", {a, b}, out, [a, b, out]() {
      const auto& go = out.node().grad;
      const auto& av = a.node().value;
      const auto& bv = b.node().value;
      if (a.requires_grad()) {
        auto& g = a.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto& g = b.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * av[i];
      }
    });
  }
  return out;
}

Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  require_axis(parts[0], axis, "concat");
  Shape shape = parts[0].shape();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != shape.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i != axis && p.shape()[i] != shape[i]) {
        throw ShapeError("concat: shape mismatch " + to_string(p.shape()) + " vs " +
                         to_string(shape));
      }
    }
    total += p.shape()[axis];
  }
  shape[axis] = total;
  Tensor out(shape);
  const auto split = split_at(shape, axis);
  auto ov = out.values_mut();
  std::size_t offset = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    const std::size_t ext = p.shape()[axis];
    auto pv = p.values();
    for (std::size_t o = 0; o < split.outer; ++o) {
      std::copy_n(pv.begin() + o * ext * split.inner, ext * split.inner,
                  ov.begin() + (o * total + offset) * split.inner);
    }
    offset += ext;
    any_grad = any_grad || p.requires_grad();
  }
  if (tape.recording() && any_grad) {
    tape.record("concat", parts, out, [parts, out, axis, split, total]() {
      const auto& go = out.node().grad;
      std::size_t offset = 0;
      for (const auto& p : parts) {
        const std::size_t ext = p.shape()[axis];
        if (p.requires_grad()) {
          auto& g = p.ensure_grad();
          for (std::size_t o = 0; o < split.outer; ++o) {
            const std::size_t src = (o * total + offset) * split.inner;
            const std::size_t dst = o * ext * split.inner;
            for (std::size_t i = 0; i < ext * split.inner; ++i) g[dst + i] += go[src + i];
          }
        }
        offset += ext;
      }
    });
  }
  return out;
}

Tensor slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  require_axis(x, axis, "slice");
  if (begin >= end || end > x.shape()[axis]) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + to_string(x.shape()));
  }
  Shape shape = x.shape();
  const auto split = split_at(shape, axis);
  shape[axis] = end - begin;
  Tensor out(shape);
  const std::size_t ext = end - begin;
  auto xv = x.values();
  auto ov = out.values_mut();
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::copy_n(xv.begin() + (o * split.extent + begin) * split.inner, ext * split.inner,
                ov.begin() + o * ext * split.inner);
  }
  if (tape.wants({&x})) {
    tape.record("slice", {x}, out, [x, out, split, begin, ext]() {
      auto& g = x.ensure_grad();
      const auto& go = out.node().grad;
      for (std::size_t o = 0; o < split.outer; ++o) {
        const std::size_t dst = (o * split.extent + begin) * split.inner;
        const std::size_t src = o * ext * split.inner;
        for (std::size_t i = 0; i < ext * split.inner; ++i) g[dst + i] += go[src + i];
      }
    });
  }
  return out;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(x.values().begin(), x.values().end()));
  if (tape.wants({&x})) {
    tape.record("reshape", {x}, out, [x, out]() {
      auto& g = x.ensure_grad();
      const auto& go = out.node().grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  Tensor out = Tensor::scalar(total);
  if (tape.wants({&x})) {
    tape.record("sum", {x}, out, [x, out]() {
      auto& g = x.ensure_grad();
      const double go = out.node().grad[0];
      for (auto& v : g) v += go;
    });
  }
  return out;
}

Tensor mean(Tape& tape, const Tensor& x, std::size_t axis) {
  require_axis(x, axis, "mean");
  const auto split = split_at(x.shape(), axis);
  Tensor out(drop_axis(x.shape(), axis));
  auto xv = x.values();
  auto ov = out.values_mut();
  const double inv = 1.0 / static_cast<double>(split.extent);
  for (std::size_t o = 0; o < split.outer; ++o) {
    for (std::size_t k = 0; k < split.extent; ++k) {
      for (std::size_t i = 0; i < split.inner; ++i) {
        ov[o * split.inner + i] += xv[(o * split.extent + k) * split.inner + i];
      }
    }
  }
  for (auto& v : ov) v *= inv;
  if (tape.wants({&x})) {
    tape.record("mean", {x}, out, [x, out, split, inv]() {
      auto& g = x.ensure_grad();
      const auto& go = out.node().grad;
      for (std::size_t o = 0; o < split.outer; ++o) {
        for (std::size_t k = 0; k < split.extent; ++k) {
          for (std::size_t i = 0; i < split.inner; ++i) {
            g[(o * split.extent + k) * split.inner + i] += go[o * split.inner + i] * inv;
          }
        }
      }
    });
  }
  return out;
}

Tensor max_over_axis(Tape& tape, const Tensor& x, std::size_t axis) {
  require_axis(x, axis, "max_over_axis");
  const auto split = split_at(x.shape(), axis);
  Tensor out(drop_axis(x.shape(), axis));
  std::vector<std::size_t> argmax(out.numel());
  auto xv = x.values();
  auto ov = out.values_mut();
  for (std::size_t o = 0; o < split.outer; ++o) {
    for (std::size_t i = 0; i < split.inner; ++i) {
      std::size_t best = o * split.extent * split.inner + i;
      for (std::size_t k = 1; k < split.extent; ++k) {
        const std::size_t idx = (o * split.extent + k) * split.inner + i;
        if (xv[idx] > xv[best]) best = idx;
      }
      ov[o * split.inner + i] = xv[best];
      argmax[o * split.inner + i] = best;
    }
  }
  if (tape.wants({&x})) {
    tape.record("max_over_axis", {x}, out, [x, out, argmax = std::move(argmax)]() {
      auto& g = x.ensure_grad();
      const auto& go = out.node().grad;
      for (std::size_t j = 0; j < argmax.size(); ++j) g[argmax[j]] += go[j];
    });
  }
  return out;
}

Tensor softmax(Tape& tape, const Tensor& x) {
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.numel() / n;
  Tensor out(x.shape());
  auto xv = x.values();
  auto ov = out.values_mut();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * n;
    double* o = ov.data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  if (tape.wants({&x})) {
    tape.record("softmax", {x}, out, [x, out, n, rows]() {
      auto& g = x.ensure_grad();
      const auto& go = out.node().grad;
      const auto& y = out.node().value;
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += go[r * n + j] * y[r * n + j];
        for (std::size_t j = 0; j < n; ++j) g[r * n + j] += y[r * n + j] * (go[r * n + j] - dot);
      }
    });
  }
  return out;
}

Tensor log_softmax(Tape& tape, const Tensor& x) {
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.numel() / n;
  Tensor out(x.shape());
  auto xv = x.values();
  auto ov = out.values_mut();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * n;
    double* o = ov.data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(in[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) o[j] = in[j] - lse;
  }
  if (tape.wants({&x})) {
    tape.record("log_softmax", {x}, out, [x, out, n, rows]() {
      auto& g = x.ensure_grad();
      const auto& go = out.node().grad;
      const auto& y = out.node().value;
      for (std::size_t r = 0; r < rows; ++r) {
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += go[r * n + j];
        for (std::size_t j = 0; j < n; ++j) {
          g[r * n + j] += go[r * n + j] - std::exp(y[r * n + j]) * total;
        }
      }
    });
  }
  return out;
}

Tensor embedding_lookup(Tape& tape, const Tensor& table, std::span<const int> ids) {
  if (table.rank() != 2) throw ShapeError("embedding_lookup: table must be V x D");
  if (ids.empty()) throw ShapeError("embedding_lookup: no ids");
  const std::size_t vocab = table.dim(0);
  const std::size_t width = table.dim(1);
  std::vector<int> rows(ids.begin(), ids.end());
  for (int id : rows) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ContractError("embedding_lookup: token id " + std::to_string(id) +
                          " outside vocabulary of size " + std::to_string(vocab));
    }
  }
  Tensor out({rows.size(), width});
  auto tv = table.values();
  auto ov = out.values_mut();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(tv.begin() + static_cast<std::size_t>(rows[r]) * width, width,
                ov.begin() + r * width);
  }
  if (tape.wants({&table})) {
    tape.record("embedding_lookup", {table}, out, [table, out, rows = std::move(rows), width]() {
      auto& g = table.ensure_grad();
      const auto& go = out.node().grad;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t base = static_cast<std::size_t>(rows[r]) * width;
        for (std::size_t j = 0; j < width; ++j) g[base + j] += go[r * width + j];
      }
    });
  }
  return out;
}

Tensor gather(Tape& tape, const Tensor& x, std::span<const std::size_t> flat_indices) {
  if (flat_indices.empty()) throw ShapeError("gather: no indices");
  std::vector<std::size_t> idx(flat_indices.begin(), flat_indices.end());
  Tensor out({idx.size()});
  auto xv = x.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= xv.size()) throw ShapeError("gather: index out of range");
    ov[i] = xv[idx[i]];
  }
  if (tape.wants({&x})) {
    tape.record("gather", {x}, out, [x, out, idx = std::move(idx)]() {
      auto& g = x.ensure_grad();
      const auto& go = out.node().grad;
      for (std::size_t i = 0; i < idx.size(); ++i) g[idx[i]] += go[i];
    });
  }
  return out;
}

Tensor weighted_sum(Tape& tape, const Tensor& x, std::span<const double> weights) {
  if (weights.size() != x.numel()) throw ShapeError("weighted_sum: weight count mismatch");
  std::vector<double> w(weights.begin(), weights.end());
  double total = 0.0;
  auto xv = x.values();
  for (std::size_t i = 0; i < w.size(); ++i) total += w[i] * xv[i];
  Tensor out = Tensor::scalar(total);
  if (tape.wants({&x})) {
    tape.record("weighted_sum", {x}, out, [x, out, w = std::move(w)]() {
      auto& g = x.ensure_grad();
      const double go = out.node().grad[0];
      for (std::size_t i = 0; i < w.size(); ++i) g[i] += go * w[i];
    });
  }
  return out;
}

Tensor binary_cross_entropy(Tape& tape, const Tensor& probs, std::span<const double> targets,
                            double clamp) {
  if (targets.size() != probs.numel()) throw ShapeError("binary_cross_entropy: target count");
  std::vector<double> y(targets.begin(), targets.end());
  Tensor out(probs.shape());
  auto pv = probs.values();
  auto ov = out.values_mut();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = std::clamp(pv[i], clamp, 1.0 - clamp);
    ov[i] = -(y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
  }
  if (tape.wants({&probs})) {
    tape.record("binary_cross_entropy", {probs}, out, [probs, out, y = std::move(y), clamp]() {
      auto& g = probs.ensure_grad();
      const auto& go = out.node().grad;
      const auto& pv = probs.node().value;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = pv[i];
        if (p < clamp || p > 1.0 - clamp) continue;
        g[i] += go[i] * (-y[i] / p + (1.0 - y[i]) / (1.0 - p));
      }
    });
  }
  return out;
}

}  // namespace densecap::ad
