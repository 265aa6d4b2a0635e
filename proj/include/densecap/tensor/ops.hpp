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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "densecap/tensor/tape.hpp"
#include "densecap/tensor/tensor.hpp"

// Differentiable operations. Each takes the tape to record on; when no input
// requires a gradient (or the tape is in inference mode) nothing is recorded
// and the result is a plain value tensor.
namespace densecap::ad {

// Cross-correlation of C_in x T x H x W input with C_out x C_in x kT x kH x kW
// weights, plus a per-output-channel bias.
Tensor conv3d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              Triple stride = {1, 1, 1}, Triple padding = {0, 0, 0});

// Max over each window of a C x T x H x W input. Gradient goes to the first
// row-major argmax of the window.
Tensor maxpool3d(Tape& tape, const Tensor& input, Triple kernel, Triple stride);

// input (N x D or D) times weight (D x E) plus bias (E).
Tensor linear(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor tanh(Tape& tape, const Tensor& x);
Tensor relu(Tape& tape, const Tensor& x);

// Same-shape elementwise arithmetic.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& x, double factor);

Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

// Reductions drop the reduced axis; a rank-1 input reduces to shape [1].
Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x, std::size_t axis);
Tensor max_over_axis(Tape& tape, const Tensor& x, std::size_t axis);

// Over the last axis.
Tensor softmax(Tape& tape, const Tensor& x);
Tensor log_softmax(Tape& tape, const Tensor& x);

// Rows of a V x D table selected by id; result is N x D.
Tensor embedding_lookup(Tape& tape, const Tensor& table, std::span<const int> ids);

// Flat-index gather into a rank-1 tensor.
Tensor gather(Tape& tape, const Tensor& x, std::span<const std::size_t> flat_indices);

// sum_i weights[i] * x[i] as a scalar.
Tensor weighted_sum(Tape& tape, const Tensor& x, std::span<const double> weights);

// 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise; elementwise.
Tensor smooth_l1(Tape& tape, const Tensor& x);

// Elementwise -[y log p + (1 - y) log(1 - p)] with p clamped to
// [clamp, 1 - clamp]. The clamp has zero derivative outside its range.
Tensor binary_cross_entropy(Tape& tape, const Tensor& probs, std::span<const double> targets,
                            double clamp = 1e-7);

// Scalar helpers that mirror the differentiable versions.
double smooth_l1(double x);
double sigmoid(double x);

}  // namespace densecap::ad
