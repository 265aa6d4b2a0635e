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

#include <functional>
#include <string>
#include <vector>

#include "densecap/tensor/tensor.hpp"

namespace densecap::ad {

/// Ordered record of executed operations for reverse-mode differentiation.
///
/// Ops append an entry only when at least one input requires a gradient and
/// the tape is recording. backward() replays the entries in exact reverse
/// order. A tape is single-threaded; build one per forward pass.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  enum class Mode { record, inference };

  explicit Tape(Mode mode = Mode::record) : mode_(mode) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool recording() const { return mode_ == Mode::record; }

  // True if the op should be recorded for these inputs.
  bool wants(std::initializer_list<const Tensor*> inputs) const;

  void record(std::string op, std::vector<Tensor> inputs, Tensor output, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1 and propagates. Every tensor on the tape has its
  // gradient zeroed first, so each call produces fresh gradients.
  void backward(const Tensor& loss);

  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> op_names() const;
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::string op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn fn;
  };
  Mode mode_;
  std::vector<Entry> entries_;
};

}  // namespace densecap::ad
