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

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "densecap/tensor/tape.hpp"
#include "densecap/tensor/tensor.hpp"

namespace densecap::oracle {

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t passed = 0;
  double worst_rel = 0.0;
  std::string worst;

  double pass_fraction() const {
    return checked == 0 ? 1.0 : static_cast<double>(passed) / static_cast<double>(checked);
  }
};

using LossFn = std::function<ad::Tensor(ad::Tape&)>;
using NamedTensors = std::vector<std::pair<std::string, ad::Tensor>>;

// Central finite differences against the tape's gradients. An element passes
// when |analytic - numeric| <= rtol * max(|analytic|, |numeric|) or the
// absolute difference is below atol (round-off floor for vanishing
// gradients). stride > 1 checks every stride-th element only.
inline GradCheckResult check_gradients(const LossFn& loss_fn, NamedTensors params,
                                       double eps = 1e-5, double rtol = 1e-4,
                                       double atol = 1e-9, std::size_t stride = 1) {
  std::vector<std::vector<double>> analytic;
  {
    ad::Tape tape;
    for (auto& [name, t] : params) t.zero_grad();
    ad::Tensor loss = loss_fn(tape);
    tape.backward(loss);
    for (auto& [name, t] : params) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    }
  }
  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& [name, t] = params[p];
    auto v = t.values_mut();
    for (std::size_t i = 0; i < v.size(); i += stride) {
      const double orig = v[i];
      v[i] = orig + eps;
      ad::Tape plus(ad::Tape::Mode::inference);
      const double fp = loss_fn(plus).item();
      v[i] = orig - eps;
      ad::Tape minus(ad::Tape::Mode::inference);
      const double fm = loss_fn(minus).item();
      v[i] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[p][i];
      const double diff = std::abs(a - numeric);
      const double denom = std::max(std::abs(a), std::abs(numeric));
      const double rel = denom > 0.0 ? diff / denom : 0.0;
      ++result.checked;
      if (diff <= rtol * denom || diff < atol) {
        ++result.passed;
      } else if (rel > result.worst_rel) {
        result.worst_rel = rel;
        result.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(a) +
                       " numeric=" + std::to_string(numeric);
      }
    }
  }
  return result;
}

}  // namespace densecap::oracle
