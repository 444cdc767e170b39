#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eegcn/autodiff.hpp"

namespace eegcn::ad {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update over params, then zeroes their gradients.
// Moment buffers are allocated on the first call; afterwards the parameter
// list must keep the same count and sizes.
void adam_step(std::span<Tensor> params, AdamState& state);

// Max over every coordinate of every tensor in params of
// |analytic - central difference| / max(1, |analytic|). loss_fn must build
// the loss from params deterministically.
double finite_diff_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params, double step = 1e-5);

struct GradCheckEntry {
  std::size_t index = 0;
  double max_rel_error = 0.0;
};

// Same check, reported per parameter tensor.
std::vector<GradCheckEntry> finite_diff_report(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                                               double step = 1e-5);

}  // namespace eegcn::ad
