#include "eegcn/optim.hpp"

#include <algorithm>
#include <cmath>

namespace eegcn::ad {

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (state.step == 0 && state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step", "state tracks " + std::to_string(state.first_moment.size()) +
                                      " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.first_moment[k].size() != params[k].size()) {
      throw ShapeError("adam_step", "parameter " + std::to_string(k) + " has " + std::to_string(params[k].size()) +
                                        " values but moment buffer has " +
                                        std::to_string(state.first_moment[k].size()));
    }
  }

  state.step += 1;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    auto g = p.grad();
    auto w = p.mutable_data();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      w[i] -= o.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + o.epsilon);
    }
    p.zero_grad();
  }
}

namespace {

double checked(double v, std::size_t tensor, std::size_t coord) {
  if (!std::isfinite(v)) {
    throw NonFiniteError("non-finite loss while probing parameter " + std::to_string(tensor) + " coordinate " +
                         std::to_string(coord));
  }
  return v;
}

}  // namespace

std::vector<GradCheckEntry> finite_diff_report(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                                               double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
  for (auto& p : params) p.zero_grad();
  std::vector<std::vector<double>> analytic;
  {
    GradientTape tape;
    Tensor loss = loss_fn();
    checked(loss.item(), 0, 0);
    tape.backward(loss);
  }
  for (auto& p : params) {
    auto g = p.grad();
    analytic.emplace_back(g.begin(), g.end());
    p.zero_grad();
  }

  NoGradGuard no_grad;
  std::vector<GradCheckEntry> report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    GradCheckEntry entry{k, 0.0};
    auto w = params[k].mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + step;
      const double up = checked(loss_fn().item(), k, i);
      w[i] = saved - step;
      const double down = checked(loss_fn().item(), k, i);
      w[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[k][i];
      entry.max_rel_error = std::max(entry.max_rel_error, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
    report.push_back(entry);
  }
  return report;
}

double finite_diff_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> params, double step) {
  double worst = 0.0;
  for (const auto& e : finite_diff_report(loss_fn, params, step)) worst = std::max(worst, e.max_rel_error);
  return worst;
}

}  // namespace eegcn::ad
