#pragma once

// Straight-line reference computations on plain vectors. Nothing here may
// call into the autodiff engine or the model code it is used to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, std::vector<double>(c, 0.0)); }

inline std::vector<double> softmax(const std::vector<double>& x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  std::vector<double> out(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += out[i] = std::exp(x[i] - mx);
  for (auto& v : out) v /= z;
  return out;
}

// relu(([sum_j A_ij h_j , sum_j A_ji h_j] / (d_i + 1)) W + b), written out
// element by element.
inline Matrix bigcn(const Matrix& h, const Matrix& a, const Matrix& w, const std::vector<double>& b,
                    bool bidirectional = true) {
  const std::size_t n = h.size();
  const std::size_t d = h[0].size();
  const std::size_t out_w = w[0].size();
  Matrix out = zeros(n, out_w);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t degree = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && a[i][j] != 0.0) ++degree;
    std::vector<double> cat(bidirectional ? 2 * d : d, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < d; ++k) {
        cat[k] += a[i][j] * h[j][k];
        if (bidirectional) cat[d + k] += a[j][i] * h[j][k];
      }
    }
    for (auto& v : cat) v /= static_cast<double>(degree) + 1.0;
    for (std::size_t c = 0; c < out_w; ++c) {
      double s = b[c];
      for (std::size_t k = 0; k < cat.size(); ++k) s += cat[k] * w[k][c];
      out[i][c] = s > 0.0 ? s : 0.0;
    }
  }
  return out;
}

// alpha_i = softmax_i( sum_j ctx[i] . masked[j] )
inline std::vector<double> retrieval_attention(const Matrix& ctx, const Matrix& masked) {
  std::vector<double> beta(ctx.size(), 0.0);
  for (std::size_t i = 0; i < ctx.size(); ++i)
    for (std::size_t j = 0; j < masked.size(); ++j)
      for (std::size_t k = 0; k < ctx[i].size(); ++k) beta[i] += ctx[i][k] * masked[j][k];
  return softmax(beta);
}

// sum_i alpha_i ctx[i] + (mean_i z[i]) proj
inline std::vector<double> fuse(const Matrix& ctx, const std::vector<double>& alpha, const Matrix& z,
                                const Matrix& proj) {
  const std::size_t width = ctx[0].size();
  std::vector<double> out(width, 0.0);
  for (std::size_t i = 0; i < ctx.size(); ++i)
    for (std::size_t k = 0; k < width; ++k) out[k] += alpha[i] * ctx[i][k];
  std::vector<double> pooled(z[0].size(), 0.0);
  for (const auto& row : z)
    for (std::size_t k = 0; k < row.size(); ++k) pooled[k] += row[k] / static_cast<double>(z.size());
  for (std::size_t k = 0; k < width; ++k)
    for (std::size_t m = 0; m < pooled.size(); ++m) out[k] += pooled[m] * proj[m][k];
  return out;
}

struct Metrics {
  double accuracy;
  double macro_f1;
};

// Brute-force confusion counting; per-class F1 = 2 tp / (predicted + actual),
// and 0 when the class never occurs on either side.
inline Metrics metrics(const std::vector<std::size_t>& preds, const std::vector<std::size_t>& golds) {
  std::array<std::array<double, 3>, 3> cm{};
  for (std::size_t i = 0; i < preds.size(); ++i) cm[golds[i]][preds[i]] += 1.0;
  double correct = 0.0;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    correct += cm[c][c];
    double predicted = 0.0;
    double actual = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      predicted += cm[k][c];
      actual += cm[c][k];
    }
    f1_sum += (predicted + actual) > 0.0 ? 2.0 * cm[c][c] / (predicted + actual) : 0.0;
  }
  return {correct / static_cast<double>(preds.size()), f1_sum / 3.0};
}

}  // namespace oracle
