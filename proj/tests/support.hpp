#pragma once

// Shared test helpers: hand-rolled generators and a finite-difference
// gradient checker.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "micgan/matrix.hpp"
#include "micgan/nn.hpp"
#include "micgan/rng.hpp"

namespace testing_support {

using micgan::Matrix;
using micgan::Rng;

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.data()) v = scale * rng.normal();
  return m;
}

// A A^T + eps I.
inline Matrix random_spd(std::size_t d, Rng& rng, double eps = 0.1) {
  const Matrix a = random_matrix(d, d, rng);
  Matrix s(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += a(i, k) * a(j, k);
      s(i, j) = acc + (i == j ? eps : 0.0);
    }
  return s;
}

inline std::size_t random_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.index(hi - lo + 1);
}

// Flat views over every parameter of an MLP, in layer order (weights then bias).
inline std::vector<double*> parameter_slots(micgan::nn::Mlp& net) {
  std::vector<double*> out;
  for (auto& l : net.layers) {
    for (auto& w : l.weights.data()) out.push_back(&w);
    for (auto& b : l.bias) out.push_back(&b);
  }
  return out;
}

inline std::vector<double> flatten(const micgan::nn::ParamGrads& g) {
  std::vector<double> out;
  for (const auto& l : g) {
    out.insert(out.end(), l.weights.data().begin(), l.weights.data().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

// Central differences of `loss` over every parameter of `net`.
inline std::vector<double> numeric_gradient(micgan::nn::Mlp& net,
                                            const std::function<double()>& loss,
                                            double h = 1e-5) {
  std::vector<double> out;
  for (double* p : parameter_slots(net)) {
    const double saved = *p;
    *p = saved + h;
    const double up = loss();
    *p = saved - h;
    const double down = loss();
    *p = saved;
    out.push_back((up - down) / (2.0 * h));
  }
  return out;
}

// ||a - n|| / max(||a|| + ||n||, tiny).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, na = 0.0, nn_ = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn_ += n[i] * n[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nn_);
  return denom < 1e-300 ? 0.0 : std::sqrt(diff) / denom;
}

}  // namespace testing_support
