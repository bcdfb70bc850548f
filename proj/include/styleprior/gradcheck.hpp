#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "styleprior/tensor.hpp"

namespace styleprior {

// Compares the reverse-mode gradient of a scalar-valued function against
// central differences, coordinate by coordinate. Returns the largest
// relative error, with a small floor on the denominator so near-zero
// gradients are compared absolutely.
inline double check_gradients(const std::function<Tensor(const Tensor&)>& f,
                              const Tensor& x0, double h = 1e-5) {
  if (!(h > 0.0)) throw ValidationError("check_gradients: h must be positive");

  Tensor x(x0.shape(), x0.data_vec(), true);
  Tensor y = f(x);
  if (y.numel() != 1) throw DimensionError("check_gradients: f must return a scalar");
  backward(y);
  const std::vector<double> analytic = x.grad();

  std::vector<double> probe = x0.data_vec();
  const std::vector<int>& shape = x0.shape();
  double max_rel = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double fp = f(Tensor(shape, probe)).value();
    probe[i] = saved - h;
    const double fm = f(Tensor(shape, probe)).value();
    probe[i] = saved;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(fd), 1e-4});
    max_rel = std::max(max_rel, std::fabs(analytic[i] - fd) / denom);
  }
  return max_rel;
}

// Same comparison for a tensor embedded in a larger computation (model
// parameter or code). forward() must rebuild the graph from the tensor's
// current values; the tensor must already require gradients.
inline double check_gradients_embedded(const std::function<Tensor()>& forward,
                                       Tensor param, double h = 1e-5) {
  if (!param.requires_grad())
    throw ValidationError("check_gradients_embedded: tensor must require gradients");
  param.zero_grad();
  Tensor y = forward();
  if (y.numel() != 1) throw DimensionError("check_gradients_embedded: forward must return a scalar");
  backward(y);
  const std::vector<double> analytic = param.grad();

  double* data = param.data();
  double max_rel = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double saved = data[i];
    data[i] = saved + h;
    const double fp = forward().value();
    data[i] = saved - h;
    const double fm = forward().value();
    data[i] = saved;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(fd), 1e-4});
    max_rel = std::max(max_rel, std::fabs(analytic[i] - fd) / denom);
  }
  param.zero_grad();
  return max_rel;
}

}  // namespace styleprior
