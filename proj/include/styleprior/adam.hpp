#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "styleprior/tensor.hpp"

namespace styleprior {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr > 0.0)) throw ValidationError("adam: lr must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ValidationError("adam: beta1 must be in (0,1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ValidationError("adam: beta2 must be in (0,1)");
    if (!(eps > 0.0)) throw ValidationError("adam: eps must be positive");
  }
};

// Bias-corrected Adam over a fixed set of named parameters. step() consumes
// the accumulated gradients and zeroes them.
class AdamState {
 public:
  AdamState() = default;

  AdamState(std::vector<std::pair<std::string, Tensor>> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (!params_[i].second.requires_grad())
        throw ValidationError("adam: parameter '" + params_[i].first + "' does not require grad");
      m_[i].assign(static_cast<std::size_t>(params_[i].second.numel()), 0.0);
      v_[i].assign(static_cast<std::size_t>(params_[i].second.numel()), 0.0);
    }
  }

  void step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
      Tensor& t = params_[p].second;
      const std::vector<double>& g = t.grad();
      double* x = t.data();
      double* m = m_[p].data();
      double* v = v_[p].data();
      const std::size_t n = g.size();
      for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        if (!std::isfinite(gi))
          throw OptimError("non-finite gradient in parameter '" + params_[p].first + "'");
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
        x[i] -= cfg_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
      }
      t.zero_grad();
    }
  }

  std::int64_t step_count() const { return step_count_; }

  const AdamConfig& config() const { return cfg_; }

  std::vector<std::pair<std::string, Tensor>>& params() { return params_; }

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t step_count_ = 0;
};

}  // namespace styleprior
