#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace styleprior {

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OptimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Tensor;

namespace detail {

struct TensorImpl;

// One tape node per op output. Backward reads the output's accumulated
// gradient and adds contributions into the parents' gradients.
struct GradNode {
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl&)> backward;
};

struct TensorImpl {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized only while a gradient is held
  std::shared_ptr<GradNode> node;
  std::uint64_t id = 0;
  bool requires_grad = false;
};

inline std::uint64_t new_tensor_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

inline std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw DimensionError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

}  // namespace detail

// Value-semantic handle over shared storage. Copies alias the same data;
// use clone() for an independent buffer.
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad = false) {
    if (detail::shape_numel(shape) != static_cast<std::int64_t>(data.size()))
      throw DimensionError("tensor data length does not match shape");
    impl_ = std::make_shared<detail::TensorImpl>();
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
    if (requires_grad) impl_->grad.assign(impl_->data.size(), 0.0);
    impl_->id = detail::new_tensor_id();
  }

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    std::size_t n = static_cast<std::size_t>(detail::shape_numel(shape));
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor full(std::vector<int> shape, double value, bool requires_grad = false) {
    std::size_t n = static_cast<std::size_t>(detail::shape_numel(shape));
    return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
  }

  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  bool defined() const { return impl_ != nullptr; }

  const std::vector<int>& shape() const { return impl_->shape; }

  int dim(int i) const { return impl_->shape.at(static_cast<std::size_t>(i)); }

  int ndim() const { return static_cast<int>(impl_->shape.size()); }

  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  double* data() { return impl_->data.data(); }
  const double* data() const { return impl_->data.data(); }

  std::vector<double>& data_vec() { return impl_->data; }
  const std::vector<double>& data_vec() const { return impl_->data; }

  double value() const {
    if (numel() != 1) throw DimensionError("value() requires a scalar tensor");
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }

  void set_requires_grad(bool on) {
    impl_->requires_grad = on;
    if (on && impl_->grad.size() != impl_->data.size())
      impl_->grad.assign(impl_->data.size(), 0.0);
    if (!on) {
      impl_->grad.clear();
      impl_->grad.shrink_to_fit();
    }
  }

  const std::vector<double>& grad() const {
    if (!impl_->requires_grad || impl_->grad.size() != impl_->data.size())
      throw ValidationError("tensor holds no gradient");
    return impl_->grad;
  }

  void zero_grad() {
    if (impl_->requires_grad) impl_->grad.assign(impl_->data.size(), 0.0);
  }

  // Independent copy of the values; drops tape state and gradients.
  Tensor clone() const { return Tensor(impl_->shape, impl_->data, false); }

  void validate_finite(const std::string& what) const {
    for (double v : impl_->data)
      if (!std::isfinite(v))
        throw ValidationError("non-finite value in " + what);
  }

  std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

namespace detail {

// Gradient target for a parent during backward; nullptr when the parent does
// not participate in differentiation.
inline double* grad_sink(TensorImpl& t) {
  if (!t.requires_grad) return nullptr;
  if (t.grad.size() != t.data.size()) t.grad.assign(t.data.size(), 0.0);
  return t.grad.data();
}

inline Tensor make_op_output(std::vector<int> shape, std::vector<double> data,
                             std::vector<Tensor> parents,
                             std::function<void(TensorImpl&)> backward) {
  bool needs_grad = false;
  for (const Tensor& p : parents)
    if (p.requires_grad()) needs_grad = true;
  Tensor out(std::move(shape), std::move(data), false);
  if (needs_grad) {
    out.impl()->requires_grad = true;
    auto node = std::make_shared<GradNode>();
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.impl());
    node->backward = std::move(backward);
    out.impl()->node = std::move(node);
  }
  return out;
}

}  // namespace detail

// Reverse pass from a scalar root. The graph reachable from the root is
// consumed: nodes are released and intermediate gradients freed, so only
// leaf tensors (requires_grad, not op outputs) keep their gradients.
inline void backward(const Tensor& root) {
  if (root.numel() != 1) throw DimensionError("backward requires a scalar root");
  if (!root.impl()->node && !root.requires_grad()) return;

  std::vector<std::shared_ptr<detail::TensorImpl>> order;
  {
    std::vector<detail::TensorImpl*> stack;
    std::vector<std::shared_ptr<detail::TensorImpl>> seen;
    auto push = [&](const std::shared_ptr<detail::TensorImpl>& t) {
      if (!t->node) return;
      for (const auto& s : seen)
        if (s.get() == t.get()) return;
      seen.push_back(t);
      stack.push_back(t.get());
    };
    push(root.impl());
    while (!stack.empty()) {
      detail::TensorImpl* cur = stack.back();
      stack.pop_back();
      for (const auto& p : cur->node->parents) push(p);
    }
    order = std::move(seen);
  }
  // Creation ids increase from parents to children; descending id is a
  // valid topological order.
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a->id > b->id; });

  auto root_impl = root.impl();
  if (root_impl->grad.size() != root_impl->data.size())
    root_impl->grad.assign(root_impl->data.size(), 0.0);
  root_impl->grad[0] += 1.0;

  for (const auto& impl : order) {
    if (impl->grad.size() != impl->data.size()) continue;  // no influence recorded
    impl->node->backward(*impl);
  }
  for (const auto& impl : order) {
    impl->node.reset();
    impl->grad.clear();
    impl->grad.shrink_to_fit();
    impl->requires_grad = false;  // was an intermediate, not a leaf
  }
}

}  // namespace styleprior
