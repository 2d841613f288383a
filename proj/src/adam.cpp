#include "dgcl/adam.hpp"

#include <cmath>
#include <string>

#include "dgcl/error.hpp"

namespace dgcl::nd {

void AdamState::update(std::span<Tensor* const> params,
                       std::span<const Tensor* const> grads) {
  if (params.size() != grads.size()) {
    throw ContractError("adam: " + std::to_string(params.size()) + " parameters but " +
                        std::to_string(grads.size()) + " gradients");
  }
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }
  if (m_.size() != params.size()) {
    throw ContractError("adam: parameter count changed between steps");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!grads[k]) throw ContractError("adam: missing gradient for parameter " + std::to_string(k));
    if (grads[k]->shape() != params[k]->shape() || m_[k].shape() != params[k]->shape()) {
      throw DimensionError("adam: shape mismatch for parameter " + std::to_string(k) + ": " +
                           shape_str(params[k]->shape()) + " vs gradient " +
                           shape_str(grads[k]->shape()));
    }
  }

  ++step_;
  const auto& o = options_;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = *grads[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= o.learning_rate * mhat / (std::sqrt(vhat) + o.eps);
    }
  }
}

}  // namespace dgcl::nd
