#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dgcl/tensor.hpp"

namespace dgcl::nd {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected first/second moment accumulators, one pair per parameter.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamOptions options) : options_(options) {}

  const AdamOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  std::int64_t step() const { return step_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

  // Applies one update in place. `grads[k]` belongs to `params[k]`; a null
  // gradient is a ContractError. Accumulators are created on first use and
  // must keep matching the parameter shapes afterwards.
  void update(std::span<Tensor* const> params, std::span<const Tensor* const> grads);

 private:
  AdamOptions options_;
  std::int64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

inline void adam_step(std::span<Tensor* const> params,
                      std::span<const Tensor* const> grads, AdamState& state) {
  state.update(params, grads);
}

}  // namespace dgcl::nd
