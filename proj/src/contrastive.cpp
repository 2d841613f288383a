#include "dgcl/contrastive.hpp"

#include <string>

#include "dgcl/error.hpp"
#include "dgcl/ops.hpp"

namespace dgcl::cl {

nd::Var info_nce(const ViewPair& pair, const InfoNceOptions& options) {
  const nd::Tensor& a = pair.view_a.value();
  const nd::Tensor& b = pair.view_b.value();
  if (a.shape() != b.shape() || a.rank() != 2) {
    throw DimensionError("info_nce views differ: " + nd::shape_str(a.shape()) + " vs " +
                         nd::shape_str(b.shape()));
  }
  if (a.rows() == 0) throw ContractError("info_nce needs at least one row");
  if (!(pair.temperature > 0.0)) {
    throw ConfigError("temperature must be positive, got " + std::to_string(pair.temperature));
  }
  nd::Var va = pair.view_a;
  nd::Var vb = pair.view_b;
  if (!options.raw_dot) {
    va = nd::normalize_rows(va);
    vb = nd::normalize_rows(vb);
  }
  const double inv_tau = 1.0 / pair.temperature;
  const nd::Var logits = nd::scale(nd::matmul(va, nd::transpose(vb)), inv_tau);
  const nd::Var positive = nd::scale(nd::row_dot(va, vb), inv_tau);
  return nd::sum(nd::sub(nd::logsumexp_rows(logits), positive));
}

nd::Var total_cl_loss(const ViewPair& users, const ViewPair& items,
                      const InfoNceOptions& options) {
  return nd::add(info_nce(users, options), info_nce(items, options));
}

}  // namespace dgcl::cl
