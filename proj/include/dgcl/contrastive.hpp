#pragma once

#include "dgcl/tape.hpp"

namespace dgcl::cl {

enum class EntityKind { kUser, kItem };

struct ViewPair {
  nd::Var view_a;  // first augmented view, one row per entity
  nd::Var view_b;  // second augmented view, row-aligned with view_a
  EntityKind kind = EntityKind::kUser;
  double temperature = 0.2;
};

struct InfoNceOptions {
  // Compare raw inner products instead of cosine similarities.
  bool raw_dot = false;
};

// sum_r -log( exp(<a_r, b_r>/tau) / sum_j exp(<a_r, b_j>/tau) ), in-batch
// negatives, positive included in the denominator. One-sided: swapping the
// views generally changes the value.
nd::Var info_nce(const ViewPair& pair, const InfoNceOptions& options = {});

// L_cl = InfoNCE(users) + InfoNCE(items).
nd::Var total_cl_loss(const ViewPair& users, const ViewPair& items,
                      const InfoNceOptions& options = {});

}  // namespace dgcl::cl
