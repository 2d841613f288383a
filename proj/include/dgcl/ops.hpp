#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dgcl/tape.hpp"

namespace dgcl::nd {

// Compressed sparse row matrix used as a constant operator on the tape.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1 entries
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return col_idx.size(); }
};

// Differentiable ops. All inputs must come from the same tape; shapes are
// checked and mismatches raise DimensionError naming both shapes.

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
// x[m x n] + bias[n], bias broadcast over rows.
Var add_row(const Var& x, const Var& bias);
// x[m x n] * s[m], each row scaled by its own factor.
Var scale_rows(const Var& x, const Var& s);

Var sum(const Var& x);
Var mean(const Var& x);

Var exp(const Var& x);
Var log(const Var& x);
Var silu(const Var& x);
// log(1 + e^x), evaluated without overflow.
Var softplus(const Var& x);

// Numerically stabilised row-wise softmax (per-row max subtraction).
Var softmax_rows(const Var& x);
// Row-wise log-sum-exp, result shape [m].
Var logsumexp_rows(const Var& x);

inline constexpr double kLayerNormEps = 1e-5;
Var layer_norm(const Var& x, const Var& gain, const Var& bias);

// Rows divided by their L2 norm; zero rows raise NumericError naming the row.
Var normalize_rows(const Var& x);
// Row-wise inner products <a_r, b_r>, result shape [m].
Var row_dot(const Var& a, const Var& b);

Var gather_rows(const Var& table, std::span<const std::size_t> ids);
Var slice_cols(const Var& x, std::size_t start, std::size_t len);
Var concat_cols(const std::vector<Var>& parts);

// Sparse constant operator times dense tracked matrix.
Var spmm(const CsrMatrix& a, const Var& x);

}  // namespace dgcl::nd
