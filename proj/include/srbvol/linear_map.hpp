#pragma once

#include "srbvol/search.hpp"

namespace srbvol {

/// Linear operator on R^D. `matrix` always holds the full action. A
/// structured operator additionally records the diagonal of its non-compact
/// tail C = diag(0, ..., 0, d_{r+1}, ..., d_D); the rest K = matrix - C has
/// finite rank r.
struct LinearMap {
  Matrix matrix;
  Vector tail_diagonal;

  static LinearMap dense(Matrix m) { return LinearMap{std::move(m), Vector()}; }

  /// `head` is the D x D finite-rank part (its last tail.size() columns and
  /// rows are ignored outside the leading block), `tail` the diagonal tail.
  static LinearMap structured(const Matrix& finite_rank, const Vector& tail) {
    LinearMap out{finite_rank, tail};
    const auto d = finite_rank.rows();
    const auto t = tail.size();
    for (Eigen::Index i = 0; i < t; ++i) out.matrix(d - t + i, d - t + i) += tail[i];
    return out;
  }

  int dim() const { return static_cast<int>(matrix.rows()); }
  bool is_structured() const { return tail_diagonal.size() > 0; }

  Vector apply(const Vector& x) const { return matrix * x; }
  Matrix apply(const Matrix& v) const { return matrix * v; }

  LinearMap compose_after(const LinearMap& first) const {
    return LinearMap::dense(matrix * first.matrix);
  }
};

}  // namespace srbvol
