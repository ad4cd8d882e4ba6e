#pragma once

#include <string>
#include <vector>

#include "polyreach/types.hpp"

namespace polyreach {

/// Floor on the diagonal of the triangular factor; keeps M = L*L^T invertible.
inline constexpr double kDiagFloor = 1e-8;

/// Practical bound on |L| entries standing in for the compact parameter set.
inline constexpr double kThetaBound = 1e6;

/// Monomial exponents in a fixed graded order: total degree ascending; within
/// a degree, monomials with smaller maximum exponent first (mixed terms before
/// pure powers), ties broken lexicographically. For n=2, d=2 the basis is
/// [1, x1, x2, x1*x2, x1^2, x2^2].
class MonomialBasis {
 public:
  MonomialBasis(int n, int d);

  int state_dim() const { return n_; }
  int degree() const { return d_; }
  Index size() const { return static_cast<Index>(exponents_.size()); }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

  bool operator==(const MonomialBasis& other) const {
    return n_ == other.n_ && d_ == other.d_;
  }

  static Index binomial(int a, int b);
  static constexpr const char* kOrderingTag = "graded_mixed_first";

 private:
  int n_;
  int d_;
  std::vector<std::vector<int>> exponents_;
};

/// e(x): the monomial vector of x in the basis ordering; e(x)[0] == 1.
Vector monomial_vector(const MonomialBasis& basis, const Vector& x);

/// Row-wise monomial_vector over a matrix of states (rows are states).
Matrix monomial_matrix(const MonomialBasis& basis, const Matrix& states);

/// Sublevel set {x : e(x)^T M e(x) <= 1} with M = L*L^T, L lower triangular
/// with positive diagonal. The free parameters are the m(m+1)/2 entries of L
/// in row-major lower-triangular order.
struct SublevelSetParams {
  MonomialBasis basis;
  Matrix L;

  SublevelSetParams() : basis(1, 1) {}
  SublevelSetParams(MonomialBasis basis_in, Matrix l_in)
      : basis(std::move(basis_in)), L(std::move(l_in)) {}
};

/// Validates triangularity and the diagonal floor.
SublevelSetParams make_sublevel_params(MonomialBasis basis, Matrix L);

/// q(x) = e(x)^T L L^T e(x) = |L^T e(x)|^2 >= 0.
double evaluate_q(const SublevelSetParams& params, const Vector& x);

/// True iff q(x) <= 1 (the boundary is inside).
bool membership(const SublevelSetParams& params, const Vector& x);

/// log det M^{-1} = -2 * sum_i log L_ii.
double log_det_inv(const SublevelSetParams& params);

/// Fraction of rows of `points` with q <= 1. Throws on empty input.
double empirical_coverage(const SublevelSetParams& params, const Matrix& points);

/// JSON object {n, d, ordering_tag, L_rowmajor} at full double precision.
std::string params_to_json(const SublevelSetParams& params);
SublevelSetParams params_from_json(const std::string& text);

}  // namespace polyreach
