#include "polyreach/polyset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace polyreach {

namespace {

void enumerate_exponents(int n, int degree, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
  const int pos = static_cast<int>(current.size());
  if (pos == n) {
    if (degree == 0) out.push_back(current);
    return;
  }
  for (int e = degree; e >= 0; --e) {
    current.push_back(e);
    enumerate_exponents(n, degree - e, current, out);
    current.pop_back();
  }
}

}  // namespace

MonomialBasis::MonomialBasis(int n, int d) : n_(n), d_(d) {
  if (n < 1 || d < 1) throw std::invalid_argument("MonomialBasis: need n >= 1 and d >= 1");
  for (int degree = 0; degree <= d; ++degree) {
    std::vector<std::vector<int>> level;
    std::vector<int> current;
    enumerate_exponents(n, degree, current, level);
    // Within a degree: smaller maximum exponent first (mixed monomials before
    // pure powers), ties lexicographic. Gives [1, x1, x2, x1*x2, x1^2, x2^2]
    // for n=2, d=2.
    std::stable_sort(level.begin(), level.end(),
                     [](const std::vector<int>& a, const std::vector<int>& b) {
                       const int ma = *std::max_element(a.begin(), a.end());
                       const int mb = *std::max_element(b.begin(), b.end());
                       if (ma != mb) return ma < mb;
                       return a > b;  // lexicographic, higher leading exponent first
                     });
    for (auto& e : level) exponents_.push_back(std::move(e));
  }
  if (size() != binomial(n + d, d))
    throw std::logic_error("MonomialBasis: size mismatch with C(n+d, d)");
}

Index MonomialBasis::binomial(int a, int b) {
  if (b < 0 || b > a) return 0;
  b = std::min(b, a - b);
  Index result = 1;
  for (int i = 1; i <= b; ++i) result = result * (a - b + i) / i;
  return result;
}

Vector monomial_vector(const MonomialBasis& basis, const Vector& x) {
  if (x.size() != basis.state_dim())
    throw std::invalid_argument("monomial_vector: state dimension mismatch");
  const auto& exps = basis.exponents();
  Vector e(basis.size());
  for (Index j = 0; j < basis.size(); ++j) {
    double value = 1.0;
    for (int i = 0; i < basis.state_dim(); ++i) {
      for (int p = 0; p < exps[j][i]; ++p) value *= x[i];
    }
    e[j] = value;
  }
  return e;
}

Matrix monomial_matrix(const MonomialBasis& basis, const Matrix& states) {
  if (states.cols() != basis.state_dim())
    throw std::invalid_argument("monomial_matrix: state dimension mismatch");
  Matrix result(states.rows(), basis.size());
  for (Index i = 0; i < states.rows(); ++i)
    result.row(i) = monomial_vector(basis, states.row(i).transpose()).transpose();
  return result;
}

SublevelSetParams make_sublevel_params(MonomialBasis basis, Matrix L) {
  const Index m = basis.size();
  if (L.rows() != m || L.cols() != m)
    throw std::invalid_argument("make_sublevel_params: L must be m x m");
  for (Index i = 0; i < m; ++i) {
    if (!(L(i, i) >= kDiagFloor))
      throw std::invalid_argument("make_sublevel_params: diagonal below floor");
    for (Index j = i + 1; j < m; ++j)
      if (L(i, j) != 0.0)
        throw std::invalid_argument("make_sublevel_params: L must be lower triangular");
  }
  return SublevelSetParams{std::move(basis), std::move(L)};
}

double evaluate_q(const SublevelSetParams& params, const Vector& x) {
  const Vector e = monomial_vector(params.basis, x);
  return (params.L.transpose() * e).squaredNorm();
}

bool membership(const SublevelSetParams& params, const Vector& x) {
  return evaluate_q(params, x) <= 1.0;
}

double log_det_inv(const SublevelSetParams& params) {
  double sum = 0.0;
  for (Index i = 0; i < params.L.rows(); ++i) {
    const double d = params.L(i, i);
    if (!(d > 0.0)) throw std::invalid_argument("log_det_inv: non-positive diagonal");
    sum += std::log(d);
  }
  return -2.0 * sum;
}

double empirical_coverage(const SublevelSetParams& params, const Matrix& points) {
  if (points.rows() == 0) throw std::invalid_argument("empirical_coverage: empty point set");
  const Matrix E = monomial_matrix(params.basis, points);
  Index inside = 0;
  for (Index i = 0; i < E.rows(); ++i) {
    const double q = (params.L.transpose() * E.row(i).transpose()).squaredNorm();
    if (q <= 1.0) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(points.rows());
}

std::string params_to_json(const SublevelSetParams& params) {
  nlohmann::ordered_json j;
  j["n"] = params.basis.state_dim();
  j["d"] = params.basis.degree();
  j["ordering_tag"] = MonomialBasis::kOrderingTag;
  std::vector<double> l;
  const Index m = params.basis.size();
  l.reserve(static_cast<size_t>(m * (m + 1) / 2));
  for (Index i = 0; i < m; ++i)
    for (Index jj = 0; jj <= i; ++jj) l.push_back(params.L(i, jj));
  j["L_rowmajor"] = l;
  return j.dump(2);
}

SublevelSetParams params_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MonomialBasis basis(j.at("n").get<int>(), j.at("d").get<int>());
  if (j.at("ordering_tag").get<std::string>() != MonomialBasis::kOrderingTag)
    throw std::invalid_argument("params_from_json: unknown ordering_tag");
  const auto l = j.at("L_rowmajor").get<std::vector<double>>();
  const Index m = basis.size();
  if (static_cast<Index>(l.size()) != m * (m + 1) / 2)
    throw std::invalid_argument("params_from_json: wrong L length");
  Matrix L = Matrix::Zero(m, m);
  size_t idx = 0;
  for (Index i = 0; i < m; ++i)
    for (Index jj = 0; jj <= i; ++jj) L(i, jj) = l[idx++];
  return make_sublevel_params(std::move(basis), std::move(L));
}

}  // namespace polyreach
