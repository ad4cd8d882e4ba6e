#pragma once

#include <string>
#include <vector>

#include "polyreach/dynamics.hpp"
#include "polyreach/rng.hpp"
#include "polyreach/types.hpp"

namespace polyreach {

/// Gaussian product kernels phi_l(x, w) = K_x(x, c_x^l) * K_w(w, c_w^l) with
/// one bandwidth per block, tied across dimensions. State coordinates are
/// standardized (mean/scale stored) before kernel evaluation; disturbance
/// coordinates are kept raw so densities stay in physical units.
struct GaussianBasis {
  Matrix centers_x;  // b x n, raw coordinates
  Matrix centers_w;  // b x s
  double sigma_x = 1.0;  // bandwidth in standardized state units
  double sigma_w = 1.0;  // bandwidth in raw disturbance units
  Vector x_mean;
  Vector x_scale;  // entries floored at 1e-12

  Index size() const { return centers_x.rows(); }
  Index state_dim() const { return centers_x.cols(); }
  Index dist_dim() const { return centers_w.cols(); }
};

/// Centers are min(N, max_centers) dataset pairs chosen uniformly at random
/// without replacement; standardization parameters come from the dataset.
GaussianBasis make_gaussian_basis(const Dataset& dataset, Index max_centers, double sigma_x,
                                  double sigma_w, RngStream& rng);

/// State-kernel responses K_x(x, c_x^l) for all centers.
Vector state_kernel(const GaussianBasis& basis, const Vector& x);

/// H_hat[l][m] = (1/N) sum_i K_x(x_i,c_l) K_x(x_i,c_m)
///              * (pi sigma_w^2)^{s/2} exp(-|w_l - w_m|^2 / (4 sigma_w^2)),
/// the closed form of the w-integral of phi_l * phi_m over R^s.
Matrix compute_H_hat(const GaussianBasis& basis, const Dataset& dataset);

/// h_hat[l] = (1/N) sum_i K_x(x_i, c_l) K_w(w_i, c_l).
Vector compute_h_hat(const GaussianBasis& basis, const Dataset& dataset);

struct CdeModel {
  GaussianBasis basis;
  Vector beta;          // ridge solution of (H_hat + lambda I) beta = h_hat
  Vector beta_clipped;  // max(beta, 0), used for density values and sampling
  double lambda = 0.0;  // effective ridge coefficient actually applied
};

/// Ridge fit via a symmetric positive-definite solve. lambda = 0 on a
/// numerically singular system throws; a condition number above 1e12 bumps
/// lambda to 1e-8 * trace(H_hat)/b and warns on stderr.
CdeModel fit(const GaussianBasis& basis, const Dataset& dataset, double lambda);

struct CdeSelection {
  double sigma_x = 0.0;
  double sigma_w = 0.0;
  double lambda = 0.0;
};

/// K-fold selection minimizing the held-out quadratic loss
/// beta^T H_val beta - 2 h_val^T beta; ties resolve toward larger lambda,
/// then larger sigma_w, then larger sigma_x. The sigma grid supplies the
/// candidates for both bandwidths.
CdeSelection cross_validate(const Dataset& dataset, const std::vector<double>& sigma_grid,
                            const std::vector<double>& lambda_grid, int folds, RngStream& rng);

/// Normalized conditional density value at (w | x); nonnegative and, for every
/// fitted model, integrating to one in w. When every clipped response at x
/// underflows, the equal-weight center mixture is used instead so the
/// operation stays total.
double conditional_density(const CdeModel& model, const Vector& w, const Vector& x);

/// Draws from the mixture implied by the estimator at x: component l with
/// probability proportional to beta_clipped[l] * K_x(x, c_l), then
/// w ~ N(c_w^l, sigma_w^2 I). Rows of the result are draws.
Matrix sample_conditional(const CdeModel& model, const Vector& x, Index count, RngStream& rng);

/// One draw; shares the degenerate fallback with sample_conditional.
Vector sample_conditional_one(const CdeModel& model, const Vector& x, RngStream& rng);

/// JSON {centers_x, centers_w, sigma_x, sigma_w, lambda, beta, x_mean,
/// x_scale} at full double precision.
std::string cde_to_json(const CdeModel& model);
CdeModel cde_from_json(const std::string& text);

}  // namespace polyreach
