#include "polyreach/cde.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace polyreach {

namespace {

constexpr double kMinScale = 1e-12;
constexpr double kDegenerateResponse = 1e-300;
constexpr double kCondLimit = 1e12;

Matrix standardize_rows(const Matrix& x, const Vector& mean, const Vector& scale) {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

/// Pairwise squared distances between rows of a and rows of b.
Matrix pairwise_sqdist(const Matrix& a, const Matrix& b) {
  Matrix d = -2.0 * a * b.transpose();
  d.colwise() += a.rowwise().squaredNorm();
  d.rowwise() += b.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

Matrix kernel_from_sqdist(const Matrix& sqdist, double sigma) {
  return (-sqdist / (2.0 * sigma * sigma)).array().exp();
}

/// (pi sigma_w^2)^{s/2} exp(-|w_l - w_m|^2 / (4 sigma_w^2)): the exact
/// w-integral of two Gaussian kernels over R^s.
Matrix overlap_from_sqdist(const Matrix& center_sqdist, double sigma_w, Index s) {
  const double scale = std::pow(std::numbers::pi * sigma_w * sigma_w, 0.5 * s);
  return scale * (-center_sqdist / (4.0 * sigma_w * sigma_w)).array().exp();
}

void check_basis_dataset(const GaussianBasis& basis, const Dataset& dataset) {
  if (dataset.count() == 0) throw std::invalid_argument("cde: empty dataset");
  if (dataset.x.cols() != basis.state_dim() || dataset.w.cols() != basis.dist_dim())
    throw std::invalid_argument("cde: dataset dimensions do not match basis");
}

}  // namespace

GaussianBasis make_gaussian_basis(const Dataset& dataset, Index max_centers, double sigma_x,
                                  double sigma_w, RngStream& rng) {
  if (dataset.count() == 0) throw std::invalid_argument("make_gaussian_basis: empty dataset");
  if (max_centers < 1) throw std::invalid_argument("make_gaussian_basis: need max_centers >= 1");
  if (!(sigma_x > 0.0) || !(sigma_w > 0.0))
    throw std::invalid_argument("make_gaussian_basis: bandwidths must be positive");

  const Index n_pairs = dataset.count();
  const Index b = std::min(n_pairs, max_centers);

  // Partial Fisher-Yates draw of b distinct rows.
  std::vector<Index> idx(n_pairs);
  for (Index i = 0; i < n_pairs; ++i) idx[i] = i;
  for (Index i = 0; i < b; ++i)
    std::swap(idx[i], idx[i + static_cast<Index>(rng.uniform_index(n_pairs - i))]);

  GaussianBasis basis;
  basis.centers_x.resize(b, dataset.x.cols());
  basis.centers_w.resize(b, dataset.w.cols());
  for (Index i = 0; i < b; ++i) {
    basis.centers_x.row(i) = dataset.x.row(idx[i]);
    basis.centers_w.row(i) = dataset.w.row(idx[i]);
  }
  basis.sigma_x = sigma_x;
  basis.sigma_w = sigma_w;
  basis.x_mean = dataset.x.colwise().mean();
  const Matrix centered = dataset.x.rowwise() - basis.x_mean.transpose();
  basis.x_scale = (centered.array().square().colwise().mean()).sqrt().matrix();
  for (Index j = 0; j < basis.x_scale.size(); ++j)
    if (basis.x_scale[j] < kMinScale) basis.x_scale[j] = 1.0;
  return basis;
}

Vector state_kernel(const GaussianBasis& basis, const Vector& x) {
  if (x.size() != basis.state_dim())
    throw std::invalid_argument("state_kernel: state dimension mismatch");
  const Vector z = (x - basis.x_mean).cwiseQuotient(basis.x_scale);
  const Matrix zc = standardize_rows(basis.centers_x, basis.x_mean, basis.x_scale);
  Vector k(basis.size());
  for (Index l = 0; l < basis.size(); ++l)
    k[l] = std::exp(-(z - zc.row(l).transpose()).squaredNorm() /
                    (2.0 * basis.sigma_x * basis.sigma_x));
  return k;
}

Matrix compute_H_hat(const GaussianBasis& basis, const Dataset& dataset) {
  check_basis_dataset(basis, dataset);
  const Matrix zx = standardize_rows(dataset.x, basis.x_mean, basis.x_scale);
  const Matrix zc = standardize_rows(basis.centers_x, basis.x_mean, basis.x_scale);
  const Matrix kx = kernel_from_sqdist(pairwise_sqdist(zx, zc), basis.sigma_x);
  const Matrix overlap =
      overlap_from_sqdist(pairwise_sqdist(basis.centers_w, basis.centers_w), basis.sigma_w,
                          basis.dist_dim());
  Matrix h = (kx.transpose() * kx).cwiseProduct(overlap) / static_cast<double>(dataset.count());
  return ((h + h.transpose()) / 2.0).eval();
}

Vector compute_h_hat(const GaussianBasis& basis, const Dataset& dataset) {
  check_basis_dataset(basis, dataset);
  const Matrix zx = standardize_rows(dataset.x, basis.x_mean, basis.x_scale);
  const Matrix zc = standardize_rows(basis.centers_x, basis.x_mean, basis.x_scale);
  const Matrix kx = kernel_from_sqdist(pairwise_sqdist(zx, zc), basis.sigma_x);
  const Matrix kw = kernel_from_sqdist(pairwise_sqdist(dataset.w, basis.centers_w), basis.sigma_w);
  return kx.cwiseProduct(kw).colwise().sum().transpose() / static_cast<double>(dataset.count());
}

CdeModel fit(const GaussianBasis& basis, const Dataset& dataset, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("fit: lambda must be >= 0");
  const Matrix h_hat = compute_H_hat(basis, dataset);
  const Vector rhs = compute_h_hat(basis, dataset);
  const Index b = basis.size();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(h_hat, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues()[0];
  const double max_eig = eig.eigenvalues()[b - 1];
  if (lambda == 0.0 && min_eig <= 1e-14 * std::max(max_eig, 1e-300))
    throw std::runtime_error(
        "fit: H_hat is numerically singular at lambda = 0; choose lambda > 0");

  double lambda_eff = lambda;
  const double cond = (max_eig + lambda_eff) / std::max(min_eig + lambda_eff, 1e-300);
  if (cond > kCondLimit) {
    const double bump = 1e-8 * h_hat.trace() / static_cast<double>(b);
    if (bump > lambda_eff) {
      std::cerr << "fit: condition number " << cond << " above 1e12; bumping lambda to " << bump
                << "\n";
      lambda_eff = bump;
    }
  }

  Matrix system = h_hat;
  system.diagonal().array() += lambda_eff;
  Eigen::LDLT<Matrix> ldlt(system);
  Vector beta = ldlt.solve(rhs);
  beta += ldlt.solve(rhs - system * beta);  // one refinement pass

  const double residual = (system * beta - rhs).norm();
  if (residual > 1e-8 * std::max(rhs.norm(), 1e-300))
    throw std::runtime_error("fit: ridge solve residual above tolerance");

  CdeModel model;
  model.basis = basis;
  model.beta = std::move(beta);
  model.beta_clipped = model.beta.cwiseMax(0.0);
  model.lambda = lambda_eff;
  return model;
}

namespace {

/// Clipped per-center responses at x; falls back to equal weights when all of
/// them underflow so density evaluation and sampling stay consistent.
Vector clipped_responses(const CdeModel& model, const Vector& x, bool* degenerate = nullptr) {
  Vector r = model.beta_clipped.cwiseProduct(state_kernel(model.basis, x));
  const bool fallback = r.maxCoeff() < kDegenerateResponse;
  if (fallback) r = Vector::Ones(r.size());
  if (degenerate) *degenerate = fallback;
  return r;
}

}  // namespace

double conditional_density(const CdeModel& model, const Vector& w, const Vector& x) {
  if (w.size() != model.basis.dist_dim())
    throw std::invalid_argument("conditional_density: disturbance dimension mismatch");
  const Vector r = clipped_responses(model, x);
  const double sigma_w = model.basis.sigma_w;
  double numerator = 0.0;
  for (Index l = 0; l < r.size(); ++l) {
    if (r[l] == 0.0) continue;
    numerator += r[l] * std::exp(-(w - model.basis.centers_w.row(l).transpose()).squaredNorm() /
                                 (2.0 * sigma_w * sigma_w));
  }
  const double per_center_mass =
      std::pow(2.0 * std::numbers::pi * sigma_w * sigma_w, 0.5 * model.basis.dist_dim());
  return numerator / (r.sum() * per_center_mass);
}

namespace {

Vector draw_from_responses(const CdeModel& model, const Vector& r, double total,
                           RngStream& rng) {
  const double u = rng.uniform01() * total;
  Index component = r.size() - 1;
  double cum = 0.0;
  for (Index l = 0; l < r.size(); ++l) {
    cum += r[l];
    if (u < cum) {
      component = l;
      break;
    }
  }
  return model.basis.centers_w.row(component).transpose() +
         model.basis.sigma_w * rng.normal_vector(model.basis.dist_dim());
}

}  // namespace

Vector sample_conditional_one(const CdeModel& model, const Vector& x, RngStream& rng) {
  const Vector r = clipped_responses(model, x);
  return draw_from_responses(model, r, r.sum(), rng);
}

Matrix sample_conditional(const CdeModel& model, const Vector& x, Index count, RngStream& rng) {
  if (count < 1) throw std::invalid_argument("sample_conditional: need count >= 1");
  const Vector r = clipped_responses(model, x);
  const double total = r.sum();
  Matrix draws(count, model.basis.dist_dim());
  for (Index i = 0; i < count; ++i)
    draws.row(i) = draw_from_responses(model, r, total, rng).transpose();
  return draws;
}

CdeSelection cross_validate(const Dataset& dataset, const std::vector<double>& sigma_grid,
                            const std::vector<double>& lambda_grid, int folds, RngStream& rng) {
  if (sigma_grid.empty() || lambda_grid.empty())
    throw std::invalid_argument("cross_validate: empty grid");
  for (double s : sigma_grid)
    if (!(s > 0.0)) throw std::invalid_argument("cross_validate: sigma grid must be positive");
  for (double l : lambda_grid)
    if (!(l >= 0.0)) throw std::invalid_argument("cross_validate: lambda grid must be >= 0");
  const Index n_pairs = dataset.count();
  if (folds < 2) throw std::invalid_argument("cross_validate: need folds >= 2");
  if (n_pairs < folds) throw std::invalid_argument("cross_validate: dataset smaller than folds");

  std::vector<double> sigmas = sigma_grid;
  std::sort(sigmas.begin(), sigmas.end());
  sigmas.erase(std::unique(sigmas.begin(), sigmas.end()), sigmas.end());
  std::vector<double> lambdas = lambda_grid;
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  // Shared centers and standardization; bandwidths vary over the grid.
  RngStream center_stream = rng.substream(0x6365);
  const GaussianBasis proto = make_gaussian_basis(dataset, 100, 1.0, 1.0, center_stream);
  const Index b = proto.size();
  const Index s_dim = proto.dist_dim();

  const Matrix zx = standardize_rows(dataset.x, proto.x_mean, proto.x_scale);
  const Matrix zc = standardize_rows(proto.centers_x, proto.x_mean, proto.x_scale);
  const Matrix dist_x = pairwise_sqdist(zx, zc);
  const Matrix dist_w = pairwise_sqdist(dataset.w, proto.centers_w);
  const Matrix dist_cc = pairwise_sqdist(proto.centers_w, proto.centers_w);

  std::vector<Matrix> kx_cache, kw_cache, overlap_cache;
  for (double sx : sigmas) kx_cache.push_back(kernel_from_sqdist(dist_x, sx));
  for (double sw : sigmas) {
    kw_cache.push_back(kernel_from_sqdist(dist_w, sw));
    overlap_cache.push_back(overlap_from_sqdist(dist_cc, sw, s_dim));
  }

  // Shuffled contiguous folds.
  std::vector<Index> perm(n_pairs);
  for (Index i = 0; i < n_pairs; ++i) perm[i] = i;
  for (Index i = n_pairs - 1; i > 0; --i)
    std::swap(perm[i], perm[static_cast<Index>(rng.uniform_index(i + 1))]);
  std::vector<std::vector<Index>> fold_rows(folds), train_rows(folds);
  for (Index i = 0; i < n_pairs; ++i)
    fold_rows[static_cast<size_t>(i * folds / n_pairs)].push_back(perm[i]);
  for (int f = 0; f < folds; ++f)
    for (int g = 0; g < folds; ++g)
      if (g != f)
        train_rows[f].insert(train_rows[f].end(), fold_rows[g].begin(), fold_rows[g].end());

  CdeSelection best;
  double best_loss = std::numeric_limits<double>::infinity();
  bool found = false;

  // Ascending iteration + non-strict improvement resolves exact ties toward
  // larger lambda, then larger sigma_w, then larger sigma_x.
  for (size_t li = 0; li < lambdas.size(); ++li) {
    for (size_t wi = 0; wi < sigmas.size(); ++wi) {
      for (size_t xi = 0; xi < sigmas.size(); ++xi) {
        const Matrix& kx = kx_cache[xi];
        const Matrix& kw = kw_cache[wi];
        const Matrix& overlap = overlap_cache[wi];
        double loss_sum = 0.0;
        bool valid = true;
        for (int f = 0; f < folds && valid; ++f) {
          const Matrix kx_t = kx(train_rows[f], Eigen::all);
          const Matrix kw_t = kw(train_rows[f], Eigen::all);
          const double n_t = static_cast<double>(train_rows[f].size());
          Matrix h_t = (kx_t.transpose() * kx_t).cwiseProduct(overlap) / n_t;
          const Vector rhs_t = kx_t.cwiseProduct(kw_t).colwise().sum().transpose() / n_t;
          // Tiny stabilizer so lambda = 0 grid points stay solvable.
          h_t.diagonal().array() +=
              lambdas[li] + 1e-12 * h_t.trace() / static_cast<double>(b);
          const Vector beta = Eigen::LDLT<Matrix>(h_t).solve(rhs_t);

          const Matrix kx_v = kx(fold_rows[f], Eigen::all);
          const Matrix kw_v = kw(fold_rows[f], Eigen::all);
          const double n_v = static_cast<double>(fold_rows[f].size());
          const Matrix h_v = (kx_v.transpose() * kx_v).cwiseProduct(overlap) / n_v;
          const Vector rhs_v = kx_v.cwiseProduct(kw_v).colwise().sum().transpose() / n_v;
          const double loss = beta.dot(h_v * beta) - 2.0 * rhs_v.dot(beta);
          if (!std::isfinite(loss)) valid = false;
          loss_sum += loss;
        }
        if (!valid) continue;
        const double mean_loss = loss_sum / folds;
        if (!found || mean_loss <= best_loss) {
          best = CdeSelection{sigmas[xi], sigmas[wi], lambdas[li]};
          best_loss = mean_loss;
          found = true;
        }
      }
    }
  }
  if (!found) throw std::runtime_error("cross_validate: no grid point produced a finite loss");
  return best;
}

std::string cde_to_json(const CdeModel& model) {
  nlohmann::ordered_json j;
  auto matrix_rows = [](const Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows());
    for (Index i = 0; i < m.rows(); ++i)
      rows[i].assign(m.row(i).begin(), m.row(i).end());
    return rows;
  };
  j["centers_x"] = matrix_rows(model.basis.centers_x);
  j["centers_w"] = matrix_rows(model.basis.centers_w);
  j["sigma_x"] = model.basis.sigma_x;
  j["sigma_w"] = model.basis.sigma_w;
  j["lambda"] = model.lambda;
  j["beta"] = std::vector<double>(model.beta.begin(), model.beta.end());
  j["x_mean"] = std::vector<double>(model.basis.x_mean.begin(), model.basis.x_mean.end());
  j["x_scale"] = std::vector<double>(model.basis.x_scale.begin(), model.basis.x_scale.end());
  return j.dump(2);
}

CdeModel cde_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  auto to_matrix = [](const nlohmann::json& rows) {
    const Index r = static_cast<Index>(rows.size());
    const Index c = r > 0 ? static_cast<Index>(rows[0].size()) : 0;
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index k = 0; k < c; ++k) m(i, k) = rows[static_cast<size_t>(i)][static_cast<size_t>(k)];
    return m;
  };
  CdeModel model;
  model.basis.centers_x = to_matrix(j.at("centers_x"));
  model.basis.centers_w = to_matrix(j.at("centers_w"));
  model.basis.sigma_x = j.at("sigma_x").get<double>();
  model.basis.sigma_w = j.at("sigma_w").get<double>();
  model.lambda = j.at("lambda").get<double>();
  const auto beta = j.at("beta").get<std::vector<double>>();
  model.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
  model.beta_clipped = model.beta.cwiseMax(0.0);
  const auto mean = j.at("x_mean").get<std::vector<double>>();
  model.basis.x_mean = Eigen::Map<const Vector>(mean.data(), static_cast<Index>(mean.size()));
  const auto scale = j.at("x_scale").get<std::vector<double>>();
  model.basis.x_scale = Eigen::Map<const Vector>(scale.data(), static_cast<Index>(scale.size()));
  return model;
}

}  // namespace polyreach
