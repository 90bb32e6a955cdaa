#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "acceptance.hpp"
#include "oracles.hpp"
#include "stadr/harness.hpp"
#include "stadr/inference.hpp"
#include "stadr/scoring.hpp"
#include "stadr/spacetime.hpp"

namespace stadr::acceptance {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

ModelParameters perturbed(ModelKind kind, int n_per_axis, std::uint64_t seed, double spread) {
  ModelParameters p = ModelParameters::initial(kind, n_per_axis);
  RandomStream rng(seed);
  VectorXd x = p.packed();
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += spread * rng.normal();
  p.unpack(x);
  return p;
}

// ---------------------------------------------------------------------------

Outcome dense_oracle() {
  struct Case {
    int m, n, buffer, t;
  };
  double worst = 0.0;
  int checked = 0;
  auto check = [&](const GridSpec& g, const CoefficientFieldValues& f) {
    const MatrixXd a(evolution_matrix(g, f.evolution.kappa2, f.evolution.h, f.omega));
    const MatrixXd q0 =
        oracle::matern_precision_dense(g, f.initial.kappa2, MatrixXd(diffusion_matrix(g, f.initial.h)));
    const MatrixXd qf = oracle::matern_precision_dense(
        g, f.evolution.kappa2, oracle::diagonal_diffusion_dense(g, AnisotropyField::isotropic(g, 1.0)));
    const MatrixXd dense =
        oracle::precision_from_forward_map(a, q0, qf, g.cell_volume(), f.tau, g.dt(), g.num_times());
    const MatrixXd sparse(assemble_precision(g, f).q);
    worst = std::max(worst, (sparse - dense).norm() / dense.norm());
    ++checked;
  };
  for (const Case c : {Case{2, 2, 1, 4}, Case{4, 4, 0, 3}, Case{3, 2, 0, 4}, Case{2, 2, 1, 2}}) {
    const GridSpec g = build_grid({0, 4, 0, 4}, c.m, c.n, c.buffer, c.t, 0.3);
    for (std::uint64_t s = 1; s <= 3; ++s) {
      ModelParameters p = perturbed(ModelKind::NStatAD, 2, s, 0.5);
      p.block(AdBlock::OmegaE1).array() += 2.0;
      p.block(AdBlock::OmegaE2).array() -= 1.0;
      check(g, FieldAssembler(g, ModelKind::NStatAD, 2).assemble(p));
      ModelParameters q = perturbed(ModelKind::StatAD, 1, 10 + s, 0.5);
      q.block(AdBlock::OmegaE1).array() -= 1.5;
      check(g, FieldAssembler(g, ModelKind::StatAD, 1).assemble(q));
    }
    const GridSpec gt = build_grid({0, 15, 0, 15}, c.m, c.n, c.buffer, c.t, 0.3);
    check(gt, true_model_fields(gt));
  }
  return {worst <= 1e-8, "max relative Frobenius error " + fmt(worst) + " over " + std::to_string(checked) +
                             " models on grids up to 4x4x4 (tol 1e-8)"};
}

// ---------------------------------------------------------------------------

Outcome stationary_covariance() {
  // h = 0.25, 80 x 80 interior cells, 20 buffer cells (5 length units, about
  // twice the practical range sqrt(8)) on every side.
  const GridSpec g = build_grid({0, 20, 0, 20}, 80, 80, 20, 1, 1.0);
  ModelParameters p = ModelParameters::zeros(ModelKind::StatAD, 1);  // kappa = 1, H = I, omega = 0
  const auto model = SpaceTimeModel::create(g, FieldAssembler(g, ModelKind::StatAD, 1).assemble(p));

  const std::vector<int> lags{1, 2, 3, 4, 6, 8, 10, 12, 14, 16};
  const int samples = 2000;
  const int b = g.buffer();
  double sum_sq = 0.0;
  long long n_sq = 0;
  std::vector<double> cross(lags.size(), 0.0), norm_a(lags.size(), 0.0), norm_b(lags.size(), 0.0);
  RandomStream rng(2024);
  for (int s = 0; s < samples; ++s) {
    const VectorXd x = model->simulate(rng);
    for (int j = b; j < b + g.n(); ++j)
      for (int i = b; i < b + g.m(); ++i) {
        const double xi = x[g.flat(i, j)];
        sum_sq += xi * xi;
        ++n_sq;
        for (size_t l = 0; l < lags.size(); ++l) {
          const int d = lags[l];
          if (i + d < b + g.m()) {
            const double xo = x[g.flat(i + d, j)];
            cross[l] += xi * xo, norm_a[l] += xi * xi, norm_b[l] += xo * xo;
          }
          if (j + d < b + g.n()) {
            const double xo = x[g.flat(i, j + d)];
            cross[l] += xi * xo, norm_a[l] += xi * xi, norm_b[l] += xo * xo;
          }
        }
      }
  }
  const double variance = sum_sq / static_cast<double>(n_sq);
  const double target = 1.0 / (4.0 * std::numbers::pi);
  const double var_err = std::abs(variance - target) / target;
  double worst = 0.0;
  std::vector<double> errors;
  for (size_t l = 0; l < lags.size(); ++l) {
    const double r = lags[l] * g.hx();
    const double empirical = cross[l] / std::sqrt(norm_a[l] * norm_b[l]);
    const double exact = r * std::cyl_bessel_k(1.0, r);  // kappa r K_1(kappa r), kappa = 1
    errors.push_back(std::round(1e4 * (empirical - exact)) / 1e4);
    worst = std::max(worst, std::abs(empirical - exact));
  }
  return {var_err <= 0.10 && worst <= 0.05,
          "variance " + fmt(variance, 5) + " vs 1/(4 pi) = " + fmt(target, 5) + " (rel err " + fmt(var_err) +
              ", tol 0.10); correlation errors at r = 0.25..4 [" + join(errors) + "], max " + fmt(worst) +
              " (tol 0.05); " + std::to_string(samples) + " samples"};
}

// ---------------------------------------------------------------------------

Outcome conservation() {
  const GridSpec g = build_grid({0, 12, 0, 10}, 12, 10, 3, 2, 1.0);
  double worst_w = 0.0, worst_h = 0.0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    ModelParameters p = perturbed(ModelKind::NStatAD, 3, 500 + s, 1.0);
    p.block(AdBlock::OmegaE1) *= 5.0;
    p.block(AdBlock::OmegaE2) *= 5.0;
    const auto f = FieldAssembler(g, ModelKind::NStatAD, 3).assemble(p);
    for (auto [m, worst] : {std::pair{advection_matrix(g, f.omega), &worst_w},
                            std::pair{diffusion_matrix(g, f.evolution.h), &worst_h}}) {
      const MatrixXd d(m);
      const double scale = d.cwiseAbs().maxCoeff();
      *worst = std::max(*worst, d.colwise().sum().cwiseAbs().maxCoeff() / scale);
    }
  }
  return {worst_w <= 1e-12 && worst_h <= 1e-12, "max |column sum| / max |entry|: A_omega " + fmt(worst_w) +
                                                     ", A_H " + fmt(worst_h) + " over 20 draws (tol 1e-12)"};
}

// ---------------------------------------------------------------------------

Outcome separable_ar1() {
  const GridSpec g = build_grid({0, 10, 0, 10}, 10, 10, 2, 6, 1.0);
  ModelParameters p = ModelParameters::zeros(ModelKind::NStatSep, 3);
  p.block(SepBlock::LogKappa).setConstant(std::log(0.8));
  p.block(SepBlock::LogGamma).setConstant(0.0);
  p.block(SepBlock::V1).setConstant(0.4);
  p.block(SepBlock::V2).setConstant(-0.2);
  p.set_ar_coefficient(0.7);
  const auto model = SpaceTimeModel::create(g, FieldAssembler(g, ModelKind::NStatSep, 3).assemble(p));
  const int k = g.num_cells(), t = g.num_times();
  const std::vector<int> cells = interior_cells(g);
  std::vector<double> cross(5, 0.0), na(5, 0.0), nb(5, 0.0);
  RandomStream rng(77);
  for (int s = 0; s < 1000; ++s) {
    const VectorXd x = model->simulate(rng);
    for (int lag = 1; lag <= 4; ++lag)
      for (int t0 = 0; t0 + lag < t; ++t0)
        for (int c : cells) {
          const double a = x[t0 * k + c], b = x[(t0 + lag) * k + c];
          cross[lag] += a * b, na[lag] += a * a, nb[lag] += b * b;
        }
  }
  double worst = 0.0;
  std::vector<double> corr;
  for (int lag = 1; lag <= 4; ++lag) {
    const double c = cross[lag] / std::sqrt(na[lag] * nb[lag]);
    corr.push_back(c);
    worst = std::max(worst, std::abs(c - std::pow(0.7, lag)));
  }
  return {worst <= 0.05, "lag 1..4 correlation [" + join(corr) + "] vs [0.7, 0.49, 0.343, 0.2401], max error " +
                             fmt(worst) + " (tol 0.05), 1000 samples"};
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const GridSpec g = build_grid({0, 4, 0, 4}, 4, 4, 0, 3, 0.5);
  ModelParameters truth = perturbed(ModelKind::StatAD, 1, 8, 0.3);
  truth.block(AdBlock::OmegaE1).setConstant(0.8);
  truth.block(AdBlock::OmegaE2).setConstant(-0.5);
  truth.log_sigma_n2() = std::log(0.05);
  const auto model = SpaceTimeModel::create(g, FieldAssembler(g, ModelKind::StatAD, 1).assemble(truth));
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(g.latent_size()); i += 2) idx.push_back(i);
  Dataset data;
  data.design = ObservationDesign(static_cast<Eigen::Index>(g.latent_size()), idx);
  RandomStream rng(31);
  for (int r = 0; r < 3; ++r) {
    VectorXd y = data.design.apply(model->simulate(rng));
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += std::sqrt(truth.sigma_n2()) * rng.normal();
    data.replicates.push_back(y);
  }
  Objective obj(g, ModelKind::StatAD, 1, data);
  ModelParameters at = perturbed(ModelKind::StatAD, 1, 19, 0.3);
  at.block(AdBlock::OmegaE1).setConstant(0.5);
  at.block(AdBlock::OmegaE2).setConstant(-0.3);
  at.log_sigma_n2() = std::log(0.08);

  const VectorXd exact = obj.evaluate_exact(at).gradient;
  // Central differences with one Richardson step (error O(h^4)).
  const VectorXd x0 = at.packed();
  auto central = [&](Eigen::Index i, double h) {
    ModelParameters plus = at, minus = at;
    VectorXd xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    plus.unpack(xp);
    minus.unpack(xm);
    return (obj.log_posterior(plus) - obj.log_posterior(minus)) / (2 * h);
  };
  double worst_fd = 0.0;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    const double fd = (4.0 * central(i, 5e-4) - central(i, 1e-3)) / 3.0;
    worst_fd = std::max(worst_fd, std::abs(exact[i] - fd) / std::abs(fd));
  }

  const int seeds = 200;
  MatrixXd draws(seeds, x0.size());
  for (int s = 0; s < seeds; ++s)
    draws.row(s) = obj.evaluate(at, {1, static_cast<std::uint64_t>(s + 1), 1}).gradient.transpose();
  const VectorXd mean = draws.colwise().mean().transpose();
  double worst_z = 0.0;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    const double sd = std::sqrt((draws.col(i).array() - mean[i]).square().sum() / (seeds - 1));
    const double se = sd / std::sqrt(static_cast<double>(seeds));
    worst_z = std::max(worst_z, std::abs(mean[i] - exact[i]) / std::max(se, 1e-300));
  }
  return {worst_fd <= 1e-4 && worst_z <= 3.0,
          "exact vs finite differences: max relative error " + fmt(worst_fd) + " over " +
              std::to_string(x0.size()) + " coordinates (tol 1e-4); Hutchinson mean over 200 seeds: max |z| " +
              fmt(worst_z) + " (tol 3)"};
}

// ---------------------------------------------------------------------------

Outcome closed_forms() {
  const double c = crps_gaussian(0.0, 1.0, 0.0);
  const bool crps_ok = std::abs(c - 0.2336949773) <= 1e-9;
  const bool rmse_ok = rmse(Eigen::Vector2d(3, 0), Eigen::Vector2d(0, 4)) == std::sqrt(12.5) &&
                       rmse(Eigen::Vector4d(1, 1, 1, 1), Eigen::Vector4d(3, -1, 3, -1)) == 2.0 &&
                       rmse(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 3)) == 0.0 &&
                       rmse(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 2, 2)) == std::sqrt(3.0);
  std::ostringstream os;
  os.precision(12);
  os << "crps_gaussian(0, 1, 0) = " << c << " (target 0.2336949773, tol 1e-9); RMSE examples "
     << (rmse_ok ? "exact" : "mismatch");
  return {crps_ok && rmse_ok, os.str()};
}

Outcome parameter_counts() {
  const int ad = ModelParameters::initial(ModelKind::NStatAD, 3).num_covariance_params();
  const int sep = ModelParameters::initial(ModelKind::NStatSep, 3).num_covariance_params();
  const int stat = ModelParameters::initial(ModelKind::StatAD, 3).num_covariance_params();
  return {ad == 91 && sep == 37 && stat == 11, "NStat-AD " + std::to_string(ad) + ", NStat-Sep " +
                                                   std::to_string(sep) + ", Stat-AD " + std::to_string(stat) +
                                                   " (expected 91 / 37 / 11)"};
}

}  // namespace

std::vector<Criterion> math_criteria() {
  return {
      {1, "dense-oracle precision equivalence", 10.0, dense_oracle},
      {2, "stationary covariance reproduction", 300.0, stationary_covariance},
      {3, "conservation of A_omega and A_H", 60.0, conservation},
      {4, "separable AR(1) temporal correlation", 120.0, separable_ar1},
      {5, "gradient correctness", 120.0, gradient_correctness},
      {6, "CRPS and RMSE closed forms", 1.0, closed_forms},
      {7, "parameter-count contract", 1.0, parameter_counts},
  };
}

}  // namespace stadr::acceptance
