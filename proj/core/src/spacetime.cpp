#include "stadr/spacetime.hpp"

#include <cmath>
#include <stdexcept>

namespace stadr {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void factor_or_throw(SparseLU& lu, const SparseMatrix& m, const char* what) {
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw std::runtime_error(std::string(what) + " is singular");
}

SparseMatrix symmetrized(const SparseMatrix& m) {
  SparseMatrix t = m.transpose();
  SparseMatrix s = 0.5 * (m + t);
  s.makeCompressed();
  return s;
}

void append_block(std::vector<Triplet>& trips, const SparseMatrix& block, int row0, int col0, double sign = 1.0) {
  for (int k = 0; k < block.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(block, k); it; ++it)
      trips.emplace_back(row0 + it.row(), col0 + it.col(), sign * it.value());
}

void check_fields(const GridSpec& grid, const CoefficientFieldValues& f) {
  if (f.evolution.kappa2.size() != grid.num_cells()) throw std::invalid_argument("kappa field does not match the grid");
  if (f.kind != ModelKind::NStatSep) {
    if (f.initial.kappa2.size() != grid.num_cells())
      throw std::invalid_argument("initial kappa field does not match the grid");
    if (!(f.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  } else if (!(std::abs(f.ar_coefficient) < 1.0)) {
    throw std::invalid_argument("temporal correlation must lie in (-1, 1)");
  }
}

MatrixXd as_blocks(const VectorXd& x, int k, int t) {
  if (x.size() != static_cast<Eigen::Index>(k) * t) throw std::invalid_argument("space-time vector has the wrong length");
  return Eigen::Map<const MatrixXd>(x.data(), k, t);
}

VectorXd flatten(const MatrixXd& m) { return Eigen::Map<const VectorXd>(m.data(), m.size()); }

SparseMatrix forcing_operator_for(const GridSpec& grid, const CoefficientFieldValues& f) {
  return whittle_matern_operator(grid, f.evolution.kappa2, AnisotropyField::isotropic(grid, 1.0));
}

}  // namespace

double log_abs_det(const SparseLU& lu) { return lu.logAbsDeterminant(); }

Eigen::VectorXd solve_transposed(const SparseLU& lu, const Eigen::VectorXd& b) {
  // transpose() only builds a view; the factorization is not modified.
  return const_cast<SparseLU&>(lu).transpose().solve(b);
}

SparseMatrix evolution_matrix(const GridSpec& grid, const VectorXd& kappa2, const AnisotropyField& h,
                              const AdvectionField& omega) {
  const double dt = grid.dt();
  SparseMatrix a = volume_matrix(grid) + dt * (whittle_matern_operator(grid, kappa2, h) + advection_matrix(grid, omega));
  a.makeCompressed();
  return a;
}

Eigen::MatrixXd ar1_precision(int num_times, double a) {
  if (num_times < 1) throw std::invalid_argument("need at least one time point");
  if (!(std::abs(a) < 1.0)) throw std::invalid_argument("temporal correlation must lie in (-1, 1)");
  MatrixXd p = MatrixXd::Zero(num_times, num_times);
  if (num_times == 1) {
    p(0, 0) = 1.0;
    return p;
  }
  const double c = 1.0 / (1.0 - a * a);
  for (int t = 0; t < num_times; ++t) {
    p(t, t) = (t == 0 || t == num_times - 1) ? c : c * (1.0 + a * a);
    if (t + 1 < num_times) p(t, t + 1) = p(t + 1, t) = -a * c;
  }
  return p;
}

Eigen::MatrixXd ar1_covariance(int num_times, double a) {
  MatrixXd s(num_times, num_times);
  for (int i = 0; i < num_times; ++i)
    for (int j = 0; j < num_times; ++j) s(i, j) = std::pow(a, std::abs(i - j));
  return s;
}

SpaceTimePrecision assemble_precision_ad(const GridSpec& grid, const CoefficientFieldValues& f) {
  check_fields(grid, f);
  const int k = grid.num_cells();
  const int t = grid.num_times();
  const double vol = grid.cell_volume();
  SpaceTimePrecision out;
  out.kind = f.kind;
  out.num_cells = k;
  out.num_times = t;
  out.initial = whittle_matern_precision(grid, f.initial.kappa2, f.initial.h);

  const SparseMatrix a = evolution_matrix(grid, f.evolution.kappa2, f.evolution.h, f.omega);
  const SparseMatrix k_f = forcing_operator_for(grid, f);
  const double scale = 1.0 / (f.tau * f.tau * grid.dt() * vol * vol * vol);
  const SparseMatrix p = symmetrized(scale * SparseMatrix(k_f.transpose() * k_f));
  const SparseMatrix pa = p * a;
  out.f_inv = symmetrized(SparseMatrix(a.transpose() * pa));
  out.gt_f_inv = vol * pa;
  out.gt_f_inv.makeCompressed();
  out.gt_f_inv_g = (vol * vol) * p;

  std::vector<Triplet> trips;
  const size_t per_block = static_cast<size_t>(out.f_inv.nonZeros() + out.gt_f_inv_g.nonZeros());
  trips.reserve(per_block * static_cast<size_t>(t) + 2 * static_cast<size_t>(out.gt_f_inv.nonZeros()) * t);
  const SparseMatrix upper_t = out.gt_f_inv.transpose();
  for (int n = 0; n < t; ++n) {
    const int o = n * k;
    if (n == 0) append_block(trips, out.initial, o, o);
    else append_block(trips, out.f_inv, o, o);
    if (n + 1 < t) {
      append_block(trips, out.gt_f_inv_g, o, o);
      append_block(trips, out.gt_f_inv, o, o + k, -1.0);
      append_block(trips, upper_t, o + k, o, -1.0);
    }
  }
  out.q.resize(k * t, k * t);
  out.q.setFromTriplets(trips.begin(), trips.end());
  out.q.makeCompressed();
  return out;
}

SpaceTimePrecision assemble_precision_sep(const GridSpec& grid, const CoefficientFieldValues& f) {
  check_fields(grid, f);
  const int k = grid.num_cells();
  const int t = grid.num_times();
  SpaceTimePrecision out;
  out.kind = f.kind;
  out.num_cells = k;
  out.num_times = t;
  out.initial = whittle_matern_precision(grid, f.evolution.kappa2, f.evolution.h);
  const MatrixXd p_t = ar1_precision(t, f.ar_coefficient);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(out.initial.nonZeros()) * static_cast<size_t>(3 * t));
  for (int r = 0; r < t; ++r)
    for (int c = std::max(0, r - 1); c <= std::min(t - 1, r + 1); ++c)
      for (int col = 0; col < out.initial.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(out.initial, col); it; ++it)
          trips.emplace_back(r * k + it.row(), c * k + it.col(), p_t(r, c) * it.value());
  out.q.resize(k * t, k * t);
  out.q.setFromTriplets(trips.begin(), trips.end());
  out.q.makeCompressed();
  return out;
}

SpaceTimePrecision assemble_precision(const GridSpec& grid, const CoefficientFieldValues& fields) {
  return fields.kind == ModelKind::NStatSep ? assemble_precision_sep(grid, fields) : assemble_precision_ad(grid, fields);
}

SpaceTimePrecision assemble_precision(const ModelParameters& params, const GridSpec& grid) {
  return assemble_precision(grid, assemble_fields(params, params.basis(grid), grid));
}

SpaceTimeModel::SpaceTimeModel(GridSpec grid, CoefficientFieldValues fields)
    : grid_(std::move(grid)), fields_(std::move(fields)) {
  check_fields(grid_, fields_);
}

const SpaceTimePrecision& SpaceTimeModel::precision() const {
  if (!assembled_) assembled_ = std::make_unique<SpaceTimePrecision>(assemble_precision(grid_, fields_));
  return *assembled_;
}

std::unique_ptr<SpaceTimeModel> SpaceTimeModel::create(const GridSpec& grid, const CoefficientFieldValues& fields) {
  if (fields.kind == ModelKind::NStatSep) return std::make_unique<SeparableModel>(grid, fields);
  return std::make_unique<AdvectionDiffusionModel>(grid, fields);
}

// ---------------------------------------------------------------------------

AdvectionDiffusionModel::AdvectionDiffusionModel(GridSpec grid, CoefficientFieldValues fields)
    : SpaceTimeModel(std::move(grid), std::move(fields)) {
  if (fields_.kind == ModelKind::NStatSep) throw std::invalid_argument("separable fields given to the advection-diffusion model");
  a_ = evolution_matrix(grid_, fields_.evolution.kappa2, fields_.evolution.h, fields_.omega);
  k_f_ = forcing_operator_for(grid_, fields_);
  k_i_ = whittle_matern_operator(grid_, fields_.initial.kappa2, fields_.initial.h);
  k_f_.makeCompressed();
  k_i_.makeCompressed();
  const double vol = grid_.cell_volume();
  scale_ = 1.0 / (fields_.tau * fields_.tau * grid_.dt() * vol * vol * vol);
  factor_or_throw(lu_i_, k_i_, "initial-condition operator");
  if (grid_.num_times() > 1) {
    factor_or_throw(lu_a_, a_, "evolution matrix");
    factor_or_throw(lu_f_, k_f_, "forcing operator");
  }
}

Eigen::MatrixXd AdvectionDiffusionModel::residuals(const VectorXd& x) const {
  const int k = num_cells();
  const int t = num_times();
  const MatrixXd xs = as_blocks(x, k, t);
  const double vol = grid_.cell_volume();
  MatrixXd r(k, std::max(t - 1, 0));
  for (int n = 0; n + 1 < t; ++n) r.col(n) = a_ * xs.col(n + 1) - vol * xs.col(n);
  return r;
}

double AdvectionDiffusionModel::quadratic(const VectorXd& x, const VectorXd& y) const {
  const int k = num_cells();
  const double vol = grid_.cell_volume();
  const VectorXd gx0 = k_i_ * x.head(k);
  const VectorXd gy0 = k_i_ * y.head(k);
  double out = gx0.dot(gy0) / vol;
  if (num_times() > 1) {
    const MatrixXd rx = k_f_ * residuals(x);
    const MatrixXd ry = k_f_ * residuals(y);
    out += scale_ * (rx.array() * ry.array()).sum();
  }
  return out;
}

VectorXd AdvectionDiffusionModel::multiply(const VectorXd& x) const {
  const int k = num_cells();
  const int t = num_times();
  const double vol = grid_.cell_volume();
  MatrixXd w(k, t);
  w.col(0) = k_i_.transpose() * (k_i_ * x.head(k)) / vol;
  if (t > 1) {
    const MatrixXd r = residuals(x);
    w.rightCols(t - 1) = scale_ * (k_f_.transpose() * (k_f_ * r));
  }
  MatrixXd out(k, t);
  for (int n = 0; n < t; ++n) {
    out.col(n) = n == 0 ? VectorXd(w.col(0)) : VectorXd(a_.transpose() * w.col(n));
    if (n + 1 < t) out.col(n) -= vol * w.col(n + 1);
  }
  return flatten(out);
}

double AdvectionDiffusionModel::log_det() const {
  const int k = num_cells();
  const int t = num_times();
  const double log_vol = std::log(grid_.cell_volume());
  double out = 2.0 * log_abs_det(lu_i_) - k * log_vol;
  if (t > 1) {
    const double log_p = 2.0 * log_abs_det(lu_f_) + k * std::log(scale_);
    out += (t - 1) * (log_p + 2.0 * log_abs_det(lu_a_));
  }
  return out;
}

VectorXd AdvectionDiffusionModel::solve(const VectorXd& b) const {
  const int k = num_cells();
  const int t = num_times();
  const double vol = grid_.cell_volume();
  const MatrixXd xi = as_blocks(b, k, t);
  // L^T z = xi
  MatrixXd z(k, t);
  for (int n = t - 1; n >= 1; --n) {
    VectorXd rhs = xi.col(n);
    if (n + 1 < t) rhs += vol * z.col(n + 1);
    z.col(n) = solve_transposed(lu_a_, rhs);
  }
  z.col(0) = xi.col(0);
  if (t > 1) z.col(0) += vol * z.col(1);
  // W^{-1}
  MatrixXd w(k, t);
  w.col(0) = lu_i_.solve(VectorXd(vol * solve_transposed(lu_i_, z.col(0))));
  for (int n = 1; n < t; ++n) w.col(n) = lu_f_.solve(VectorXd(solve_transposed(lu_f_, z.col(n)))) / scale_;
  // L x = w
  MatrixXd x(k, t);
  x.col(0) = w.col(0);
  for (int n = 1; n < t; ++n) x.col(n) = lu_a_.solve(VectorXd(w.col(n) + vol * x.col(n - 1)));
  return flatten(x);
}

VectorXd AdvectionDiffusionModel::apply_inverse_sqrt(const VectorXd& z) const {
  const int k = num_cells();
  const int t = num_times();
  if (z.size() != size()) throw std::invalid_argument("noise vector has the wrong length");
  const double vol = grid_.cell_volume();
  MatrixXd x(k, t);
  x.col(0) = lu_i_.solve(VectorXd(std::sqrt(vol) * z.head(k)));
  const double noise_scale = 1.0 / std::sqrt(scale_);
  for (int n = 1; n < t; ++n) {
    const VectorXd e = noise_scale * lu_f_.solve(VectorXd(z.segment(static_cast<Eigen::Index>(n) * k, k)));
    x.col(n) = lu_a_.solve(VectorXd(vol * x.col(n - 1) + e));
  }
  return flatten(x);
}

// ---------------------------------------------------------------------------

SeparableModel::SeparableModel(GridSpec grid, CoefficientFieldValues fields)
    : SpaceTimeModel(std::move(grid), std::move(fields)) {
  if (fields_.kind != ModelKind::NStatSep) throw std::invalid_argument("advection-diffusion fields given to the separable model");
  k_ = whittle_matern_operator(grid_, fields_.evolution.kappa2, fields_.evolution.h);
  k_.makeCompressed();
  factor_or_throw(lu_k_, k_, "spatial operator");
  p_t_ = ar1_precision(num_times(), fields_.ar_coefficient);
}

double SeparableModel::quadratic(const VectorXd& x, const VectorXd& y) const {
  const int k = num_cells();
  const int t = num_times();
  const MatrixXd gx = k_ * as_blocks(x, k, t);
  const MatrixXd gy = k_ * as_blocks(y, k, t);
  const MatrixXd c = gx.transpose() * gy / grid_.cell_volume();
  return (c.array() * p_t_.array()).sum();
}

VectorXd SeparableModel::multiply(const VectorXd& x) const {
  const int k = num_cells();
  const int t = num_times();
  const MatrixXd g = k_ * as_blocks(x, k, t);
  const MatrixXd qs = k_.transpose() * g / grid_.cell_volume();
  return flatten(qs * p_t_);
}

double SeparableModel::log_det() const {
  const int k = num_cells();
  const int t = num_times();
  const double a = fields_.ar_coefficient;
  const double log_pt = t > 1 ? -(t - 1) * std::log(1.0 - a * a) : 0.0;
  const double log_qs = 2.0 * log_abs_det(lu_k_) - k * std::log(grid_.cell_volume());
  return k * log_pt + t * log_qs;
}

VectorXd SeparableModel::solve(const VectorXd& b) const {
  const int k = num_cells();
  const int t = num_times();
  const MatrixXd rhs = as_blocks(b, k, t) * ar1_covariance(t, fields_.ar_coefficient);
  MatrixXd out(k, t);
  for (int n = 0; n < t; ++n)
    out.col(n) = lu_k_.solve(VectorXd(grid_.cell_volume() * solve_transposed(lu_k_, rhs.col(n))));
  return flatten(out);
}

VectorXd SeparableModel::apply_inverse_sqrt(const VectorXd& z) const {
  const int k = num_cells();
  const int t = num_times();
  if (z.size() != size()) throw std::invalid_argument("noise vector has the wrong length");
  const double a = fields_.ar_coefficient;
  const double sv = std::sqrt(grid_.cell_volume());
  MatrixXd x(k, t);
  x.col(0) = lu_k_.solve(VectorXd(sv * z.head(k)));
  for (int n = 1; n < t; ++n)
    x.col(n) = a * x.col(n - 1) +
               std::sqrt(1.0 - a * a) * lu_k_.solve(VectorXd(sv * z.segment(static_cast<Eigen::Index>(n) * k, k)));
  return flatten(x);
}

}  // namespace stadr
