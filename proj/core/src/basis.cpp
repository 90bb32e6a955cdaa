#include "stadr/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stadr {

SplineBasis1D::SplineBasis1D(double lo, double hi, int count, int degree) : lo_(lo), hi_(hi), count_(count) {
  if (degree < 0) throw std::invalid_argument("SplineBasis1D: degree must be non-negative");
  if (count < 1) throw std::invalid_argument("SplineBasis1D: need at least one basis function");
  if (!(lo < hi)) throw std::invalid_argument("SplineBasis1D: lo must be below hi");
  degree_ = std::min(degree, count - 1);
  const int interior = count - degree_ - 1;
  knots_.reserve(count + degree_ + 1);
  for (int k = 0; k <= degree_; ++k) knots_.push_back(lo);
  for (int k = 1; k <= interior; ++k) knots_.push_back(lo + (hi - lo) * k / (interior + 1));
  for (int k = 0; k <= degree_; ++k) knots_.push_back(hi);
}

Eigen::VectorXd SplineBasis1D::eval(double x) const {
  const double tol = 1e-12 * (hi_ - lo_);
  if (x < lo_ - tol || x > hi_ + tol) throw std::invalid_argument("SplineBasis1D::eval: point outside basis support");
  x = std::clamp(x, lo_, hi_);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(count_);
  const int p = degree_;
  // Knot span index s with knots[s] <= x < knots[s+1]; the right end belongs to the last span.
  int span = count_ - 1;
  if (x < hi_) {
    span = static_cast<int>(std::upper_bound(knots_.begin(), knots_.end(), x) - knots_.begin()) - 1;
    span = std::clamp(span, p, count_ - 1);
  }
  // Cox-de Boor, nonzero functions only.
  std::vector<double> n(p + 1, 0.0), left(p + 1, 0.0), right(p + 1, 0.0);
  n[0] = 1.0;
  for (int d = 1; d <= p; ++d) {
    left[d] = x - knots_[span + 1 - d];
    right[d] = knots_[span + d] - x;
    double saved = 0.0;
    for (int r = 0; r < d; ++r) {
      const double denom = right[r + 1] + left[d - r];
      const double temp = denom != 0.0 ? n[r] / denom : 0.0;
      n[r] = saved + right[r + 1] * temp;
      saved = left[d - r] * temp;
    }
    n[d] = saved;
  }
  for (int r = 0; r <= p; ++r) out[span - p + r] = n[r];
  return out;
}

SplineBasis build_basis(const GridSpec& grid, int n_per_axis, int degree) {
  if (degree < 0) throw std::invalid_argument("build_basis: degree must be non-negative");
  if (n_per_axis < 1) throw std::invalid_argument("build_basis: need at least one function per axis");
  const auto& b = grid.buffered();
  return SplineBasis(SplineBasis1D(b.x_min, b.x_max, n_per_axis, degree),
                     SplineBasis1D(b.y_min, b.y_max, n_per_axis, degree));
}

Eigen::VectorXd eval_tensor_basis(const SplineBasis& basis, const GridSpec& grid, Point p) {
  if (!grid.contains(p)) throw std::invalid_argument("eval_tensor_basis: point outside buffered domain");
  const Eigen::VectorXd bx = basis.x_basis().eval(p.x);
  const Eigen::VectorXd by = basis.y_basis().eval(p.y);
  Eigen::VectorXd out(basis.size());
  for (int i = 0; i < basis.nx(); ++i)
    for (int j = 0; j < basis.ny(); ++j) out[i * basis.ny() + j] = bx[i] * by[j];
  return out;
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::NStatAD: return "nstat-ad";
    case ModelKind::StatAD: return "stat-ad";
    case ModelKind::NStatSep: return "nstat-sep";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "nstat-ad") return ModelKind::NStatAD;
  if (name == "stat-ad") return ModelKind::StatAD;
  if (name == "nstat-sep") return ModelKind::NStatSep;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// ModelParameters

ModelParameters ModelParameters::zeros(ModelKind kind, int n_per_axis) {
  if (n_per_axis < 1) throw std::invalid_argument("ModelParameters: n_per_axis must be positive");
  ModelParameters p;
  p.kind_ = kind;
  p.n_per_axis_ = kind == ModelKind::StatAD ? 1 : n_per_axis;
  p.block_size_ = p.n_per_axis_ * p.n_per_axis_;
  p.theta_ = Eigen::VectorXd::Zero(p.num_blocks() * p.block_size_ + 1);
  p.log_sigma_n2_ = std::log(1e-2);
  return p;
}

// H = gamma I + v v^T has zero derivative in v at v = 0, so fits must start
// with v off zero.
constexpr double kInitialAnisotropy = 0.1;

ModelParameters ModelParameters::initial(ModelKind kind, int n_per_axis) {
  ModelParameters p = zeros(kind, n_per_axis);
  if (kind == ModelKind::NStatSep) {
    p.block(SepBlock::LogKappa).setConstant(-1.0);
    p.block(SepBlock::LogGamma).setConstant(-1.0);
    p.block(SepBlock::V1).setConstant(kInitialAnisotropy);
    p.block(SepBlock::V2).setConstant(kInitialAnisotropy);
    p.set_ar_coefficient(0.5);
  } else {
    for (auto b : {AdBlock::LogKappaE, AdBlock::LogGammaE, AdBlock::LogKappaI, AdBlock::LogGammaI})
      p.block(b).setConstant(-1.0);
    for (auto b : {AdBlock::VE1, AdBlock::VE2, AdBlock::VI1, AdBlock::VI2}) p.block(b).setConstant(kInitialAnisotropy);
    p.set_log_tau(0.0);
  }
  return p;
}

int ModelParameters::num_blocks() const {
  return kind_ == ModelKind::NStatSep ? kSepBlockCount : kAdBlockCount;
}

double ModelParameters::sigma_n2() const { return std::exp(log_sigma_n2_); }

Eigen::Ref<Eigen::VectorXd> ModelParameters::block(AdBlock b) {
  if (kind_ == ModelKind::NStatSep) throw std::logic_error("advection-diffusion block on separable parameters");
  return theta_.segment(block_offset(static_cast<int>(b)), block_size_);
}

Eigen::Ref<const Eigen::VectorXd> ModelParameters::block(AdBlock b) const {
  if (kind_ == ModelKind::NStatSep) throw std::logic_error("advection-diffusion block on separable parameters");
  return theta_.segment(block_offset(static_cast<int>(b)), block_size_);
}

Eigen::Ref<Eigen::VectorXd> ModelParameters::block(SepBlock b) {
  if (kind_ != ModelKind::NStatSep) throw std::logic_error("separable block on advection-diffusion parameters");
  return theta_.segment(block_offset(static_cast<int>(b)), block_size_);
}

Eigen::Ref<const Eigen::VectorXd> ModelParameters::block(SepBlock b) const {
  if (kind_ != ModelKind::NStatSep) throw std::logic_error("separable block on advection-diffusion parameters");
  return theta_.segment(block_offset(static_cast<int>(b)), block_size_);
}

double ModelParameters::log_tau() const {
  if (kind_ == ModelKind::NStatSep) throw std::logic_error("separable model has no tau");
  return theta_[scalar_index()];
}

void ModelParameters::set_log_tau(double v) {
  if (kind_ == ModelKind::NStatSep) throw std::logic_error("separable model has no tau");
  theta_[scalar_index()] = v;
}

double ModelParameters::ar_coefficient() const {
  if (kind_ != ModelKind::NStatSep) throw std::logic_error("only the separable model has an AR coefficient");
  return std::tanh(theta_[scalar_index()]);
}

void ModelParameters::set_ar_coefficient(double a) {
  if (kind_ != ModelKind::NStatSep) throw std::logic_error("only the separable model has an AR coefficient");
  if (!(std::abs(a) < 1.0)) throw std::invalid_argument("AR coefficient must satisfy |a| < 1");
  theta_[scalar_index()] = std::atanh(a);
}

Eigen::VectorXd ModelParameters::packed() const {
  Eigen::VectorXd out(theta_.size() + 1);
  out << theta_, log_sigma_n2_;
  return out;
}

void ModelParameters::unpack(const Eigen::VectorXd& values) {
  if (values.size() != theta_.size() + 1) {
    throw std::invalid_argument("ModelParameters::unpack: expected " + std::to_string(theta_.size() + 1) +
                                " values, got " + std::to_string(values.size()));
  }
  theta_ = values.head(theta_.size());
  log_sigma_n2_ = values[values.size() - 1];
}

SplineBasis ModelParameters::basis(const GridSpec& grid, int degree) const {
  return build_basis(grid, n_per_axis_, degree);
}

// ---------------------------------------------------------------------------
// Fields

AnisotropyField AnisotropyField::isotropic(const GridSpec& grid, double gamma) {
  const int nv = (grid.mb() + 1) * grid.nb();
  const int nh = grid.mb() * (grid.nb() + 1);
  AnisotropyField h;
  h.gamma_v = Eigen::VectorXd::Constant(nv, gamma);
  h.v1_v = Eigen::VectorXd::Zero(nv);
  h.v2_v = Eigen::VectorXd::Zero(nv);
  h.gamma_h = Eigen::VectorXd::Constant(nh, gamma);
  h.v1_h = Eigen::VectorXd::Zero(nh);
  h.v2_h = Eigen::VectorXd::Zero(nh);
  return h;
}

AdvectionField AdvectionField::zero(const GridSpec& grid) {
  return AdvectionField{Eigen::VectorXd::Zero((grid.mb() + 1) * grid.nb()),
                        Eigen::VectorXd::Zero(grid.mb() * (grid.nb() + 1))};
}

BasisEvaluations evaluate_basis(const SplineBasis& basis, const GridSpec& grid) {
  const int mb = grid.mb();
  const int nb = grid.nb();
  BasisEvaluations out;
  out.cells.resize(grid.num_cells(), basis.size());
  out.vfaces.resize((mb + 1) * nb, basis.size());
  out.hfaces.resize(mb * (nb + 1), basis.size());
  out.taper_v.resize((mb + 1) * nb);
  out.taper_h.resize(mb * (nb + 1));
  for (int j = 0; j < nb; ++j)
    for (int i = 0; i < mb; ++i)
      out.cells.row(grid.flat(i, j)) = eval_tensor_basis(basis, grid, grid.cell_center(i, j)).transpose();
  for (int j = 0; j < nb; ++j)
    for (int i = 0; i <= mb; ++i) {
      const Point p = grid.vertical_face_center(i, j);
      const int f = j * (mb + 1) + i;
      out.vfaces.row(f) = eval_tensor_basis(basis, grid, p).transpose();
      out.taper_v[f] = taper_factor(grid, p);
    }
  for (int j = 0; j <= nb; ++j)
    for (int i = 0; i < mb; ++i) {
      const Point p = grid.horizontal_face_center(i, j);
      const int f = j * mb + i;
      out.hfaces.row(f) = eval_tensor_basis(basis, grid, p).transpose();
      out.taper_h[f] = taper_factor(grid, p);
    }
  return out;
}

FieldAssembler::FieldAssembler(GridSpec grid, ModelKind kind, int n_per_axis, int degree)
    : grid_(std::move(grid)), kind_(kind) {
  const int n = kind == ModelKind::StatAD ? 1 : n_per_axis;
  values_ = evaluate_basis(build_basis(grid_, n, degree), grid_);
}

namespace {

SpatialCoefficients spatial_from_blocks(const BasisEvaluations& bv, const Eigen::VectorXd& log_kappa,
                                        const Eigen::VectorXd& log_gamma, const Eigen::VectorXd& v1,
                                        const Eigen::VectorXd& v2) {
  SpatialCoefficients s;
  s.kappa2 = (2.0 * (bv.cells * log_kappa)).array().exp();
  s.h.gamma_v = (bv.vfaces * log_gamma).array().exp();
  s.h.v1_v = bv.vfaces * v1;
  s.h.v2_v = bv.vfaces * v2;
  s.h.gamma_h = (bv.hfaces * log_gamma).array().exp();
  s.h.v1_h = bv.hfaces * v1;
  s.h.v2_h = bv.hfaces * v2;
  return s;
}

}  // namespace

CoefficientFieldValues FieldAssembler::assemble(const ModelParameters& params) const {
  if (params.kind() != kind_) throw std::invalid_argument("FieldAssembler: parameter kind mismatch");
  if (params.block_size() != values_.cells.cols()) {
    throw std::invalid_argument("FieldAssembler: basis size does not match parameter blocks");
  }
  CoefficientFieldValues out;
  out.kind = kind_;
  if (kind_ == ModelKind::NStatSep) {
    out.evolution = spatial_from_blocks(values_, params.block(SepBlock::LogKappa), params.block(SepBlock::LogGamma),
                                        params.block(SepBlock::V1), params.block(SepBlock::V2));
    out.ar_coefficient = params.ar_coefficient();
    return out;
  }
  out.evolution = spatial_from_blocks(values_, params.block(AdBlock::LogKappaE), params.block(AdBlock::LogGammaE),
                                      params.block(AdBlock::VE1), params.block(AdBlock::VE2));
  out.initial = spatial_from_blocks(values_, params.block(AdBlock::LogKappaI), params.block(AdBlock::LogGammaI),
                                    params.block(AdBlock::VI1), params.block(AdBlock::VI2));
  out.omega.wx_v = (values_.vfaces * params.block(AdBlock::OmegaE1)).cwiseProduct(values_.taper_v);
  out.omega.wy_h = (values_.hfaces * params.block(AdBlock::OmegaE2)).cwiseProduct(values_.taper_h);
  out.tau = std::exp(params.log_tau());
  return out;
}

CoefficientFieldValues assemble_fields(const ModelParameters& params, const SplineBasis& basis,
                                       const GridSpec& grid) {
  if (basis.size() != params.block_size()) {
    throw std::invalid_argument("assemble_fields: basis size does not match parameter blocks");
  }
  FieldAssembler assembler(grid, params.kind(), basis.nx(), basis.x_basis().degree());
  return assembler.assemble(params);
}

}  // namespace stadr
