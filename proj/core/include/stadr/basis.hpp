#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "stadr/grid.hpp"

namespace stadr {

/// Clamped B-spline basis on one axis.
class SplineBasis1D {
 public:
  SplineBasis1D() = default;
  /// `count` basis functions of polynomial degree `degree` on [lo, hi]. When
  /// count < degree + 1 the degree is lowered to count - 1 (a single function
  /// is the constant 1).
  SplineBasis1D(double lo, double hi, int count, int degree);

  int size() const { return count_; }
  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }

  /// All basis values at x (length size()). Throws outside [lo, hi].
  Eigen::VectorXd eval(double x) const;

 private:
  double lo_ = 0.0;
  double hi_ = 1.0;
  int count_ = 1;
  int degree_ = 0;
  std::vector<double> knots_;
};

/// Tensor-product basis f_ij(s) = B_x,i(x) B_y,j(y) over the buffered domain.
/// Values are ordered k = i * n_y + j (row-major over (i, j)).
class SplineBasis {
 public:
  SplineBasis() = default;
  SplineBasis(SplineBasis1D bx, SplineBasis1D by) : bx_(std::move(bx)), by_(std::move(by)) {}

  const SplineBasis1D& x_basis() const { return bx_; }
  const SplineBasis1D& y_basis() const { return by_; }
  int nx() const { return bx_.size(); }
  int ny() const { return by_.size(); }
  int size() const { return nx() * ny(); }

 private:
  SplineBasis1D bx_;
  SplineBasis1D by_;
};

SplineBasis build_basis(const GridSpec& grid, int n_per_axis, int degree = 2);

/// Values of every tensor basis function at `p` (length nx * ny, sum 1).
Eigen::VectorXd eval_tensor_basis(const SplineBasis& basis, const GridSpec& grid, Point p);

enum class ModelKind { NStatAD, StatAD, NStatSep };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Coefficient blocks of the advection-diffusion models, in storage order.
enum class AdBlock : int {
  LogKappaE = 0,
  LogGammaE,
  VE1,
  VE2,
  OmegaE1,
  OmegaE2,
  LogKappaI,
  LogGammaI,
  VI1,
  VI2,
};
inline constexpr int kAdBlockCount = 10;

/// Coefficient blocks of the separable model, in storage order.
enum class SepBlock : int { LogKappa = 0, LogGamma, V1, V2 };
inline constexpr int kSepBlockCount = 4;

/// Covariance parameters theta plus the log nugget variance.
///
/// Flat layout for advection-diffusion kinds:
///   [log kE | log gE | vE1 | vE2 | wE1 | wE2 | log kI | log gI | vI1 | vI2 | log tau]
/// and for the separable kind:
///   [log k | log g | v1 | v2 | rho],  a = tanh(rho).
/// Every block holds `block_size()` basis coefficients (1 for StatAD).
class ModelParameters {
 public:
  ModelParameters() = default;

  /// All-zero coefficients; the nugget starts at log(1e-2).
  static ModelParameters zeros(ModelKind kind, int n_per_axis = 3);
  /// Neutral starting point: log kappa = log gamma = -1, v = (0.1, 0.1),
  /// omega = 0, log tau = 0, a = 0.5. v starts off zero because H depends on
  /// v only through v v^T, whose gradient vanishes at v = 0.
  static ModelParameters initial(ModelKind kind, int n_per_axis = 3);

  ModelKind kind() const { return kind_; }
  int n_per_axis() const { return n_per_axis_; }
  int block_size() const { return block_size_; }
  int num_blocks() const;
  /// Covariance parameter count (excludes the nugget).
  int num_covariance_params() const { return static_cast<int>(theta_.size()); }

  Eigen::VectorXd& theta() { return theta_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  double& log_sigma_n2() { return log_sigma_n2_; }
  double log_sigma_n2() const { return log_sigma_n2_; }
  double sigma_n2() const;

  Eigen::Ref<Eigen::VectorXd> block(AdBlock b);
  Eigen::Ref<const Eigen::VectorXd> block(AdBlock b) const;
  Eigen::Ref<Eigen::VectorXd> block(SepBlock b);
  Eigen::Ref<const Eigen::VectorXd> block(SepBlock b) const;
  int block_offset(int block_index) const { return block_index * block_size_; }

  /// Index of log tau (AD kinds) or rho (separable).
  int scalar_index() const { return num_blocks() * block_size_; }
  double log_tau() const;
  void set_log_tau(double v);
  /// Separable temporal correlation a = tanh(rho) in (-1, 1).
  double ar_coefficient() const;
  void set_ar_coefficient(double a);

  /// theta followed by log sigma_n^2.
  Eigen::VectorXd packed() const;
  void unpack(const Eigen::VectorXd& values);

  /// Spline basis matching this parameterization on `grid`.
  SplineBasis basis(const GridSpec& grid, int degree = 2) const;

 private:
  ModelKind kind_ = ModelKind::StatAD;
  int n_per_axis_ = 1;
  int block_size_ = 1;
  Eigen::VectorXd theta_;
  double log_sigma_n2_ = 0.0;
};

/// Diffusion tensor ingredients H = gamma I + v v^T on cell faces.
/// Vertical faces are indexed j * (M_B + 1) + i with i = 0..M_B; horizontal
/// faces j * M_B + i with j = 0..N_B.
struct AnisotropyField {
  Eigen::VectorXd gamma_v, v1_v, v2_v;
  Eigen::VectorXd gamma_h, v1_h, v2_h;

  static AnisotropyField isotropic(const GridSpec& grid, double gamma = 1.0);
  double hxx_v(int f) const { return gamma_v[f] + v1_v[f] * v1_v[f]; }
  double hxy_v(int f) const { return v1_v[f] * v2_v[f]; }
  double hyy_h(int f) const { return gamma_h[f] + v2_h[f] * v2_h[f]; }
  double hxy_h(int f) const { return v1_h[f] * v2_h[f]; }
};

/// Tapered advection components: x at vertical faces, y at horizontal faces.
struct AdvectionField {
  Eigen::VectorXd wx_v;
  Eigen::VectorXd wy_h;

  static AdvectionField zero(const GridSpec& grid);
};

/// kappa^2 at cell centers and H on faces for one Whittle-Matern operator.
struct SpatialCoefficients {
  Eigen::VectorXd kappa2;
  AnisotropyField h;
};

/// Coefficient functions evaluated where the finite volume formulas need them.
struct CoefficientFieldValues {
  ModelKind kind = ModelKind::NStatAD;
  SpatialCoefficients evolution;  // kappa_E, H_E (kappa, H for the separable kind)
  AdvectionField omega;           // empty for the separable kind
  SpatialCoefficients initial;    // empty for the separable kind
  double tau = 1.0;
  double ar_coefficient = 0.0;
};

/// Basis function values at cell centers and face centers, cached per grid.
struct BasisEvaluations {
  Eigen::MatrixXd cells;     // K x B
  Eigen::MatrixXd vfaces;    // (M_B + 1) N_B x B
  Eigen::MatrixXd hfaces;    // M_B (N_B + 1) x B
  Eigen::VectorXd taper_v;   // taper at vertical face centers
  Eigen::VectorXd taper_h;   // taper at horizontal face centers
};

BasisEvaluations evaluate_basis(const SplineBasis& basis, const GridSpec& grid);

/// Maps parameters to field values on a fixed grid.
class FieldAssembler {
 public:
  FieldAssembler(GridSpec grid, ModelKind kind, int n_per_axis, int degree = 2);

  const GridSpec& grid() const { return grid_; }
  const BasisEvaluations& basis_values() const { return values_; }
  ModelKind kind() const { return kind_; }

  CoefficientFieldValues assemble(const ModelParameters& params) const;

 private:
  GridSpec grid_;
  ModelKind kind_;
  BasisEvaluations values_;
};

CoefficientFieldValues assemble_fields(const ModelParameters& params, const SplineBasis& basis,
                                       const GridSpec& grid);

}  // namespace stadr
