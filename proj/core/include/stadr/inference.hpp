#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "stadr/basis.hpp"
#include "stadr/gmrf.hpp"
#include "stadr/spacetime.hpp"

namespace stadr {

/// Replicated observations sharing one design: y_r = S z_r + eps_r.
struct Dataset {
  ObservationDesign design;
  std::vector<Eigen::VectorXd> replicates;
  double v_beta = 1e6;

  Eigen::Index num_replicates() const { return static_cast<Eigen::Index>(replicates.size()); }
  void validate() const;
};

class ProblemTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Accumulates sum_j w_j x_j^T (dQ/dtheta) y_j over all covariance parameters
/// theta, chaining through the spline basis, without forming dQ/dtheta.
class PrecisionGradient {
 public:
  PrecisionGradient(const SpaceTimeModel& model, const BasisEvaluations& basis);

  void add(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double weight = 1.0);
  /// Gradient in the layout of ModelParameters::theta().
  Eigen::VectorXd gradient() const;
  void merge(const PrecisionGradient& other);

 private:
  void add_ad(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double weight);
  void add_sep(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double weight);

  const SpaceTimeModel& model_;
  const BasisEvaluations& basis_;
  Eigen::VectorXd kappa_e_, kappa_i_;
  DiffusionSensitivity diff_e_, diff_i_;
  AdvectionSensitivity adv_;
  double tau_ = 0.0;
  Eigen::MatrixXd temporal_;
};

struct GradientOptions {
  int num_probes = 1;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct ObjectiveValue {
  double value = 0.0;
  /// d value / d packed parameters (theta, then log sigma_n2).
  Eigen::VectorXd gradient;
};

/// Log-posterior under a flat prior (additive constants dropped):
///   sum_r [ 1/2 log|Q_z| - 1/2 log|Q_C| - n/2 log s2 - 1/2 mu_r^T Q_z mu_r - |y_r - S mu_r|^2 / (2 s2) ]
/// with gradients whose trace terms use Rademacher probes.
///
/// The symbolic analysis of Q_C is reused across evaluations, so one
/// Objective must not be evaluated from several threads at once.
class Objective {
 public:
  Objective(GridSpec grid, ModelKind kind, int n_per_axis, Dataset data);

  const GridSpec& grid() const { return grid_; }
  ModelKind kind() const { return kind_; }
  int n_per_axis() const { return n_per_axis_; }
  const Dataset& data() const { return data_; }
  const FieldAssembler& assembler() const { return assembler_; }

  double log_posterior(const ModelParameters& params);
  /// Value plus gradient with Hutchinson trace estimates.
  ObjectiveValue evaluate(const ModelParameters& params, const GradientOptions& options = {});
  /// Value plus gradient with traces from dense inverses. Throws
  /// ProblemTooLarge when K T exceeds `max_dense`.
  ObjectiveValue evaluate_exact(const ModelParameters& params, Eigen::Index max_dense = 2500);

 private:
  struct State;
  State prepare(const ModelParameters& params);

  GridSpec grid_;
  ModelKind kind_;
  int n_per_axis_;
  FieldAssembler assembler_;
  Dataset data_;
  SparseCholesky factor_;
};

double log_posterior(const ModelParameters& params, const GridSpec& grid, const Dataset& data);

// ---------------------------------------------------------------------------
// Optimization (maximizes the log-posterior).

enum class Algorithm { Adam, Sgd, Adagrad, Adadelta, Rmsprop };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::Adam;
  double step_size = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  /// Decay of the running averages in rmsprop and adadelta.
  double decay = 0.9;
  double epsilon = 1e-8;
  int max_iterations = 300;
  int num_probes = 1;
  std::uint64_t seed = 1;
  /// Early stop once the mean objective over the last `window` iterations
  /// improves on the previous window by less than `tolerance`; 0 disables.
  int window = 50;
  double tolerance = 0.0;
  /// Stop once the gradient norm falls below this value; 0 disables.
  double gradient_tolerance = 0.0;
  /// Dense traces instead of probes (small problems only).
  bool exact_gradient = false;
  /// Offset of the iteration counter, so a resumed fit draws fresh probes.
  int start_iteration = 0;
  /// Multiplier on the step for advection coefficients, which carry units of
  /// length per time. 0 uses the grid's characteristic speed: the larger
  /// interior extent divided by the time span.
  double advection_step_scale = 0.0;
  /// The step follows a cosine schedule from step_size down to
  /// step_size * final_step_fraction at the last iteration; 1 keeps it fixed.
  double final_step_fraction = 0.1;
  int workers = 1;

  void validate() const;
};

/// First-order update rule. step() returns the change to apply to x given
/// the ascent direction g.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual Eigen::VectorXd step(const Eigen::VectorXd& g) = 0;

  static std::unique_ptr<Optimizer> create(const OptimizerConfig& config, Eigen::Index dim);
};

struct TraceRow {
  int iteration = 0;
  /// Negative log-posterior (minimized).
  double objective = 0.0;
  double gradient_norm = 0.0;
  double step_size = 0.0;
};

struct FitResult {
  ModelParameters params;
  std::vector<TraceRow> trace;
  bool stopped_early = false;
};

class FitDiverged : public std::runtime_error {
 public:
  FitDiverged(const std::string& what, ModelParameters last_valid)
      : std::runtime_error(what), last_valid_(std::move(last_valid)) {}
  const ModelParameters& last_valid() const { return last_valid_; }

 private:
  ModelParameters last_valid_;
};

using FitProgress = std::function<void(const TraceRow&)>;

/// Larger interior extent divided by the time span T dt.
double characteristic_speed(const GridSpec& grid);

FitResult fit(Objective& objective, const OptimizerConfig& config, const ModelParameters& init,
              const FitProgress& progress = {});

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace);

}  // namespace stadr
