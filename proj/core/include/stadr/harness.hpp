#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "stadr/basis.hpp"
#include "stadr/grid.hpp"
#include "stadr/inference.hpp"
#include "stadr/scoring.hpp"

namespace stadr {

/// Coefficient functions given directly in space rather than through splines.
/// The evolution and the initial operator share kappa and H.
struct PointwiseModel {
  std::function<double(Point)> log_kappa;
  std::function<double(Point)> log_gamma;
  std::function<Point(Point)> anisotropy;  // v
  std::function<Point(Point)> advection;   // omega before tapering
  double log_tau = 0.0;
};

CoefficientFieldValues evaluate_pointwise(const GridSpec& grid, const PointwiseModel& model);

/// Reference non-stationary model on [0, 15]^2:
///   omega = 30 [sin u cos w, -cos u sin w]
///   v     = 0.7 [-cos u sin w, -sin w cos u]
/// with u = (x/15 + 1/2) pi/3, w = (y/15 + 1/2) pi/3, kappa = e^-2,
/// gamma = e^-1, tau = e^-4.
PointwiseModel true_model();
CoefficientFieldValues true_model_fields(const GridSpec& grid);
Point true_advection(Point s);
Point true_anisotropy(Point s);

/// Cells whose centers lie inside `rect` (closed), restricted to the interior.
std::vector<int> cells_in_rectangle(const GridSpec& grid, const Bounds& rect);
/// Interior cells in row-major order.
std::vector<int> interior_cells(const GridSpec& grid);

/// Models compared in the studies; NStatTrue uses the reference fields.
enum class CandidateModel { NStatTrue, NStatAD, StatAD, NStatSep };

std::string_view to_string(CandidateModel m);
CandidateModel parse_candidate_model(std::string_view name);
std::optional<ModelKind> fitted_kind(CandidateModel m);

enum class StudyScale { Desk, Paper };

StudyScale parse_scale(std::string_view name);
std::string_view to_string(StudyScale s);

// ---------------------------------------------------------------------------
// Masked-rectangle simulation study.

struct StudyConfig {
  Bounds interior{0.0, 15.0, 0.0, 15.0};
  int m = 30;
  int n = 30;
  int buffer = 3;
  int num_times = 8;
  double duration = 2.0;
  std::vector<CandidateModel> models{CandidateModel::NStatTrue, CandidateModel::NStatAD, CandidateModel::StatAD,
                                     CandidateModel::NStatSep};
  int n_train = 10;
  int n_test = 10;
  Bounds mask{6.1, 11.6, 3.7, 9.5};
  double sigma_n2 = 1e-3;
  std::uint64_t seed = 1;
  int n_per_axis = 3;
  int sd_samples = 100;
  int workers = 1;
  OptimizerConfig optimizer;
  /// Called after every optimizer iteration (possibly from worker threads).
  std::function<void(CandidateModel, const TraceRow&)> progress;

  static StudyConfig for_scale(StudyScale scale);
  GridSpec grid() const;
  void validate() const;
};

struct ModelStudyResult {
  CandidateModel model = CandidateModel::NStatTrue;
  std::optional<ModelParameters> params;  // empty for NStatTrue
  std::vector<TraceRow> trace;
  std::vector<ScoreRecord> records;
  LagScoreTable table;
};

struct StudyResult {
  std::vector<ModelStudyResult> models;
  const ModelStudyResult& at(CandidateModel m) const;
};

/// Noisy replicates of the reference model: entry r is z_r + eps_r on every
/// latent entry. `stream` separates training (1) from test (2) draws.
std::vector<Eigen::VectorXd> simulate_replicates(const GridSpec& grid, const CoefficientFieldValues& fields, int count,
                                                 double sigma_n2, std::uint64_t seed, std::uint64_t stream,
                                                 int workers = 1);

/// Scores reconstruction (lag 0, masked cells) and forecasts (all interior
/// cells, lags > 0) for every observation time of every test replicate.
std::vector<ScoreRecord> score_masked_predictions(const GridSpec& grid, const CoefficientFieldValues& fields,
                                                  double sigma_n2, const std::vector<Eigen::VectorXd>& test,
                                                  const std::vector<int>& masked, int sd_samples, std::uint64_t seed,
                                                  int workers = 1);

StudyResult run_simulation_study(const StudyConfig& config);

/// Columns model, lag, metric, mean, sd, n.
void write_study_csv(std::ostream& os, const StudyResult& result);

// ---------------------------------------------------------------------------
// AUV emulation.

struct PathConfig {
  double speed_mps = 0.5;
  double cell_size_m = 32.0;
  double mission_minutes = 90.0;
  double step_seconds = 600.0;
  /// Candidate heading scores: straightness * cos(turn) - revisit * visits
  /// - boundary * near-boundary lookahead points, sampled by softmax.
  double straightness = 2.0;
  double revisit = 0.6;
  double boundary = 3.0;
  double temperature = 0.5;
  int lookahead = 4;
  double margin = 1.0;

  double cells_per_step() const { return speed_mps * step_seconds / cell_size_m; }
  int mission_steps() const;
};

struct ObservationEvent {
  int time_index = 0;
  int cell = 0;  // flat index on the buffered grid
};

struct Trajectory {
  std::vector<ObservationEvent> events;
  double duration_minutes = 0.0;
  double speed_mps = 0.0;
  double length_cells = 0.0;
};

/// Correlated random walk in the interior that favours straight lines and
/// avoids revisits and the boundary. Events fire on entering a cell and when
/// a new time step begins; diagonal moves insert an edge-adjacent cell so that
/// consecutive events are contiguous.
Trajectory generate_path(const GridSpec& grid, std::uint64_t seed, const PathConfig& config = {});

/// Per-segment temporal means removed location by location.
struct SegmentedData {
  int num_cells = 0;
  int num_times = 0;
  std::vector<Eigen::VectorXd> fields;     // K T each, time-major
  std::vector<Eigen::VectorXd> means;      // K each
  std::vector<Eigen::VectorXd> residuals;  // K T each

  /// Mean of the per-segment means (the fixed spatial mean of the test model).
  Eigen::VectorXd spatial_mean() const;
  Eigen::VectorXd reconstruct(int segment) const;
};

SegmentedData detrend_segments(int num_cells, int num_times, std::vector<Eigen::VectorXd> fields);

struct OceanConfig {
  int m = 25;
  int n = 22;
  int buffer = 3;
  int num_times = 9;
  double dt = 1.0;
  /// Smooth trend amplitude and per-segment offset standard deviation.
  double trend = 1.0;
  double offset_sd = 0.2;

  GridSpec grid() const;
};

/// Hidden advection-diffusion model behind the synthetic fields: northward
/// flow, east-west diffusion and a variance bump near an outlet.
PointwiseModel hidden_ocean_model(const GridSpec& grid);
Point ocean_outlet(const GridSpec& grid);

/// Segments of the hidden model plus a smooth trend and offsets (K T each).
std::vector<Eigen::VectorXd> synth_ocean_fields(const GridSpec& grid, std::uint64_t seed, int n_segments,
                                                const OceanConfig& config = {});

struct EmulationConfig {
  OceanConfig ocean;
  std::vector<CandidateModel> models{CandidateModel::NStatAD, CandidateModel::NStatSep};
  int n_train = 9;
  int n_test = 12;
  int n_paths = 25;
  double sigma_n2 = 0.01;
  std::uint64_t seed = 1;
  int n_per_axis = 3;
  int sd_samples = 100;
  int workers = 1;
  OptimizerConfig optimizer;
  PathConfig path;
  std::function<void(CandidateModel, const TraceRow&)> progress;

  void validate() const;
};

struct EmulationRow {
  int segment = 0;
  CandidateModel model = CandidateModel::NStatAD;
  double rmse_mean = 0.0;
  double rmse_sd = 0.0;
  double crps_mean = 0.0;
  double crps_sd = 0.0;
  int paths = 0;
  int failures = 0;
};

struct EmulationResult {
  std::vector<EmulationRow> rows;
  std::vector<ModelParameters> params;  // one per fitted model, config order
  std::vector<std::vector<TraceRow>> traces;

  const EmulationRow& at(int segment, CandidateModel model) const;
};

/// Starting point for the emulation fits; NStat-AD starts with a northward
/// flow guess.
ModelParameters emulation_initial(CandidateModel model, int n_per_axis);

/// Fits the models to the detrended training segments and scores path-based
/// predictions of every unobserved interior point of each test segment.
EmulationResult run_emulation_study(const std::vector<Eigen::VectorXd>& train_fields,
                                    const std::vector<Eigen::VectorXd>& test_fields, const EmulationConfig& config);

/// Columns segment, model, rmse_mean, rmse_sd, crps_mean, crps_sd, paths, failures.
void write_emulation_csv(std::ostream& os, const EmulationResult& result);

}  // namespace stadr
