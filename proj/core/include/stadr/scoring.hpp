#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace stadr {

/// sqrt(mean((pred - truth)^2)).
double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth);

/// Closed-form CRPS of N(mu, sigma^2) at y:
///   sigma (z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)),  z = (y - mu) / sigma.
double crps_gaussian(double mu, double sigma, double y);
/// Mean CRPS over points.
double crps_gaussian(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma, const Eigen::VectorXd& y);

/// Scores of one prediction run: conditioned on time k_o, evaluated at k_p.
/// Callers restrict lag-0 scores to the masked cells before recording them.
struct ScoreRecord {
  int k_o = 0;
  int k_p = 0;
  int replicate = 0;
  double rmse = 0.0;
  double crps = 0.0;
};

struct LagScore {
  int lag = 0;
  double rmse_mean = 0.0;
  double rmse_sd = 0.0;
  double crps_mean = 0.0;
  double crps_sd = 0.0;
  int count = 0;
  /// Lag 0 rows measure reconstruction of unobserved cells.
  bool reconstruction() const { return lag == 0; }
};

/// One row per lag k_p - k_o in [0, num_times); rows without records have count 0.
struct LagScoreTable {
  std::vector<LagScore> rows;

  const LagScore& at(int lag) const;
};

/// Mean and sample standard deviation (0 for a single record) per lag.
/// Records with k_p < k_o are rejected.
LagScoreTable aggregate_by_lag(const std::vector<ScoreRecord>& records, int num_times);

/// Columns lag, metric, mean, sd, n.
void write_lag_table_csv(std::ostream& os, const LagScoreTable& table);

/// Mean and sample standard deviation of a list of values.
struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  int count = 0;
};
Summary summarize(const std::vector<double>& values);

}  // namespace stadr
