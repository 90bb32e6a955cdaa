#include "stadr/scoring.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace stadr {

double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth) {
  if (predictions.size() == 0) throw std::invalid_argument("rmse of an empty vector");
  if (predictions.size() != truth.size()) throw std::invalid_argument("rmse inputs differ in length");
  return std::sqrt((predictions - truth).squaredNorm() / static_cast<double>(predictions.size()));
}

double crps_gaussian(double mu, double sigma, double y) {
  if (!(sigma > 0.0)) throw std::invalid_argument("crps needs a positive standard deviation");
  const double z = (y - mu) / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - std::numbers::inv_sqrtpi);
}

double crps_gaussian(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma, const Eigen::VectorXd& y) {
  if (mu.size() == 0) throw std::invalid_argument("crps of an empty vector");
  if (mu.size() != sigma.size() || mu.size() != y.size()) throw std::invalid_argument("crps inputs differ in length");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) sum += crps_gaussian(mu[i], sigma[i], y[i]);
  return sum / static_cast<double>(mu.size());
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (s.count - 1));
  }
  return s;
}

const LagScore& LagScoreTable::at(int lag) const {
  if (lag < 0 || lag >= static_cast<int>(rows.size())) throw std::out_of_range("lag outside the table");
  return rows[static_cast<size_t>(lag)];
}

LagScoreTable aggregate_by_lag(const std::vector<ScoreRecord>& records, int num_times) {
  if (num_times < 1) throw std::invalid_argument("need at least one time point");
  std::vector<std::vector<double>> r(static_cast<size_t>(num_times)), c(static_cast<size_t>(num_times));
  for (const auto& rec : records) {
    const int lag = rec.k_p - rec.k_o;
    if (lag < 0 || lag >= num_times) throw std::invalid_argument("score record with invalid lag");
    r[static_cast<size_t>(lag)].push_back(rec.rmse);
    c[static_cast<size_t>(lag)].push_back(rec.crps);
  }
  LagScoreTable table;
  for (int lag = 0; lag < num_times; ++lag) {
    const Summary sr = summarize(r[static_cast<size_t>(lag)]);
    const Summary sc = summarize(c[static_cast<size_t>(lag)]);
    table.rows.push_back({lag, sr.mean, sr.sd, sc.mean, sc.sd, sr.count});
  }
  return table;
}

void write_lag_table_csv(std::ostream& os, const LagScoreTable& table) {
  os << "lag,metric,mean,sd,n\n";
  os.precision(12);
  for (const auto& row : table.rows) {
    os << row.lag << ",rmse," << row.rmse_mean << ',' << row.rmse_sd << ',' << row.count << '\n';
    os << row.lag << ",crps," << row.crps_mean << ',' << row.crps_sd << ',' << row.count << '\n';
  }
}

}  // namespace stadr
