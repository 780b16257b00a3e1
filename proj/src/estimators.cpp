#include "jeval/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace jeval {
namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

double mean_score(const TestScores& t) {
  if (t.scores.empty())
    throw EmptyTestSetError("model " + t.model_id + " has no test scores");
  double sum = 0.0;
  for (double s : t.scores) {
    if (!(s >= 0.0 && s <= 1.0))
      throw ValidationError("test scores must lie in [0,1]");
    sum += s;
  }
  return sum / double(t.scores.size());
}

PointEstimate naive_estimate(const TestScores& t) {
  const double p = mean_score(t);
  return {p, clamp01(p), false};
}

PointEstimate rg_estimate(double p_hat, const CalibrationStats& cal,
                          double min_j, double warn_j) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0))
    throw ValidationError("p_hat must lie in [0,1]");
  if (std::abs(cal.j_hat) <= min_j)
    throw DegenerateJError("|J| = " + std::to_string(std::abs(cal.j_hat)) +
                           " is at or below the floor " +
                           std::to_string(min_j) +
                           "; the correction is unidentifiable");
  const double raw = (p_hat + cal.q0_hat - 1.0) / cal.j_hat;
  return {raw, clamp01(raw), cal.j_hat < warn_j};
}

double ppi_lambda_from_moments(double cov_z_zhat, double var_zhat,
                               double cal_to_test_ratio, double lambda_max) {
  if (!(var_zhat > 0.0))
    throw ZeroJudgeVarianceError("judge score variance is not positive");
  const double lam = cov_z_zhat / (var_zhat * (1.0 + cal_to_test_ratio));
  return std::clamp(lam, 0.0, lambda_max);
}

LambdaFit ppi_lambda(std::span<const LabeledPair> cal, std::int64_t n_test,
                     double lambda_max) {
  if (cal.empty()) throw EmptyCalibrationError("no calibration pairs");
  if (n_test <= 0) throw ValidationError("n_test must be positive");
  const double m = double(cal.size());
  double sz = 0.0, szh = 0.0;
  for (const LabeledPair& p : cal) {
    sz += p.z_true;
    szh += p.z_judge;
  }
  const double mz = sz / m, mzh = szh / m;
  double cov = 0.0, var = 0.0;
  for (const LabeledPair& p : cal) {
    const double dh = p.z_judge - mzh;
    cov += (p.z_true - mz) * dh;
    var += dh * dh;
  }
  if (var == 0.0) return {0.0, true, false};
  const double ratio = m / double(n_test);
  const double lam = cov / (var * (1.0 + ratio));
  LambdaFit fit;
  fit.lambda = std::clamp(lam, 0.0, lambda_max);
  fit.clipped = fit.lambda != lam;
  return fit;
}

PointEstimate ppi_estimate(std::span<const LabeledPair> cal,
                           const TestScores& scores, double lambda) {
  for (const LabeledPair& p : cal)
    if (!p.model_id.empty() && p.model_id != scores.model_id)
      throw ModelMismatchError("calibration pair for model " + p.model_id +
                               " used with test scores for " +
                               scores.model_id);
  return ppi_estimate(cal, mean_score(scores), lambda);
}

PointEstimate ppi_estimate(std::span<const LabeledPair> cal, double p_test_hat,
                           double lambda) {
  if (cal.empty()) throw EmptyCalibrationError("no calibration pairs");
  if (!(p_test_hat >= 0.0 && p_test_hat <= 1.0))
    throw ValidationError("p_test_hat must lie in [0,1]");
  const double m = double(cal.size());
  double sz = 0.0, szh = 0.0;
  for (const LabeledPair& p : cal) {
    sz += p.z_true;
    szh += p.z_judge;
  }
  const double raw = sz / m + lambda * (p_test_hat - szh / m);
  return {raw, clamp01(raw), false};
}

double compare(const PointEstimate& a, const PointEstimate& b) {
  return a.raw - b.raw;
}

}  // namespace jeval
