#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jeval/measurement.hpp"

namespace jeval {

enum class Estimator { naive, rg, ppi };

// Who supplies calibration labels: each model its own set, or one pooled set
// drawn from an incumbent model's responses and applied to every arm.
enum class CalibrationDesign { model_specific, shared };

// Labeling budget in multiples of one per-model calibration set. one_x halves
// the per-arm labels of a two-arm comparison relative to two_x.
enum class Budget { one_x, two_x };

struct LambdaPolicy {
  bool fixed = false;
  double value = 0.0;  // only read when fixed

  static LambdaPolicy tuned() { return {}; }
  static LambdaPolicy fixed_at(double v) { return {true, v}; }
};

struct EstimatorConfig {
  Estimator estimator = Estimator::rg;
  CalibrationDesign design = CalibrationDesign::model_specific;
  Budget budget = Budget::two_x;
  LambdaPolicy lambda;
  bool clamp = true;
  double min_j = 1e-6;      // |J| at or below this is a hard error
  double warn_j = 0.2;      // J below this flags the estimate
  double lambda_max = 10.0; // fitted lambda is clipped to [0, lambda_max]
  std::string incumbent;    // shared design: model whose labels are reused
};

// Per-item judge scores for one model's unlabeled test set. Scores are means
// over judge runs, so they live in [0,1] rather than {0,1}.
struct TestScores {
  std::string model_id;
  std::vector<std::string> item_ids;
  std::vector<double> scores;
};

double mean_score(const TestScores& t);

struct PointEstimate {
  double raw = 0.0;      // may leave [0,1]
  double clamped = 0.0;  // raw clipped to [0,1]
  bool low_j = false;    // correction ran with J below the warn threshold
};

// Mean judge pass rate, uncorrected. Biased by theta*(J-1) + (1-q0).
PointEstimate naive_estimate(const TestScores& t);

// Inverts the mixture: theta = (p + q0 - 1) / J. Throws DegenerateJError
// when |j_hat| <= min_j.
PointEstimate rg_estimate(double p_hat, const CalibrationStats& cal,
                          double min_j = 1e-6, double warn_j = 0.2);

struct LambdaFit {
  double lambda = 0.0;
  bool zero_variance = false;  // judge constant on calibration; fell back to 0
  bool clipped = false;
};

// Power-tuning weight fitted on calibration pairs:
// lambda = Cov(z, zhat) / (Var(zhat) * (1 + n_cal/n_test)), clipped to
// [0, lambda_max].
LambdaFit ppi_lambda(std::span<const LabeledPair> cal, std::int64_t n_test,
                     double lambda_max = 10.0);

// Same formula from externally supplied moments (closed-form checks).
double ppi_lambda_from_moments(double cov_z_zhat, double var_zhat,
                               double cal_to_test_ratio,
                               double lambda_max = 10.0);

// Debiased rectifier form: mean true label on calibration plus
// lambda * (test judge rate - calibration judge rate). Unbiased for any
// fixed lambda. Calibration pairs carrying a model_id must match the test
// scores' model (this estimator is model-specific by construction).
PointEstimate ppi_estimate(std::span<const LabeledPair> cal,
                           const TestScores& scores, double lambda);

// Same arithmetic on a precomputed test rate, no provenance check.
PointEstimate ppi_estimate(std::span<const LabeledPair> cal, double p_test_hat,
                           double lambda);

// Raw difference of two per-model estimates (a minus b).
double compare(const PointEstimate& a, const PointEstimate& b);

}  // namespace jeval
