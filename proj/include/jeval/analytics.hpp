#pragma once

#include <cstdint>
#include <span>

#include "jeval/estimators.hpp"
#include "jeval/measurement.hpp"

namespace jeval {

// Asymptotic bias of the corrected estimate for model A when the correction
// reuses rates fitted on model B's responses:
//   bias = (theta_a * (J_A - J_B) - (q0_A - q0_B)) / J_B
// split into the sensitivity and specificity contributions
//   term_q1 =  theta_a       * (q1_A - q1_B) / J_B
//   term_q0 = -(1 - theta_a) * (q0_A - q0_B) / J_B
struct SharedCalBias {
  double bias = 0.0;
  double term_q1 = 0.0;
  double term_q0 = 0.0;
};

SharedCalBias shared_cal_bias(double theta_a, const JudgeErrorRates& rates_a,
                              const JudgeErrorRates& rates_b,
                              double min_j = 1e-6);

// Delta-method standard error of the corrected difference under a shared
// calibration set:
//   SE^2 = paired_var / (N J^2)
//        + (p_b - p_a)^2 (q0(1-q0)/m0 + q1(1-q1)/m1) / J^4
// paired_var is the sample variance of per-item score differences on the
// paired test set.
struct RgComparisonSe {
  double se = 0.0;
  double test_term = 0.0;         // first variance term
  double calibration_term = 0.0;  // second variance term
};

RgComparisonSe rg_comparison_se(double paired_var, std::int64_t n_test,
                                double p_a, double p_b,
                                const CalibrationStats& cal,
                                double min_j = 1e-6);

// Same, computing paired_var and the two pass rates from aligned score
// vectors (item order must match across models).
RgComparisonSe rg_comparison_se(const TestScores& a, const TestScores& b,
                                const CalibrationStats& cal,
                                double min_j = 1e-6);

// Population-optimal tuning weight: theta(1-theta) J / (p(1-p)) with
// p the forward pass rate. Requires p in (0,1).
double lambda_star(double theta, const JudgeErrorRates& rates);

// With one calibration set reused as both the rate source and the labeled
// rectifier set, the debiased estimator with lambda = 1/J collapses to the
// corrected-mixture estimator. This evaluates both routes on real pairs and
// reports the difference (should be rounding-level).
struct ReductionCheck {
  double theta_ppi = 0.0;
  double theta_rg = 0.0;
  double abs_diff = 0.0;
};

ReductionCheck shared_ppi_equals_rg(std::span<const LabeledPair> cal,
                                    const TestScores& scores,
                                    double min_j = 1e-6);

ReductionCheck shared_ppi_equals_rg(std::span<const LabeledPair> cal,
                                    double p_test_hat, double min_j = 1e-6);

// Monte Carlo check of shared_cal_bias: repeatedly fit rates on synthetic
// model-B calibration data (class-balanced true labels so both rates stay
// well estimated), apply them to synthetic model-A test data, and average the
// estimation error.
struct BiasValidationConfig {
  std::int64_t n_test = 10000;
  std::int64_t n_cal = 2000;
  std::int64_t reps = 500;
  double min_j = 1e-6;
};

struct BiasValidation {
  double predicted = 0.0;      // closed form
  double mc_mean_error = 0.0;  // average of (estimate - theta_a)
  double mc_se = 0.0;          // standard error of that average
  std::int64_t reps = 0;
};

BiasValidation bias_validation_mc(double theta_a,
                                  const JudgeErrorRates& rates_a,
                                  const JudgeErrorRates& rates_b,
                                  const BiasValidationConfig& cfg,
                                  std::uint64_t seed);

}  // namespace jeval
