#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "jeval/errors.hpp"

namespace jeval {

// Judge operating characteristics. q1 is sensitivity P(label 1 | truly 1),
// q0 is specificity P(label 0 | truly 0).
struct JudgeErrorRates {
  double q0 = 1.0;
  double q1 = 1.0;
};

// q0 + q1 - 1. Zero means the judge is uninformative; negative means its
// labels are anti-correlated with the truth.
double youden(const JudgeErrorRates& r);

// Observed judge pass rate implied by true rate theta:
// p = theta*q1 + (1-theta)*(1-q0). Identity: p = theta*J + (1-q0).
double forward_prevalence(double theta, const JudgeErrorRates& r);

// One human-labeled item: the true verdict and the judge's verdict. The id
// fields are optional carriers for provenance checks; empty means unchecked.
struct LabeledPair {
  std::uint8_t z_true = 0;
  std::uint8_t z_judge = 0;
  std::string item_id;
  std::string model_id;
};

struct CalibrationStats {
  std::int64_t m0 = 0;      // labeled items with z_true = 0
  std::int64_t m1 = 0;      // labeled items with z_true = 1
  std::int64_t agree0 = 0;  // of the m0, judge also said 0
  std::int64_t agree1 = 0;  // of the m1, judge also said 1
  double q0_hat = 0.0;
  double q1_hat = 0.0;
  double j_hat = 0.0;

  JudgeErrorRates rates() const { return {q0_hat, q1_hat}; }
};

// Builds stats from raw agreement counts. Both classes must be present.
CalibrationStats make_calibration_stats(std::int64_t m0, std::int64_t m1,
                                        std::int64_t agree0,
                                        std::int64_t agree1);

CalibrationStats estimate_calibration(std::span<const LabeledPair> pairs);
CalibrationStats estimate_calibration(std::span<const std::uint8_t> z_true,
                                      std::span<const std::uint8_t> z_judge);

// J_A - J_B: positive when A's judge is more reliable than B's.
double delta_j(const CalibrationStats& a, const CalibrationStats& b);

void check_probability(double x, const char* what);

}  // namespace jeval
