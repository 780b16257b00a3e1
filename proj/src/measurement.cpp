#include "jeval/measurement.hpp"

#include <string>

namespace jeval {

void check_probability(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0))
    throw ValidationError(std::string(what) + " must lie in [0,1], got " +
                          std::to_string(x));
}

double youden(const JudgeErrorRates& r) {
  check_probability(r.q0, "q0");
  check_probability(r.q1, "q1");
  return r.q0 + r.q1 - 1.0;
}

double forward_prevalence(double theta, const JudgeErrorRates& r) {
  check_probability(theta, "theta");
  check_probability(r.q0, "q0");
  check_probability(r.q1, "q1");
  return theta * r.q1 + (1.0 - theta) * (1.0 - r.q0);
}

CalibrationStats make_calibration_stats(std::int64_t m0, std::int64_t m1,
                                        std::int64_t agree0,
                                        std::int64_t agree1) {
  if (m0 < 0 || m1 < 0 || agree0 < 0 || agree1 < 0)
    throw ValidationError("calibration counts must be non-negative");
  if (m0 == 0 && m1 == 0) throw EmptyCalibrationError("no calibration items");
  if (m0 == 0)
    throw MissingClassError(
        "calibration has no z_true=0 items; specificity is not estimable");
  if (m1 == 0)
    throw MissingClassError(
        "calibration has no z_true=1 items; sensitivity is not estimable");
  if (agree0 > m0 || agree1 > m1)
    throw ValidationError("agreement counts exceed class counts");
  CalibrationStats s;
  s.m0 = m0;
  s.m1 = m1;
  s.agree0 = agree0;
  s.agree1 = agree1;
  s.q0_hat = double(agree0) / double(m0);
  s.q1_hat = double(agree1) / double(m1);
  s.j_hat = s.q0_hat + s.q1_hat - 1.0;
  return s;
}

CalibrationStats estimate_calibration(std::span<const LabeledPair> pairs) {
  std::int64_t m0 = 0, m1 = 0, a0 = 0, a1 = 0;
  for (const LabeledPair& p : pairs) {
    if (p.z_true > 1 || p.z_judge > 1)
      throw ValidationError("labels must be 0 or 1");
    if (p.z_true == 0) {
      ++m0;
      if (p.z_judge == 0) ++a0;
    } else {
      ++m1;
      if (p.z_judge == 1) ++a1;
    }
  }
  return make_calibration_stats(m0, m1, a0, a1);
}

CalibrationStats estimate_calibration(std::span<const std::uint8_t> z_true,
                                      std::span<const std::uint8_t> z_judge) {
  if (z_true.size() != z_judge.size())
    throw ValidationError("z_true and z_judge lengths differ");
  std::int64_t m0 = 0, m1 = 0, a0 = 0, a1 = 0;
  for (std::size_t i = 0; i < z_true.size(); ++i) {
    if (z_true[i] > 1 || z_judge[i] > 1)
      throw ValidationError("labels must be 0 or 1");
    if (z_true[i] == 0) {
      ++m0;
      if (z_judge[i] == 0) ++a0;
    } else {
      ++m1;
      if (z_judge[i] == 1) ++a1;
    }
  }
  return make_calibration_stats(m0, m1, a0, a1);
}

double delta_j(const CalibrationStats& a, const CalibrationStats& b) {
  return a.j_hat - b.j_hat;
}

}  // namespace jeval
