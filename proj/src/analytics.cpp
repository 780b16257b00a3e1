#include "jeval/analytics.hpp"

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "jeval/errors.hpp"
#include "jeval/kernels/kernels.hpp"
#include "jeval/kernels/philox.hpp"
#include "synth.hpp"

namespace jeval {

SharedCalBias shared_cal_bias(double theta_a, const JudgeErrorRates& rates_a,
                              const JudgeErrorRates& rates_b, double min_j) {
  check_probability(theta_a, "theta_a");
  const double j_a = youden(rates_a);
  const double j_b = youden(rates_b);
  if (std::abs(j_b) <= min_j)
    throw DegenerateJError("J of the calibration source is " +
                           std::to_string(j_b) +
                           "; shared-calibration bias is undefined");
  SharedCalBias out;
  out.term_q1 = theta_a * (rates_a.q1 - rates_b.q1) / j_b;
  out.term_q0 = -(1.0 - theta_a) * (rates_a.q0 - rates_b.q0) / j_b;
  out.bias = (theta_a * (j_a - j_b) - (rates_a.q0 - rates_b.q0)) / j_b;
  return out;
}

RgComparisonSe rg_comparison_se(double paired_var, std::int64_t n_test,
                                double p_a, double p_b,
                                const CalibrationStats& cal, double min_j) {
  if (n_test <= 0) throw ValidationError("n_test must be positive");
  if (paired_var < 0.0) throw ValidationError("paired_var must be >= 0");
  check_probability(p_a, "p_a");
  check_probability(p_b, "p_b");
  const double j = cal.j_hat;
  if (std::abs(j) <= min_j)
    throw DegenerateJError("|J| at or below floor; comparison SE undefined");
  const double j2 = j * j;
  const double rate_var = cal.q0_hat * (1.0 - cal.q0_hat) / double(cal.m0) +
                          cal.q1_hat * (1.0 - cal.q1_hat) / double(cal.m1);
  RgComparisonSe out;
  out.test_term = paired_var / (double(n_test) * j2);
  out.calibration_term = (p_b - p_a) * (p_b - p_a) * rate_var / (j2 * j2);
  out.se = std::sqrt(out.test_term + out.calibration_term);
  return out;
}

RgComparisonSe rg_comparison_se(const TestScores& a, const TestScores& b,
                                const CalibrationStats& cal, double min_j) {
  if (a.scores.size() != b.scores.size() || a.scores.empty())
    throw UnpairedItemsError("score vectors must be aligned and non-empty");
  const std::size_t n = a.scores.size();
  if (n < 2) throw ValidationError("need at least two paired items");
  double sum_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum_d += b.scores[i] - a.scores[i];
  const double mean_d = sum_d / double(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = b.scores[i] - a.scores[i] - mean_d;
    ss += d * d;
  }
  const double paired_var = ss / double(n - 1);
  return rg_comparison_se(paired_var, std::int64_t(n), mean_score(a),
                          mean_score(b), cal, min_j);
}

double lambda_star(double theta, const JudgeErrorRates& rates) {
  const double p = forward_prevalence(theta, rates);
  const double denom = p * (1.0 - p);
  if (denom <= 0.0)
    throw ValidationError(
        "forward pass rate is 0 or 1; optimal lambda is undefined");
  return theta * (1.0 - theta) * youden(rates) / denom;
}

ReductionCheck shared_ppi_equals_rg(std::span<const LabeledPair> cal,
                                    const TestScores& scores, double min_j) {
  return shared_ppi_equals_rg(cal, mean_score(scores), min_j);
}

ReductionCheck shared_ppi_equals_rg(std::span<const LabeledPair> cal,
                                    double p_test_hat, double min_j) {
  const CalibrationStats stats = estimate_calibration(cal);
  if (std::abs(stats.j_hat) <= min_j)
    throw DegenerateJError("|J| at or below floor; reduction check undefined");
  const PointEstimate rg = rg_estimate(p_test_hat, stats, min_j, 0.0);
  const PointEstimate ppi = ppi_estimate(cal, p_test_hat, 1.0 / stats.j_hat);
  return {ppi.raw, rg.raw, std::abs(ppi.raw - rg.raw)};
}

BiasValidation bias_validation_mc(double theta_a,
                                  const JudgeErrorRates& rates_a,
                                  const JudgeErrorRates& rates_b,
                                  const BiasValidationConfig& cfg,
                                  std::uint64_t seed) {
  if (cfg.n_test <= 0 || cfg.n_cal <= 0 || cfg.reps <= 0)
    throw ValidationError("n_test, n_cal and reps must be positive");
  const SharedCalBias closed =
      shared_cal_bias(theta_a, rates_a, rates_b, cfg.min_j);

  const std::uint64_t s = derive_seed(seed, synth::kSaltBiasVal);
  const kernels::Ops& k = kernels::ops();
  const std::size_t n_cal = std::size_t(cfg.n_cal);
  const std::size_t n_test = std::size_t(cfg.n_test);

  std::vector<std::uint8_t> z_cal(n_cal), zhat_cal(n_cal);
  std::vector<std::uint8_t> z_test(n_test), zhat_test(n_test);
  std::vector<std::uint32_t> u;
  std::vector<std::uint8_t> codes;

  // Calibration truth is drawn class-balanced so both operating rates stay
  // well estimated; the estimand theta_a enters through the test draw only.
  const std::uint64_t cut_half = kernels::bernoulli_cutoff(0.5);
  const std::uint64_t cut_theta = kernels::bernoulli_cutoff(theta_a);

  double sum_err = 0.0, sum_err2 = 0.0;
  for (std::int64_t rep = 0; rep < cfg.reps; ++rep) {
    CalibrationStats stats;
    bool ok = false;
    for (std::uint32_t attempt = 0; attempt < 100 && !ok; ++attempt) {
      k.fill_bernoulli(s, stream_id(0, std::uint64_t(rep), attempt), cut_half,
                       z_cal.data(), n_cal);
      synth::judge_labels(z_cal, rates_b, s,
                          stream_id(1, std::uint64_t(rep), attempt), u,
                          zhat_cal);
      const synth::PairCounts pc = synth::count_pairs(z_cal, zhat_cal, codes);
      if (pc.m0() == 0 || pc.m1() == 0) continue;
      stats = make_calibration_stats(pc.m0(), pc.m1(), pc.agree0(),
                                     pc.agree1());
      if (std::abs(stats.j_hat) <= cfg.min_j) continue;
      ok = true;
    }
    if (!ok)
      throw ResampleExhaustedError(
          "bias validation: no usable calibration draw in 100 attempts");

    k.fill_bernoulli(s, stream_id(2, std::uint64_t(rep)), cut_theta,
                     z_test.data(), n_test);
    synth::judge_labels(z_test, rates_a, s, stream_id(3, std::uint64_t(rep)),
                        u, zhat_test);
    std::uint64_t ones = 0;
    for (std::size_t i = 0; i < n_test; ++i) ones += zhat_test[i];
    const double p_hat = double(ones) / double(n_test);

    const double est = (p_hat + stats.q0_hat - 1.0) / stats.j_hat;
    const double err = est - theta_a;
    sum_err += err;
    sum_err2 += err * err;
  }

  BiasValidation out;
  out.predicted = closed.bias;
  out.reps = cfg.reps;
  out.mc_mean_error = sum_err / double(cfg.reps);
  const double var =
      (sum_err2 - sum_err * sum_err / double(cfg.reps)) / double(cfg.reps - 1);
  out.mc_se = std::sqrt(var > 0 ? var / double(cfg.reps) : 0.0);
  return out;
}

}  // namespace jeval
