#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jeval/dataset.hpp"
#include "jeval/estimators.hpp"

namespace jeval {

// What to do with a bootstrap replicate whose calibration resample cannot
// support the estimator (a missing class or |J| at the floor): draw a fresh
// replicate from the same replicate-indexed stream (bounded attempts, then
// drop), or drop immediately.
enum class DegeneratePolicy { redraw, skip };

struct BootstrapPlan {
  std::int64_t iterations = 10000;  // B
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int pooling_reps = 1;  // >1 only for the half-calibration pooled procedure
  DegeneratePolicy degenerate_policy = DegeneratePolicy::redraw;
  int max_attempts = 100;  // per-replicate redraw budget (caps total draws
                           // at max_attempts * B independent of workers)
  int workers = 0;         // 0 = hardware concurrency; results are identical
                           // for any worker count

  void validate() const;
};

enum class EstimandScale { unit_interval, difference };

struct EstimateResult {
  double point = 0.0;      // median of raw replicate values
  double ci_lo = 0.0;      // percentile interval, raw scale
  double ci_hi = 0.0;
  double raw_point = 0.0;  // plug-in estimate on the original data
  EstimandScale scale = EstimandScale::unit_interval;

  std::int64_t n_replicates = 0;  // usable replicates behind the quantiles
  std::int64_t n_dropped = 0;
  std::int64_t n_redrawn = 0;         // extra attempts consumed
  std::int64_t n_lambda_fallback = 0; // replicates with zero judge variance
  std::int64_t n_test = 0;
  std::int64_t n_cal_a = 0;
  std::int64_t n_cal_b = 0;
  bool low_j = false;  // plug-in fit ran with J below the warn threshold
  std::vector<std::string> warnings;

  // Reported values: per-model accuracies are clamped to [0,1], differences
  // are not.
  double point_reported() const;
  double ci_lo_reported() const;
  double ci_hi_reported() const;
};

// Optional visibility into the resampling internals for tests and SE
// extraction. Tracing records the exact test index vector each arm consumed
// per replicate.
struct BootstrapDetail {
  bool trace_test_indices = false;
  std::vector<double> replicates;  // usable raw values in replicate order
  std::vector<std::vector<std::uint32_t>> trace_a;
  std::vector<std::vector<std::uint32_t>> trace_b;
};

// Judge runs for one unlabeled test item.
struct ItemRuns {
  std::string item_id;
  std::vector<std::uint8_t> runs;
};

// Per-item mean over judge runs; item order preserved.
TestScores collapse_runs(std::span<const ItemRuns> items,
                         std::string model_id);

// Rank-based quantile with linear interpolation, pinned for cross-language
// reproducibility: on B ascending values, rank h = q*B (1-based) clamped to
// [1, B]; result interpolates x[floor(h)] toward x[ceil(h)]. At B=10000,
// alpha=0.05 the interval endpoints are exactly the 250th and 9750th order
// statistics.
double quantile_sorted(std::span<const double> sorted, double q);

// B replicates, each resampling calibration items and test items separately
// (with replacement), recomputing the estimator from scratch (rates and
// lambda included). Point estimate is the replicate median; the CI is the
// percentile interval. PPI with a one_x budget delegates to the pooled
// half-calibration procedure using plan.pooling_reps.
EstimateResult bootstrap_estimate(const EvalDataset& ds,
                                  std::string_view model_id,
                                  const EstimatorConfig& config,
                                  const BootstrapPlan& plan,
                                  BootstrapDetail* detail = nullptr);

// Difference estimate for two arms with paired test resampling: one test
// index draw per replicate is applied to both models. Shared design draws one
// calibration resample (the incumbent's) per replicate and applies its rates
// to both arms; model-specific draws per-arm calibration independently.
EstimateResult bootstrap_compare(const EvalDataset& ds,
                                 std::string_view model_a,
                                 std::string_view model_b,
                                 const EstimatorConfig& config,
                                 const BootstrapPlan& plan,
                                 BootstrapDetail* detail = nullptr);

// Labeling-budget-halved PPI: pooling_reps independent half-subsets of the
// calibration set, a full bootstrap within each, all replicates pooled into
// one quantile computation. With pooling_reps=1 and a two_x budget (full
// calibration) this is bit-identical to bootstrap_estimate.
EstimateResult ppi_half_cal_pooled(const EvalDataset& ds,
                                   std::string_view model_id,
                                   const EstimatorConfig& config,
                                   const BootstrapPlan& plan,
                                   BootstrapDetail* detail = nullptr);

// Calibration-only bootstrap: per-model judge-quality quantities with CIs.
struct JudgeQualityResult {
  EstimateResult j;  // scale: difference (J is not clamped to [0,1])
  EstimateResult q0;
  EstimateResult q1;
};

JudgeQualityResult bootstrap_judge_quality(const CalibrationData& cal,
                                           const BootstrapPlan& plan);

// Each replicate resamples both calibration sets independently and recomputes
// J per model and their difference.
struct DeltaJResult {
  EstimateResult delta_j;  // scale: difference
  JudgeQualityResult a;
  JudgeQualityResult b;
  bool excludes_zero = false;  // zero outside the delta_j CI
};

DeltaJResult bootstrap_delta_j(const CalibrationData& cal_a,
                               const CalibrationData& cal_b,
                               const BootstrapPlan& plan);

}  // namespace jeval
