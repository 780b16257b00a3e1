#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <doctest.h>

#include "jeval/errors.hpp"
#include "jeval/resampling.hpp"

using namespace jeval;

namespace {

// m0 negatives (first agree0 judged correctly), m1 positives (first agree1
// judged correctly), deterministic order.
CalibrationData cal_counts(std::string model, int m0, int m1, int agree0,
                           int agree1) {
  CalibrationData c;
  c.model_id = std::move(model);
  for (int i = 0; i < m0; ++i) {
    c.z_true.push_back(0);
    c.z_judge.push_back(i < agree0 ? 0 : 1);
  }
  for (int i = 0; i < m1; ++i) {
    c.z_true.push_back(1);
    c.z_judge.push_back(i < agree1 ? 1 : 0);
  }
  for (std::size_t i = 0; i < c.z_true.size(); ++i)
    c.item_ids.push_back(c.model_id + "-c" + std::to_string(i));
  return c;
}

TestScores scores_pattern(std::string model, int n, int ones) {
  TestScores t;
  t.model_id = std::move(model);
  for (int i = 0; i < n; ++i) {
    t.item_ids.push_back("t" + std::to_string(i));
    t.scores.push_back(i < ones ? 1.0 : 0.0);
  }
  return t;
}

EvalDataset two_arm_ds() {
  EvalDataset ds;
  ds.judge_id = "judge";
  ModelArm a, b;
  a.model_id = "A";
  a.calibration = cal_counts("A", 60, 60, 54, 51);  // q0=0.9 q1=0.85 J=0.75
  a.test = scores_pattern("A", 200, 140);
  b.model_id = "B";
  b.calibration = cal_counts("B", 60, 60, 48, 54);  // q0=0.8 q1=0.9 J=0.7
  b.test = scores_pattern("B", 200, 120);
  ds.arms = {a, b};
  return ds;
}

bool same_result(const EstimateResult& x, const EstimateResult& y) {
  return x.point == y.point && x.ci_lo == y.ci_lo && x.ci_hi == y.ci_hi &&
         x.raw_point == y.raw_point && x.n_replicates == y.n_replicates &&
         x.n_dropped == y.n_dropped && x.n_redrawn == y.n_redrawn &&
         x.n_lambda_fallback == y.n_lambda_fallback && x.n_test == y.n_test &&
         x.n_cal_a == y.n_cal_a && x.n_cal_b == y.n_cal_b;
}

}  // namespace

TEST_CASE("pinned quantile rule on an integer ladder") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);  // 1..1000, already sorted
  // h = q*B lands on integer ranks at the standard interval levels
  CHECK(quantile_sorted(v, 0.025) == 25.0);
  CHECK(quantile_sorted(v, 0.975) == 975.0);
  CHECK(quantile_sorted(v, 0.5) == 500.0);
  CHECK(quantile_sorted(v, 0.0) == 1.0);     // rank clamps to 1
  CHECK(quantile_sorted(v, 1.0) == 1000.0);  // rank clamps to B
  const std::vector<double> small = {1.0, 2.0, 3.0, 4.0};
  // h = 2.4: interpolate x[2] toward x[3]
  CHECK(quantile_sorted(small, 0.6) == doctest::Approx(2.4).epsilon(1e-15));
  CHECK_THROWS_AS(quantile_sorted(std::vector<double>{}, 0.5),
                  ValidationError);
  CHECK_THROWS_AS(quantile_sorted(small, 1.5), ValidationError);
}

TEST_CASE("plan validation") {
  BootstrapPlan p;
  CHECK_NOTHROW(p.validate());
  p.iterations = 99;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.alpha = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.alpha = 1.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.pooling_reps = 0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.max_attempts = 0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.workers = -1;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("run collapse keeps item order and means runs") {
  std::vector<ItemRuns> items = {{"a", {1, 0}}, {"b", {1, 1, 1}}, {"c", {0}}};
  const TestScores t = collapse_runs(items, "m");
  CHECK(t.model_id == "m");
  CHECK(t.item_ids == std::vector<std::string>{"a", "b", "c"});
  CHECK(t.scores[0] == doctest::Approx(0.5));
  CHECK(t.scores[1] == doctest::Approx(1.0));
  CHECK(t.scores[2] == doctest::Approx(0.0));
  items.push_back({"d", {}});
  CHECK_THROWS_AS(collapse_runs(items, "m"), EmptyRunsError);
  items.pop_back();
  items.push_back({"a", {1}});
  CHECK_THROWS_AS(collapse_runs(items, "m"), ValidationError);
  items.pop_back();
  items.push_back({"d", {2}});
  CHECK_THROWS_AS(collapse_runs(items, "m"), ValidationError);
}

TEST_CASE("reported values clamp only on the unit-interval scale") {
  EstimateResult r;
  r.point = 1.2;
  r.ci_lo = -0.1;
  r.ci_hi = 1.3;
  r.scale = EstimandScale::unit_interval;
  CHECK(r.point_reported() == 1.0);
  CHECK(r.ci_lo_reported() == 0.0);
  CHECK(r.ci_hi_reported() == 1.0);
  r.scale = EstimandScale::difference;
  CHECK(r.point_reported() == 1.2);
  CHECK(r.ci_lo_reported() == -0.1);
  CHECK(r.ci_hi_reported() == 1.3);
}

TEST_CASE("same seed, same answer; different seed, different answer") {
  const EvalDataset ds = two_arm_ds();
  EstimatorConfig cfg;
  cfg.estimator = Estimator::rg;
  BootstrapPlan plan;
  plan.iterations = 300;
  plan.seed = 42;
  plan.workers = 1;
  const EstimateResult r1 = bootstrap_estimate(ds, "A", cfg, plan);
  const EstimateResult r2 = bootstrap_estimate(ds, "A", cfg, plan);
  CHECK(same_result(r1, r2));
  plan.seed = 43;
  const EstimateResult r3 = bootstrap_estimate(ds, "A", cfg, plan);
  CHECK(r1.point != r3.point);
}

TEST_CASE("worker count never changes the answer") {
  const EvalDataset ds = two_arm_ds();
  BootstrapPlan p1;
  p1.iterations = 400;
  p1.seed = 9;
  p1.workers = 1;
  BootstrapPlan p8 = p1;
  p8.workers = 8;

  for (const Estimator est : {Estimator::naive, Estimator::rg,
                              Estimator::ppi}) {
    EstimatorConfig cfg;
    cfg.estimator = est;
    BootstrapDetail d1, d8;
    const EstimateResult r1 = bootstrap_estimate(ds, "A", cfg, p1, &d1);
    const EstimateResult r8 = bootstrap_estimate(ds, "A", cfg, p8, &d8);
    CHECK(same_result(r1, r8));
    CHECK(d1.replicates == d8.replicates);
    const EstimateResult c1 = bootstrap_compare(ds, "A", "B", cfg, p1);
    const EstimateResult c8 = bootstrap_compare(ds, "A", "B", cfg, p8);
    CHECK(same_result(c1, c8));
  }
}

TEST_CASE("comparison replicates reuse one test index draw for both arms") {
  const EvalDataset ds = two_arm_ds();
  EstimatorConfig cfg;
  cfg.estimator = Estimator::rg;
  BootstrapPlan plan;
  plan.iterations = 100;
  plan.seed = 5;
  plan.workers = 2;
  BootstrapDetail d;
  d.trace_test_indices = true;
  bootstrap_compare(ds, "A", "B", cfg, plan, &d);
  REQUIRE(d.trace_a.size() == 100);
  REQUIRE(d.trace_b.size() == 100);
  for (std::size_t g = 0; g < 100; ++g) {
    CHECK(!d.trace_a[g].empty());
    CHECK(d.trace_a[g] == d.trace_b[g]);
  }
}

TEST_CASE("calibration content does not perturb the test index stream") {
  EvalDataset ds1 = two_arm_ds();
  EvalDataset ds2 = two_arm_ds();
  ds2.arms[0].calibration = cal_counts("A", 80, 40, 70, 38);  // different set
  EstimatorConfig cfg;
  cfg.estimator = Estimator::rg;
  BootstrapPlan plan;
  plan.iterations = 150;
  plan.seed = 31;
  plan.workers = 1;
  BootstrapDetail t1, t2;
  t1.trace_test_indices = true;
  t2.trace_test_indices = true;
  const EstimateResult r1 = bootstrap_estimate(ds1, "A", cfg, plan, &t1);
  const EstimateResult r2 = bootstrap_estimate(ds2, "A", cfg, plan, &t2);
  CHECK(r1.point != r2.point);  // the correction itself did change
  CHECK(t1.trace_a == t2.trace_a);
}

TEST_CASE("constant scores give a zero-width interval at the constant") {
  EvalDataset ds;
  ds.judge_id = "judge";
  ModelArm a;
  a.model_id = "A";
  a.test.model_id = "A";
  for (int i = 0; i < 50; ++i) {
    a.test.item_ids.push_back("t" + std::to_string(i));
    a.test.scores.push_back(0.7);
  }
  ds.arms = {a};
  EstimatorConfig cfg;
  cfg.estimator = Estimator::naive;
  BootstrapPlan plan;
  plan.iterations = 200;
  const EstimateResult r = bootstrap_estimate(ds, "A", cfg, plan);
  CHECK(r.point == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(r.ci_lo == r.ci_hi);
  CHECK(r.ci_lo == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(r.raw_point == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(r.n_test == 50);
  CHECK(r.scale == EstimandScale::unit_interval);
}

TEST_CASE("one_x rectifier delegates to the pooled procedure") {
  const EvalDataset ds = two_arm_ds();
  EstimatorConfig cfg;
  cfg.estimator = Estimator::ppi;
  cfg.budget = Budget::one_x;
  BootstrapPlan plan;
  plan.iterations = 200;
  plan.seed = 77;
  plan.pooling_reps = 4;
  const EstimateResult via_estimate = bootstrap_estimate(ds, "A", cfg, plan);
  const EstimateResult direct = ppi_half_cal_pooled(ds, "A", cfg, plan);
  CHECK(same_result(via_estimate, direct));
  CHECK(direct.n_replicates + direct.n_dropped == 200 * 4);
  CHECK(direct.n_cal_a == 60);  // half of 120
}

TEST_CASE("pooled procedure with one full pool equals the plain bootstrap") {
  const EvalDataset ds = two_arm_ds();
  EstimatorConfig cfg;
  cfg.estimator = Estimator::ppi;
  cfg.budget = Budget::two_x;
  BootstrapPlan plan;
  plan.iterations = 250;
  plan.seed = 12;
  plan.pooling_reps = 1;
  const EstimateResult pooled = ppi_half_cal_pooled(ds, "A", cfg, plan);
  const EstimateResult plain = bootstrap_estimate(ds, "A", cfg, plan);
  CHECK(same_result(pooled, plain));
}

TEST_CASE("halving needs four labeled items per class") {
  EvalDataset ds = two_arm_ds();
  ds.arms[0].calibration = cal_counts("A", 3, 20, 3, 18);
  EstimatorConfig cfg;
  cfg.estimator = Estimator::ppi;
  cfg.budget = Budget::one_x;
  BootstrapPlan plan;
  plan.iterations = 100;
  CHECK_THROWS_AS(ppi_half_cal_pooled(ds, "A", cfg, plan),
                  InsufficientCalibrationError);
}

TEST_CASE("redraw and skip policies account for every replicate") {
  // One labeled negative among ten: a third of resamples lose that class.
  EvalDataset ds = two_arm_ds();
  ds.arms[0].calibration = cal_counts("A", 1, 9, 1, 9);
  EstimatorConfig cfg;
  cfg.estimator = Estimator::rg;
  BootstrapPlan plan;
  plan.iterations = 300;
  plan.seed = 3;

  plan.degenerate_policy = DegeneratePolicy::redraw;
  const EstimateResult redraw = bootstrap_estimate(ds, "A", cfg, plan);
  CHECK(redraw.n_redrawn > 0);
  CHECK(redraw.n_replicates + redraw.n_dropped == 300);
  CHECK(redraw.n_dropped == 0);  // 100 attempts make a full loss implausible

  plan.degenerate_policy = DegeneratePolicy::skip;
  const EstimateResult skip = bootstrap_estimate(ds, "A", cfg, plan);
  CHECK(skip.n_dropped > 0);
  CHECK(skip.n_redrawn == 0);
  CHECK(skip.n_replicates + skip.n_dropped == 300);
  bool noted = false;
  for (const std::string& w : skip.warnings)
    noted = noted || w.find("degenerate_resamples_dropped") != std::string::npos;
  CHECK(noted);
}

TEST_CASE("a judge pinned at chance exhausts the resampler") {
  // Constant judge output: q0 = 0, q1 = 1 in every resample, so J is exactly
  // zero no matter which items are drawn.
  EvalDataset ds = two_arm_ds();
  CalibrationData c;
  c.model_id = "A";
  for (int i = 0; i < 30; ++i) {
    c.z_true.push_back(std::uint8_t(i % 2));
    c.z_judge.push_back(1);
  }
  ds.arms[0].calibration = c;
  EstimatorConfig cfg;
  cfg.estimator = Estimator::rg;
  BootstrapPlan plan;
  plan.iterations = 100;
  plan.max_attempts = 3;  // keep the failure quick
  CHECK_THROWS_AS(bootstrap_estimate(ds, "A", cfg, plan),
                  ResampleExhaustedError);
}

TEST_CASE("weak judge flags the estimate") {
  EvalDataset ds = two_arm_ds();
  ds.arms[0].calibration = cal_counts("A", 100, 100, 55, 55);  // J = 0.1
  EstimatorConfig cfg;
  cfg.estimator = Estimator::rg;
  BootstrapPlan plan;
  plan.iterations = 150;
  const EstimateResult r = bootstrap_estimate(ds, "A", cfg, plan);
  CHECK(r.low_j);
  bool noted = false;
  for (const std::string& w : r.warnings)
    noted = noted || w.find("low_J") != std::string::npos;
  CHECK(noted);
}

TEST_CASE("judge-quality bootstrap for a perfect judge collapses to 1") {
  CalibrationData c = cal_counts("A", 50, 50, 50, 50);
  BootstrapPlan plan;
  plan.iterations = 200;
  const JudgeQualityResult q = bootstrap_judge_quality(c, plan);
  CHECK(q.j.raw_point == 1.0);
  CHECK(q.j.point == 1.0);
  CHECK(q.j.ci_lo == 1.0);
  CHECK(q.j.ci_hi == 1.0);
  CHECK(q.q0.point == 1.0);
  CHECK(q.q1.point == 1.0);
  CHECK(q.j.n_cal_a == 100);
  CHECK(q.j.scale == EstimandScale::difference);
  CHECK(q.q0.scale == EstimandScale::unit_interval);
}

TEST_CASE("informedness gap between identical calibrations straddles zero") {
  const CalibrationData a = cal_counts("A", 100, 100, 90, 90);
  const CalibrationData b = cal_counts("B", 100, 100, 90, 90);
  BootstrapPlan plan;
  plan.iterations = 500;
  plan.seed = 21;
  const DeltaJResult d = bootstrap_delta_j(a, b, plan);
  CHECK(d.delta_j.raw_point == 0.0);
  CHECK(std::abs(d.delta_j.point) < 0.02);
  CHECK(d.delta_j.ci_lo < 0.0);
  CHECK(d.delta_j.ci_hi > 0.0);
  CHECK_FALSE(d.excludes_zero);
  CHECK(d.a.j.raw_point == doctest::Approx(0.8));
  CHECK(d.b.j.raw_point == doctest::Approx(0.8));
  CHECK(d.delta_j.n_cal_a == 200);
  CHECK(d.delta_j.n_cal_b == 200);
}

TEST_CASE("a real informedness gap is detected") {
  const CalibrationData a = cal_counts("A", 200, 200, 196, 192);  // J=0.94
  const CalibrationData b = cal_counts("B", 200, 200, 130, 128);  // J=0.29
  BootstrapPlan plan;
  plan.iterations = 400;
  plan.seed = 8;
  const DeltaJResult d = bootstrap_delta_j(a, b, plan);
  CHECK(d.delta_j.raw_point == doctest::Approx(0.65).epsilon(1e-12));
  CHECK(d.excludes_zero);
  CHECK(d.delta_j.ci_lo > 0.0);
}
