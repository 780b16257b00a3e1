#include "jeval/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>

#include "jeval/errors.hpp"
#include "jeval/kernels/kernels.hpp"
#include "jeval/kernels/philox.hpp"
#include "jeval/measurement.hpp"
#include "synth.hpp"

namespace jeval {

void BootstrapPlan::validate() const {
  if (iterations < 100)
    throw ValidationError("bootstrap iterations must be >= 100");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("alpha must lie in (0,1)");
  if (pooling_reps < 1) throw ValidationError("pooling_reps must be >= 1");
  if (max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
  if (workers < 0) throw ValidationError("workers must be >= 0");
}

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

double EstimateResult::point_reported() const {
  return scale == EstimandScale::unit_interval ? clamp01(point) : point;
}
double EstimateResult::ci_lo_reported() const {
  return scale == EstimandScale::unit_interval ? clamp01(ci_lo) : ci_lo;
}
double EstimateResult::ci_hi_reported() const {
  return scale == EstimandScale::unit_interval ? clamp01(ci_hi) : ci_hi;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("q must lie in [0,1]");
  const double b = double(sorted.size());
  double h = q * b;  // 1-based rank
  if (h < 1.0) h = 1.0;
  if (h > b) h = b;
  const double fl = std::floor(h);
  const std::size_t lo = std::size_t(fl) - 1;
  const std::size_t hi = std::min(std::size_t(std::ceil(h)) - 1,
                                  sorted.size() - 1);
  return sorted[lo] + (h - fl) * (sorted[hi] - sorted[lo]);
}

TestScores collapse_runs(std::span<const ItemRuns> items,
                         std::string model_id) {
  TestScores out;
  out.model_id = std::move(model_id);
  out.item_ids.reserve(items.size());
  out.scores.reserve(items.size());
  std::unordered_set<std::string_view> seen;
  for (const ItemRuns& it : items) {
    if (it.runs.empty())
      throw EmptyRunsError("item " + it.item_id + " has no judge runs");
    if (!seen.insert(it.item_id).second)
      throw ValidationError("duplicate test item id " + it.item_id);
    std::uint64_t sum = 0;
    for (std::uint8_t r : it.runs) {
      if (r > 1) throw ValidationError("judge run labels must be 0 or 1");
      sum += r;
    }
    out.item_ids.push_back(it.item_id);
    out.scores.push_back(double(sum) / double(it.runs.size()));
  }
  return out;
}

namespace {

// Stream domains under the bootstrap salt. The test domain is shared by both
// arms of a comparison: pairing is enforced by construction because one index
// draw feeds both gathers.
constexpr std::uint32_t kDomTest = 0;
constexpr std::uint32_t kDomCalA = 1;
constexpr std::uint32_t kDomCalB = 2;
constexpr std::uint32_t kDomHalfA = 3;
constexpr std::uint32_t kDomHalfB = 4;
constexpr std::uint32_t kDomCalOnlyA = 5;
constexpr std::uint32_t kDomCalOnlyB = 6;

constexpr std::size_t kMaxIndexable = std::size_t(1) << 31;

struct CalCounts {
  std::uint64_t c[4] = {0, 0, 0, 0};  // code = z_true*2 + z_judge

  std::int64_t m0() const { return std::int64_t(c[0] + c[1]); }
  std::int64_t m1() const { return std::int64_t(c[2] + c[3]); }
  std::int64_t m() const { return m0() + m1(); }
  bool both_classes() const { return m0() > 0 && m1() > 0; }
  double q0() const { return double(c[0]) / double(m0()); }
  double q1() const { return double(c[3]) / double(m1()); }
  double j() const { return q0() + q1() - 1.0; }
  double ybar() const { return double(c[2] + c[3]) / double(m()); }
  double pcal() const { return double(c[1] + c[3]) / double(m()); }
};

std::vector<std::uint8_t> to_codes(const CalibrationData& cal) {
  cal.validate();
  std::vector<std::uint8_t> codes(cal.size());
  for (std::size_t i = 0; i < codes.size(); ++i)
    codes[i] = std::uint8_t(cal.z_true[i] * 2 + cal.z_judge[i]);
  return codes;
}

CalCounts full_counts(const std::vector<std::uint8_t>& codes) {
  CalCounts cc;
  kernels::ops().count_codes(codes.data(), codes.size(), cc.c);
  return cc;
}

CalibrationStats stats_from_counts(const CalCounts& cc) {
  return make_calibration_stats(cc.m0(), cc.m1(), std::int64_t(cc.c[0]),
                                std::int64_t(cc.c[3]));
}

enum class Kind {
  naive_one,
  rg_one,
  ppi_one,
  naive_cmp,
  rg_cmp_shared,
  rg_cmp_two,
  ppi_cmp,
};

bool is_compare(Kind k) {
  return k == Kind::naive_cmp || k == Kind::rg_cmp_shared ||
         k == Kind::rg_cmp_two || k == Kind::ppi_cmp;
}

struct Scratch {
  std::vector<std::uint32_t> tidx;
  std::vector<std::uint32_t> cidx;
  std::vector<std::uint8_t> gath;
};

struct Tally {
  std::int64_t redraws = 0;
  std::int64_t drops = 0;
  std::int64_t lambda_fallback = 0;
};

struct Job {
  Kind kind = Kind::naive_one;
  std::uint64_t seed = 0;  // already salted
  const double* scores_a = nullptr;
  const double* scores_b = nullptr;
  std::size_t n = 0;
  const std::vector<std::vector<std::uint8_t>>* cal_a = nullptr;  // per pool
  const std::vector<std::vector<std::uint8_t>>* cal_b = nullptr;
  double min_j = 1e-6;
  bool lambda_fixed = false;
  double lambda_value = 0.0;
  double lambda_max = 10.0;
  std::int64_t B = 0;
  int pool_reps = 1;
  int max_attempts = 100;
  DegeneratePolicy policy = DegeneratePolicy::redraw;
  BootstrapDetail* detail = nullptr;
};

CalCounts resample_counts(const kernels::Ops& k,
                          const std::vector<std::uint8_t>& codes,
                          std::uint64_t seed, std::uint32_t dom,
                          std::uint64_t rep, std::uint32_t attempt,
                          std::uint32_t pool, Scratch& s) {
  const std::size_t m = codes.size();
  s.cidx.resize(m);
  s.gath.resize(m);
  k.fill_indices(seed, stream_id(dom, rep, attempt, pool), std::uint32_t(m),
                 s.cidx.data(), m);
  for (std::size_t i = 0; i < m; ++i) s.gath[i] = codes[s.cidx[i]];
  CalCounts cc;
  k.count_codes(s.gath.data(), m, cc.c);
  return cc;
}

double ppi_value(const CalCounts& cc, double p_test, const Job& job,
                 Tally& tally) {
  const double ybar = cc.ybar();
  const double pcal = cc.pcal();
  double lam;
  if (job.lambda_fixed) {
    lam = job.lambda_value;
  } else {
    const double var = pcal * (1.0 - pcal);
    if (var <= 0.0) {
      lam = 0.0;
      ++tally.lambda_fallback;
    } else {
      const double cov = double(cc.c[3]) / double(cc.m()) - ybar * pcal;
      const double ratio = double(cc.m()) / double(job.n);
      lam = std::clamp(cov / (var * (1.0 + ratio)), 0.0, job.lambda_max);
    }
  }
  return ybar + lam * (p_test - pcal);
}

bool eval_replicate(const Job& job, const kernels::Ops& k, std::int64_t g,
                    Scratch& s, double& out, Tally& tally) {
  const std::int64_t pool = g / job.B;
  const std::int64_t rep = g % job.B;
  const std::uint32_t t = std::uint32_t(pool);
  const std::uint64_t b = std::uint64_t(rep);
  const int attempts =
      job.policy == DegeneratePolicy::redraw ? job.max_attempts : 1;
  const bool trace = job.detail && job.detail->trace_test_indices;

  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) ++tally.redraws;
    const std::uint32_t at = std::uint32_t(attempt);

    s.tidx.resize(job.n);
    k.fill_indices(job.seed, stream_id(kDomTest, b, at, t),
                   std::uint32_t(job.n), s.tidx.data(), job.n);
    const double pa =
        k.gather_sum(job.scores_a, s.tidx.data(), job.n) / double(job.n);
    if (trace) job.detail->trace_a[std::size_t(g)] = s.tidx;
    double pb = 0.0;
    if (is_compare(job.kind)) {
      pb = k.gather_sum(job.scores_b, s.tidx.data(), job.n) / double(job.n);
      if (trace) job.detail->trace_b[std::size_t(g)] = s.tidx;
    }

    switch (job.kind) {
      case Kind::naive_one:
        out = pa;
        return true;
      case Kind::naive_cmp:
        out = pa - pb;
        return true;
      case Kind::rg_one: {
        const CalCounts cc = resample_counts(k, (*job.cal_a)[std::size_t(pool)],
                                             job.seed, kDomCalA, b, at, t, s);
        if (!cc.both_classes()) continue;
        const double j = cc.j();
        if (std::abs(j) <= job.min_j) continue;
        out = (pa + cc.q0() - 1.0) / j;
        return true;
      }
      case Kind::rg_cmp_shared: {
        const CalCounts cc = resample_counts(k, (*job.cal_a)[std::size_t(pool)],
                                             job.seed, kDomCalA, b, at, t, s);
        if (!cc.both_classes()) continue;
        const double j = cc.j();
        if (std::abs(j) <= job.min_j) continue;
        const double q0 = cc.q0();
        out = (pa + q0 - 1.0) / j - (pb + q0 - 1.0) / j;
        return true;
      }
      case Kind::rg_cmp_two: {
        const CalCounts ca = resample_counts(k, (*job.cal_a)[std::size_t(pool)],
                                             job.seed, kDomCalA, b, at, t, s);
        if (!ca.both_classes()) continue;
        const double ja = ca.j();
        if (std::abs(ja) <= job.min_j) continue;
        const CalCounts cb = resample_counts(k, (*job.cal_b)[std::size_t(pool)],
                                             job.seed, kDomCalB, b, at, t, s);
        if (!cb.both_classes()) continue;
        const double jb = cb.j();
        if (std::abs(jb) <= job.min_j) continue;
        out = (pa + ca.q0() - 1.0) / ja - (pb + cb.q0() - 1.0) / jb;
        return true;
      }
      case Kind::ppi_one: {
        const CalCounts cc = resample_counts(k, (*job.cal_a)[std::size_t(pool)],
                                             job.seed, kDomCalA, b, at, t, s);
        out = ppi_value(cc, pa, job, tally);
        return true;
      }
      case Kind::ppi_cmp: {
        const CalCounts ca = resample_counts(k, (*job.cal_a)[std::size_t(pool)],
                                             job.seed, kDomCalA, b, at, t, s);
        const CalCounts cb = resample_counts(k, (*job.cal_b)[std::size_t(pool)],
                                             job.seed, kDomCalB, b, at, t, s);
        out = ppi_value(ca, pa, job, tally) - ppi_value(cb, pb, job, tally);
        return true;
      }
    }
  }
  ++tally.drops;
  return false;
}

struct RunOutput {
  std::vector<double> values;
  std::vector<std::uint8_t> usable;
  Tally tally;
};

int resolve_workers(int workers, std::int64_t total) {
  int w = workers > 0 ? workers : int(std::thread::hardware_concurrency());
  if (w < 1) w = 1;
  return int(std::min<std::int64_t>(w, total));
}

// Contiguous replicate slices per worker; every replicate is a pure function
// of its global index, so the partition does not affect results.
template <typename F>
void run_partitioned(std::int64_t total, int workers, F&& body) {
  const int w = resolve_workers(workers, total);
  if (w <= 1) {
    body(0, std::int64_t(0), total);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
  std::vector<std::thread> threads;
  threads.reserve(std::size_t(w));
  const std::int64_t chunk = (total + w - 1) / w;
  for (int i = 0; i < w; ++i) {
    const std::int64_t lo = std::int64_t(i) * chunk;
    const std::int64_t hi = std::min(total, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&, i, lo, hi] {
      try {
        body(i, lo, hi);
      } catch (...) {
        errors[std::size_t(i)] = std::current_exception();
      }
    });
  }
  for (std::thread& th : threads) th.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

RunOutput run_job(const Job& job, int workers) {
  const std::int64_t total = job.B * job.pool_reps;
  RunOutput out;
  out.values.resize(std::size_t(total));
  out.usable.assign(std::size_t(total), 0);
  if (job.detail && job.detail->trace_test_indices) {
    job.detail->trace_a.assign(std::size_t(total), {});
    job.detail->trace_b.assign(std::size_t(total), {});
  }
  const kernels::Ops& k = kernels::ops();
  std::vector<Tally> tallies(std::size_t(resolve_workers(workers, total)));
  run_partitioned(total, workers, [&](int w, std::int64_t lo, std::int64_t hi) {
    Scratch s;
    Tally& tally = tallies[std::size_t(w)];
    for (std::int64_t g = lo; g < hi; ++g) {
      double v = 0.0;
      if (eval_replicate(job, k, g, s, v, tally)) {
        out.values[std::size_t(g)] = v;
        out.usable[std::size_t(g)] = 1;
      }
    }
  });
  for (const Tally& t : tallies) {
    out.tally.redraws += t.redraws;
    out.tally.drops += t.drops;
    out.tally.lambda_fallback += t.lambda_fallback;
  }
  return out;
}

EstimateResult summarize(const RunOutput& ro, const BootstrapPlan& plan,
                         EstimandScale scale, BootstrapDetail* detail) {
  std::vector<double> vals;
  vals.reserve(ro.values.size());
  for (std::size_t g = 0; g < ro.values.size(); ++g)
    if (ro.usable[g]) vals.push_back(ro.values[g]);
  if (detail) detail->replicates = vals;
  if (vals.empty())
    throw ResampleExhaustedError(
        "every bootstrap replicate was degenerate; the calibration data sit "
        "too close to J = 0 to resample");
  std::vector<double> sorted = vals;
  std::sort(sorted.begin(), sorted.end());
  EstimateResult r;
  r.scale = scale;
  r.point = quantile_sorted(sorted, 0.5);
  r.ci_lo = quantile_sorted(sorted, plan.alpha / 2.0);
  r.ci_hi = quantile_sorted(sorted, 1.0 - plan.alpha / 2.0);
  r.n_replicates = std::int64_t(vals.size());
  r.n_dropped = ro.tally.drops;
  r.n_redrawn = ro.tally.redraws;
  r.n_lambda_fallback = ro.tally.lambda_fallback;
  if (r.n_dropped > 0)
    r.warnings.push_back("degenerate_resamples_dropped: " +
                         std::to_string(r.n_dropped) + " of " +
                         std::to_string(ro.values.size()) + " replicates");
  if (r.n_lambda_fallback > 0)
    r.warnings.push_back("lambda_fallback: zero judge variance in " +
                         std::to_string(r.n_lambda_fallback) + " replicates");
  return r;
}

void add_low_j_warning(EstimateResult& r, const CalibrationStats& stats,
                       double warn_j, const std::string& model_id) {
  if (stats.j_hat < warn_j) {
    r.low_j = true;
    r.warnings.push_back("low_J: J_hat=" + std::to_string(stats.j_hat) +
                         " below " + std::to_string(warn_j) + " (model " +
                         model_id + ")");
  }
}

void check_indexable(std::size_t n, const char* what) {
  if (n >= kMaxIndexable)
    throw ValidationError(std::string(what) + " too large to resample");
}

void validate_config(const EstimatorConfig& config) {
  if (config.design == CalibrationDesign::shared &&
      config.estimator != Estimator::rg)
    throw ValidationError(
        "shared calibration design is only valid for the corrected-mixture "
        "estimator");
  if (config.min_j <= 0.0) throw ValidationError("min_j must be positive");
  if (config.lambda_max < 0.0)
    throw ValidationError("lambda_max must be >= 0");
}

const CalibrationData& shared_source(const EvalDataset& ds,
                                     const EstimatorConfig& config,
                                     std::string_view fallback) {
  const std::string_view inc =
      config.incumbent.empty() ? fallback : std::string_view(config.incumbent);
  if (!ds.has_arm(inc))
    throw ValidationError("incumbent model " + std::string(inc) +
                          " not present in the dataset");
  return ds.arm(inc).calibration;
}

// Half subsets drawn without replacement, one per pooling rep; with
// halve=false every pool sees the full set.
std::vector<std::vector<std::uint8_t>> make_pools(
    const std::vector<std::uint8_t>& codes, int pool_reps, bool halve,
    std::uint64_t seed, std::uint32_t dom) {
  std::vector<std::vector<std::uint8_t>> pools;
  pools.reserve(std::size_t(pool_reps));
  if (!halve) {
    for (int t = 0; t < pool_reps; ++t) pools.push_back(codes);
    return pools;
  }
  const std::size_t m = codes.size();
  const std::size_t h = m / 2;
  if (h == 0)
    throw InsufficientCalibrationError(
        "calibration too small to halve for the pooled procedure");
  std::vector<std::uint32_t> perm(m);
  for (int t = 0; t < pool_reps; ++t) {
    std::iota(perm.begin(), perm.end(), 0u);
    PhiloxStream rng(seed, stream_id(dom, 0, 0, std::uint32_t(t)));
    std::vector<std::uint8_t> sub(h);
    for (std::size_t i = 0; i < h; ++i) {
      const std::size_t pick =
          i + std::size_t(rng.below(std::uint32_t(m - i)));
      std::swap(perm[i], perm[pick]);
      sub[i] = codes[perm[i]];
    }
    pools.push_back(std::move(sub));
  }
  return pools;
}

double plug_in_ppi(const CalCounts& cc, double p_test, std::size_t n_test,
                   const EstimatorConfig& config, std::int64_t* fallback) {
  Job j;
  j.n = n_test;
  j.lambda_fixed = config.lambda.fixed;
  j.lambda_value = config.lambda.value;
  j.lambda_max = config.lambda_max;
  Tally t;
  const double v = ppi_value(cc, p_test, j, t);
  if (fallback && t.lambda_fallback > 0) ++*fallback;
  return v;
}

}  // namespace

EstimateResult bootstrap_estimate(const EvalDataset& ds,
                                  std::string_view model_id,
                                  const EstimatorConfig& config,
                                  const BootstrapPlan& plan,
                                  BootstrapDetail* detail) {
  plan.validate();
  validate_config(config);
  if (config.estimator == Estimator::ppi && config.budget == Budget::one_x)
    return ppi_half_cal_pooled(ds, model_id, config, plan, detail);

  const ModelArm& arm = ds.arm(model_id);
  const double p_hat = mean_score(arm.test);  // validates scores
  check_indexable(arm.test.scores.size(), "test set");

  Job job;
  job.seed = derive_seed(plan.seed, synth::kSaltBootstrap);
  job.scores_a = arm.test.scores.data();
  job.n = arm.test.scores.size();
  job.min_j = config.min_j;
  job.lambda_fixed = config.lambda.fixed;
  job.lambda_value = config.lambda.value;
  job.lambda_max = config.lambda_max;
  job.B = plan.iterations;
  job.max_attempts = plan.max_attempts;
  job.policy = plan.degenerate_policy;
  job.detail = detail;

  std::vector<std::vector<std::uint8_t>> cal_pool;
  CalibrationStats plug_stats;
  std::int64_t n_cal = 0;

  switch (config.estimator) {
    case Estimator::naive: {
      job.kind = Kind::naive_one;
      break;
    }
    case Estimator::rg: {
      const CalibrationData& cal =
          config.design == CalibrationDesign::shared
              ? shared_source(ds, config, model_id)
              : arm.calibration;
      check_indexable(cal.size(), "calibration set");
      cal_pool.push_back(to_codes(cal));
      plug_stats = stats_from_counts(full_counts(cal_pool[0]));
      n_cal = std::int64_t(cal.size());
      job.kind = Kind::rg_one;
      job.cal_a = &cal_pool;
      break;
    }
    case Estimator::ppi: {
      const CalibrationData& cal = arm.calibration;
      check_indexable(cal.size(), "calibration set");
      if (cal.size() == 0)
        throw EmptyCalibrationError("model " + std::string(model_id) +
                                    " has no calibration pairs");
      cal_pool.push_back(to_codes(cal));
      n_cal = std::int64_t(cal.size());
      job.kind = Kind::ppi_one;
      job.cal_a = &cal_pool;
      break;
    }
  }

  const RunOutput ro = run_job(job, plan.workers);
  EstimateResult out = summarize(ro, plan, EstimandScale::unit_interval,
                                 detail);
  out.n_test = std::int64_t(job.n);
  out.n_cal_a = n_cal;

  switch (config.estimator) {
    case Estimator::naive:
      out.raw_point = p_hat;
      break;
    case Estimator::rg: {
      const PointEstimate pe =
          rg_estimate(p_hat, plug_stats, config.min_j, config.warn_j);
      out.raw_point = pe.raw;
      add_low_j_warning(out, plug_stats, config.warn_j,
                        config.design == CalibrationDesign::shared &&
                                !config.incumbent.empty()
                            ? config.incumbent
                            : std::string(model_id));
      break;
    }
    case Estimator::ppi: {
      std::int64_t fb = 0;
      out.raw_point = plug_in_ppi(full_counts((*job.cal_a)[0]), p_hat, job.n,
                                  config, &fb);
      break;
    }
  }
  return out;
}

EstimateResult ppi_half_cal_pooled(const EvalDataset& ds,
                                   std::string_view model_id,
                                   const EstimatorConfig& config,
                                   const BootstrapPlan& plan,
                                   BootstrapDetail* detail) {
  plan.validate();
  validate_config(config);
  if (config.estimator != Estimator::ppi)
    throw ValidationError(
        "half-calibration pooling applies to the rectifier estimator only");

  const ModelArm& arm = ds.arm(model_id);
  const double p_hat = mean_score(arm.test);
  check_indexable(arm.test.scores.size(), "test set");
  const CalibrationData& cal = arm.calibration;
  check_indexable(cal.size(), "calibration set");
  const std::vector<std::uint8_t> codes = to_codes(cal);
  if (codes.empty())
    throw EmptyCalibrationError("model " + std::string(model_id) +
                                " has no calibration pairs");

  const bool halve = config.budget == Budget::one_x;
  const std::uint64_t seed = derive_seed(plan.seed, synth::kSaltBootstrap);
  if (halve) {
    const CalCounts cc = full_counts(codes);
    if (cc.m0() < 4 || cc.m1() < 4)
      throw InsufficientCalibrationError(
          "pooled half-calibration needs at least 4 labeled items per class "
          "for model " +
          std::string(model_id));
  }
  const std::vector<std::vector<std::uint8_t>> pools =
      make_pools(codes, plan.pooling_reps, halve, seed, kDomHalfA);

  Job job;
  job.kind = Kind::ppi_one;
  job.seed = seed;
  job.scores_a = arm.test.scores.data();
  job.n = arm.test.scores.size();
  job.cal_a = &pools;
  job.min_j = config.min_j;
  job.lambda_fixed = config.lambda.fixed;
  job.lambda_value = config.lambda.value;
  job.lambda_max = config.lambda_max;
  job.B = plan.iterations;
  job.pool_reps = plan.pooling_reps;
  job.max_attempts = plan.max_attempts;
  job.policy = plan.degenerate_policy;
  job.detail = detail;

  const RunOutput ro = run_job(job, plan.workers);
  EstimateResult out = summarize(ro, plan, EstimandScale::unit_interval,
                                 detail);
  out.n_test = std::int64_t(job.n);
  out.n_cal_a = std::int64_t(pools[0].size());

  double plug = 0.0;
  std::int64_t fb = 0;
  for (const std::vector<std::uint8_t>& p : pools)
    plug += plug_in_ppi(full_counts(p), p_hat, job.n, config, &fb);
  out.raw_point = plug / double(pools.size());
  return out;
}

EstimateResult bootstrap_compare(const EvalDataset& ds,
                                 std::string_view model_a,
                                 std::string_view model_b,
                                 const EstimatorConfig& config,
                                 const BootstrapPlan& plan,
                                 BootstrapDetail* detail) {
  plan.validate();
  validate_config(config);
  ds.require_paired();
  const ModelArm& arm_a = ds.arm(model_a);
  const ModelArm& arm_b = ds.arm(model_b);
  const double pa_hat = mean_score(arm_a.test);
  const double pb_hat = mean_score(arm_b.test);
  check_indexable(arm_a.test.scores.size(), "test set");

  const std::uint64_t seed = derive_seed(plan.seed, synth::kSaltBootstrap);
  Job job;
  job.seed = seed;
  job.scores_a = arm_a.test.scores.data();
  job.scores_b = arm_b.test.scores.data();
  job.n = arm_a.test.scores.size();
  job.min_j = config.min_j;
  job.lambda_fixed = config.lambda.fixed;
  job.lambda_value = config.lambda.value;
  job.lambda_max = config.lambda_max;
  job.B = plan.iterations;
  job.max_attempts = plan.max_attempts;
  job.policy = plan.degenerate_policy;
  job.detail = detail;

  std::vector<std::vector<std::uint8_t>> pool_a, pool_b;
  EstimateResult meta;
  double raw_point = 0.0;
  bool low_j_a = false, low_j_b = false;
  CalibrationStats stats_a, stats_b;
  std::string low_j_name_a, low_j_name_b;

  switch (config.estimator) {
    case Estimator::naive: {
      job.kind = Kind::naive_cmp;
      raw_point = pa_hat - pb_hat;
      break;
    }
    case Estimator::rg: {
      if (config.design == CalibrationDesign::shared) {
        const CalibrationData& cal = shared_source(ds, config, model_a);
        check_indexable(cal.size(), "calibration set");
        pool_a.push_back(to_codes(cal));
        stats_a = stats_from_counts(full_counts(pool_a[0]));
        meta.n_cal_a = std::int64_t(cal.size());
        job.kind = Kind::rg_cmp_shared;
        job.cal_a = &pool_a;
        const PointEstimate ea =
            rg_estimate(pa_hat, stats_a, config.min_j, config.warn_j);
        const PointEstimate eb =
            rg_estimate(pb_hat, stats_a, config.min_j, config.warn_j);
        raw_point = compare(ea, eb);
        low_j_a = stats_a.j_hat < config.warn_j;
        low_j_name_a =
            config.incumbent.empty() ? std::string(model_a) : config.incumbent;
      } else {
        check_indexable(arm_a.calibration.size(), "calibration set");
        check_indexable(arm_b.calibration.size(), "calibration set");
        pool_a.push_back(to_codes(arm_a.calibration));
        pool_b.push_back(to_codes(arm_b.calibration));
        stats_a = stats_from_counts(full_counts(pool_a[0]));
        stats_b = stats_from_counts(full_counts(pool_b[0]));
        meta.n_cal_a = std::int64_t(arm_a.calibration.size());
        meta.n_cal_b = std::int64_t(arm_b.calibration.size());
        job.kind = Kind::rg_cmp_two;
        job.cal_a = &pool_a;
        job.cal_b = &pool_b;
        const PointEstimate ea =
            rg_estimate(pa_hat, stats_a, config.min_j, config.warn_j);
        const PointEstimate eb =
            rg_estimate(pb_hat, stats_b, config.min_j, config.warn_j);
        raw_point = compare(ea, eb);
        low_j_a = stats_a.j_hat < config.warn_j;
        low_j_b = stats_b.j_hat < config.warn_j;
        low_j_name_a = std::string(model_a);
        low_j_name_b = std::string(model_b);
      }
      break;
    }
    case Estimator::ppi: {
      const bool halve = config.budget == Budget::one_x;
      const std::vector<std::uint8_t> codes_a = to_codes(arm_a.calibration);
      const std::vector<std::uint8_t> codes_b = to_codes(arm_b.calibration);
      if (codes_a.empty() || codes_b.empty())
        throw EmptyCalibrationError(
            "both arms need calibration pairs for the rectifier comparison");
      check_indexable(codes_a.size(), "calibration set");
      check_indexable(codes_b.size(), "calibration set");
      if (halve) {
        const CalCounts ca = full_counts(codes_a);
        const CalCounts cb = full_counts(codes_b);
        if (ca.m0() < 4 || ca.m1() < 4 || cb.m0() < 4 || cb.m1() < 4)
          throw InsufficientCalibrationError(
              "pooled half-calibration needs at least 4 labeled items per "
              "class in both arms");
        job.pool_reps = plan.pooling_reps;
      }
      pool_a = make_pools(codes_a, job.pool_reps, halve, seed, kDomHalfA);
      pool_b = make_pools(codes_b, job.pool_reps, halve, seed, kDomHalfB);
      meta.n_cal_a = std::int64_t(pool_a[0].size());
      meta.n_cal_b = std::int64_t(pool_b[0].size());
      job.kind = Kind::ppi_cmp;
      job.cal_a = &pool_a;
      job.cal_b = &pool_b;
      std::int64_t fb = 0;
      double plug = 0.0;
      for (std::size_t t = 0; t < pool_a.size(); ++t)
        plug += plug_in_ppi(full_counts(pool_a[t]), pa_hat, job.n, config,
                            &fb) -
                plug_in_ppi(full_counts(pool_b[t]), pb_hat, job.n, config,
                            &fb);
      raw_point = plug / double(pool_a.size());
      break;
    }
  }

  const RunOutput ro = run_job(job, plan.workers);
  EstimateResult out = summarize(ro, plan, EstimandScale::difference, detail);
  out.n_test = std::int64_t(job.n);
  out.n_cal_a = meta.n_cal_a;
  out.n_cal_b = meta.n_cal_b;
  out.raw_point = raw_point;
  if (low_j_a) add_low_j_warning(out, stats_a, config.warn_j, low_j_name_a);
  if (low_j_b) add_low_j_warning(out, stats_b, config.warn_j, low_j_name_b);
  return out;
}

namespace {

struct CalSeries {
  std::vector<double> j, q0, q1;
};

// Calibration-only replicates for one or two arms; shared usable mask.
struct CalOnlyOutput {
  CalSeries a, b;
  std::vector<double> delta;
  Tally tally;
  std::int64_t usable = 0;
};

CalOnlyOutput run_cal_only(const std::vector<std::uint8_t>& codes_a,
                           const std::vector<std::uint8_t>* codes_b,
                           const BootstrapPlan& plan) {
  const std::uint64_t seed = derive_seed(plan.seed, synth::kSaltBootstrap);
  const std::int64_t B = plan.iterations;
  const bool two = codes_b != nullptr;

  struct Row {
    double ja, q0a, q1a, jb, q0b, q1b;
  };
  std::vector<Row> rows(static_cast<std::size_t>(B));
  std::vector<std::uint8_t> usable(std::size_t(B), 0);
  std::vector<Tally> tallies(std::size_t(resolve_workers(plan.workers, B)));
  const kernels::Ops& k = kernels::ops();
  const int attempts =
      plan.degenerate_policy == DegeneratePolicy::redraw ? plan.max_attempts
                                                         : 1;

  run_partitioned(B, plan.workers, [&](int w, std::int64_t lo,
                                       std::int64_t hi) {
    Scratch s;
    Tally& tally = tallies[std::size_t(w)];
    for (std::int64_t g = lo; g < hi; ++g) {
      bool ok = false;
      Row row{};
      for (int attempt = 0; attempt < attempts && !ok; ++attempt) {
        if (attempt > 0) ++tally.redraws;
        const CalCounts ca =
            resample_counts(k, codes_a, seed, kDomCalOnlyA,
                            std::uint64_t(g), std::uint32_t(attempt), 0, s);
        if (!ca.both_classes()) continue;
        if (two) {
          const CalCounts cb =
              resample_counts(k, *codes_b, seed, kDomCalOnlyB,
                              std::uint64_t(g), std::uint32_t(attempt), 0, s);
          if (!cb.both_classes()) continue;
          row.jb = cb.j();
          row.q0b = cb.q0();
          row.q1b = cb.q1();
        }
        row.ja = ca.j();
        row.q0a = ca.q0();
        row.q1a = ca.q1();
        ok = true;
      }
      if (ok) {
        rows[std::size_t(g)] = row;
        usable[std::size_t(g)] = 1;
      } else {
        ++tally.drops;
      }
    }
  });

  CalOnlyOutput out;
  for (const Tally& t : tallies) {
    out.tally.redraws += t.redraws;
    out.tally.drops += t.drops;
  }
  for (std::int64_t g = 0; g < B; ++g) {
    if (!usable[std::size_t(g)]) continue;
    const Row& row = rows[std::size_t(g)];
    out.a.j.push_back(row.ja);
    out.a.q0.push_back(row.q0a);
    out.a.q1.push_back(row.q1a);
    if (two) {
      out.b.j.push_back(row.jb);
      out.b.q0.push_back(row.q0b);
      out.b.q1.push_back(row.q1b);
      out.delta.push_back(row.ja - row.jb);
    }
    ++out.usable;
  }
  if (out.usable == 0)
    throw ResampleExhaustedError(
        "every calibration resample was degenerate (a label class kept "
        "vanishing)");
  return out;
}

EstimateResult summarize_series(std::vector<double> vals,
                                const BootstrapPlan& plan,
                                EstimandScale scale, double raw_point,
                                const Tally& tally) {
  std::sort(vals.begin(), vals.end());
  EstimateResult r;
  r.scale = scale;
  r.point = quantile_sorted(vals, 0.5);
  r.ci_lo = quantile_sorted(vals, plan.alpha / 2.0);
  r.ci_hi = quantile_sorted(vals, 1.0 - plan.alpha / 2.0);
  r.raw_point = raw_point;
  r.n_replicates = std::int64_t(vals.size());
  r.n_dropped = tally.drops;
  r.n_redrawn = tally.redraws;
  if (r.n_dropped > 0)
    r.warnings.push_back("degenerate_resamples_dropped: " +
                         std::to_string(r.n_dropped));
  return r;
}

}  // namespace

JudgeQualityResult bootstrap_judge_quality(const CalibrationData& cal,
                                           const BootstrapPlan& plan) {
  plan.validate();
  const std::vector<std::uint8_t> codes = to_codes(cal);
  check_indexable(codes.size(), "calibration set");
  const CalibrationStats stats = stats_from_counts(full_counts(codes));
  const CalOnlyOutput ro = run_cal_only(codes, nullptr, plan);
  JudgeQualityResult out;
  out.j = summarize_series(ro.a.j, plan, EstimandScale::difference,
                           stats.j_hat, ro.tally);
  out.q0 = summarize_series(ro.a.q0, plan, EstimandScale::unit_interval,
                            stats.q0_hat, ro.tally);
  out.q1 = summarize_series(ro.a.q1, plan, EstimandScale::unit_interval,
                            stats.q1_hat, ro.tally);
  const std::int64_t m = std::int64_t(cal.size());
  out.j.n_cal_a = m;
  out.q0.n_cal_a = m;
  out.q1.n_cal_a = m;
  return out;
}

DeltaJResult bootstrap_delta_j(const CalibrationData& cal_a,
                               const CalibrationData& cal_b,
                               const BootstrapPlan& plan) {
  plan.validate();
  const std::vector<std::uint8_t> codes_a = to_codes(cal_a);
  const std::vector<std::uint8_t> codes_b = to_codes(cal_b);
  check_indexable(codes_a.size(), "calibration set");
  check_indexable(codes_b.size(), "calibration set");
  const CalibrationStats stats_a = stats_from_counts(full_counts(codes_a));
  const CalibrationStats stats_b = stats_from_counts(full_counts(codes_b));

  const CalOnlyOutput ro = run_cal_only(codes_a, &codes_b, plan);
  DeltaJResult out;
  out.delta_j = summarize_series(ro.delta, plan, EstimandScale::difference,
                                 delta_j(stats_a, stats_b), ro.tally);
  out.a.j = summarize_series(ro.a.j, plan, EstimandScale::difference,
                             stats_a.j_hat, ro.tally);
  out.a.q0 = summarize_series(ro.a.q0, plan, EstimandScale::unit_interval,
                              stats_a.q0_hat, ro.tally);
  out.a.q1 = summarize_series(ro.a.q1, plan, EstimandScale::unit_interval,
                              stats_a.q1_hat, ro.tally);
  out.b.j = summarize_series(ro.b.j, plan, EstimandScale::difference,
                             stats_b.j_hat, ro.tally);
  out.b.q0 = summarize_series(ro.b.q0, plan, EstimandScale::unit_interval,
                              stats_b.q0_hat, ro.tally);
  out.b.q1 = summarize_series(ro.b.q1, plan, EstimandScale::unit_interval,
                              stats_b.q1_hat, ro.tally);
  out.delta_j.n_cal_a = std::int64_t(cal_a.size());
  out.delta_j.n_cal_b = std::int64_t(cal_b.size());
  out.excludes_zero = out.delta_j.ci_lo > 0.0 || out.delta_j.ci_hi < 0.0;
  return out;
}

}  // namespace jeval
