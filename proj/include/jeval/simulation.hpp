#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "jeval/dataset.hpp"
#include "jeval/measurement.hpp"
#include "jeval/resampling.hpp"

namespace jeval {

// Synthetic two-model comparison under the binary judge error model.
//
// Generator conventions:
//   theta_b       = theta_a + delta_theta
//   symmetric_rates=true derives q0 = q1 = (J + 1) / 2 per model from
//   j_a / j_b; otherwise rates_a / rates_b are used verbatim.
//   rho couples the latent correctness labels of the two models within a
//   test item (shared-uniform coupling; the correlation is exact when the
//   two prevalences coincide and approximate otherwise).
struct SimulationConfig {
  double theta_a = 0.7;
  double delta_theta = 0.05;  // theta_b - theta_a
  double j_a = 0.5;
  double j_b = 0.55;
  bool symmetric_rates = true;
  JudgeErrorRates rates_a;  // used when symmetric_rates is false
  JudgeErrorRates rates_b;
  double rho = 0.0;  // in [0, 1)
  std::int64_t n_test = 1000;
  std::int64_t n_cal = 200;  // per calibration set
  std::int64_t mc_reps = 1000;
  // pooling_reps applies to the halved-calibration cell only.
  BootstrapPlan plan{.iterations = 2000, .pooling_reps = 20};

  double theta_b() const { return theta_a + delta_theta; }
  JudgeErrorRates effective_rates_a() const;
  JudgeErrorRates effective_rates_b() const;

  // Throws InvalidRatesError / ValidationError when parameters leave their
  // admissible ranges.
  void validate() const;
};

// One synthetic dataset: paired test items plus one labeled calibration set
// per arm, judged with that arm's error rates. Arm ids are "A" and "B".
EvalDataset gen_comparison(const SimulationConfig& config, std::uint64_t seed);

// Estimator configurations evaluated by run_cell, in reporting order.
enum class SimEstimator : int {
  naive = 0,     // uncorrected judge mean difference
  rg_shared,     // error-rate inversion, both arms calibrated on arm A
  rg_2x,         // error-rate inversion, per-arm calibration
  ppi_1x,        // prediction-powered, halved calibration, pooled subsets
  ppi_2x,        // prediction-powered, full per-arm calibration
};

inline constexpr std::array<SimEstimator, 5> kSimEstimators{
    SimEstimator::naive, SimEstimator::rg_shared, SimEstimator::rg_2x,
    SimEstimator::ppi_1x, SimEstimator::ppi_2x};

const char* sim_estimator_name(SimEstimator e);

struct EstimatorCellSummary {
  double mean_bias = 0.0;      // mean(estimate - true_delta), usable reps
  double coverage = 0.0;       // fraction of mc_reps whose CI covers
  double mean_ci_width = 0.0;  // mean(ci_hi - ci_lo), usable reps
  std::int64_t failures = 0;   // degenerate replications (skipped)
  std::int64_t reps_used = 0;  // failures + reps_used == mc_reps
};

struct SimulationSummary {
  double axis_value = 0.0;  // set by sweep(); echo of the grid point
  double theta_a = 0.0;
  double theta_b = 0.0;
  double true_delta = 0.0;  // theta_a - theta_b, the estimand of compare()
  double j_a = 0.0;
  double j_b = 0.0;
  double delta_j = 0.0;  // j_a - j_b
  std::array<EstimatorCellSummary, kSimEstimators.size()> cells{};

  const EstimatorCellSummary& cell(SimEstimator e) const {
    return cells[static_cast<std::size_t>(e)];
  }
};

// Monte Carlo over config.mc_reps independent datasets (mc_reps >= 100).
// Each replication runs every estimator in kSimEstimators on the same
// dataset; replications where an estimator degenerates (judge accuracy at
// chance in a drawn calibration set) count toward that estimator's failures
// and are excluded from its averages. Failed replications have no interval,
// so they count against coverage.
SimulationSummary run_cell(const SimulationConfig& config, std::uint64_t seed);

enum class SweepAxis : int {
  j_a = 0,      // vary arm A judge informativeness, keep j_b - j_a fixed
  delta_j_sim,  // vary j_b - j_a, keep j_a fixed
};

const char* sweep_axis_name(SweepAxis axis);

// One run_cell per grid value. Cells are seeded independently of grid order,
// so inserting a grid point does not perturb the others. A grid value whose
// implied rates leave [0,1] yields an all-failure row instead of aborting
// the sweep.
std::vector<SimulationSummary> sweep(SweepAxis axis,
                                     std::span<const double> grid,
                                     const SimulationConfig& base,
                                     std::uint64_t seed);

// Long-format CSV, one row per (grid value, estimator):
//   axis_value,estimator,bias,coverage,ci_width,failures
// Byte-deterministic for a given sweep result.
void write_sweep_csv(std::ostream& os, std::span<const SimulationSummary> rows);
std::string sweep_csv(std::span<const SimulationSummary> rows);

// Sweep definition as parsed from a JSON config file. Recognized keys:
//   axis ("j_a" | "delta_j_sim"), grid (array of numbers), and the
//   SimulationConfig fields theta_a, delta_theta, j_a, j_b, rho, n_test,
//   n_cal, mc_reps, boot, alpha, pooling_reps, workers, plus optional
//   rates_a / rates_b objects {"q0":..., "q1":...} which switch the
//   generator to asymmetric rates.
struct SweepSpec {
  SweepAxis axis = SweepAxis::j_a;
  std::vector<double> grid;
  SimulationConfig config;
};

SweepSpec parse_sweep_spec(std::istream& is);
SweepSpec load_sweep_spec(const std::string& path);

}  // namespace jeval
