// Command-line front end: diagnose | estimate | compare | simulate |
// extract-answer. Exit codes: 0 success, 2 validation error, 3 degenerate
// judge (|J| at the floor, correction unidentifiable).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jeval/errors.hpp"
#include "jeval/evalio.hpp"
#include "jeval/kernels/kernels.hpp"
#include "jeval/report.hpp"
#include "jeval/resampling.hpp"
#include "jeval/simulation.hpp"

namespace {

struct CommonOpts {
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::int64_t boot = 10000;
  int workers = 0;
  std::string out;
};

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--seed", c.seed, "RNG seed (same seed, same output)")
      ->capture_default_str();
  sub->add_option("--alpha", c.alpha, "CI miss probability")
      ->capture_default_str();
  sub->add_option("--boot", c.boot, "bootstrap replicates")
      ->capture_default_str();
  sub->add_option("--workers", c.workers,
                  "resampling worker threads (0 = auto)")
      ->capture_default_str();
  sub->add_option("--out", c.out, "write output files to this path");
}

struct DesignOpts {
  std::string estimator = "rg";
  std::string design = "model_specific";
  std::string budget = "2x";
  std::string incumbent;
  double lambda = 0.0;
  bool lambda_set = false;
  bool majority_cal = false;
};

void add_design(CLI::App* sub, DesignOpts& d) {
  sub->add_option("--estimator", d.estimator, "naive | rg | ppi")
      ->check(CLI::IsMember({"naive", "rg", "ppi"}))
      ->capture_default_str();
  sub->add_option("--design", d.design, "model_specific | shared")
      ->check(CLI::IsMember({"model_specific", "shared"}))
      ->capture_default_str();
  sub->add_option("--budget", d.budget, "labeling budget: 1x | 2x")
      ->check(CLI::IsMember({"1x", "2x"}))
      ->capture_default_str();
  sub->add_option("--incumbent", d.incumbent,
                  "model whose calibration a shared design reuses");
  sub->add_option("--lambda", d.lambda,
                  "fix the rectifier weight instead of tuning it")
      ->each([&d](const std::string&) { d.lambda_set = true; });
  sub->add_flag("--majority-cal", d.majority_cal,
                "calibration labels by per-item majority vote over runs "
                "(default: first run)");
}

jeval::EstimatorConfig to_config(const DesignOpts& d) {
  jeval::EstimatorConfig c;
  c.estimator = d.estimator == "naive"  ? jeval::Estimator::naive
                : d.estimator == "ppi" ? jeval::Estimator::ppi
                                       : jeval::Estimator::rg;
  c.design = d.design == "shared" ? jeval::CalibrationDesign::shared
                                  : jeval::CalibrationDesign::model_specific;
  c.budget = d.budget == "1x" ? jeval::Budget::one_x : jeval::Budget::two_x;
  c.incumbent = d.incumbent;
  if (d.lambda_set) c.lambda = jeval::LambdaPolicy::fixed_at(d.lambda);
  return c;
}

jeval::BootstrapPlan to_plan(const CommonOpts& c) {
  jeval::BootstrapPlan p;
  p.iterations = c.boot;
  p.alpha = c.alpha;
  p.seed = c.seed;
  p.workers = c.workers;
  return p;
}

std::vector<jeval::JudgeRecord> load_filtered(const std::string& path,
                                              const std::string& judge) {
  std::vector<jeval::JudgeRecord> records = jeval::load_records(path);
  if (!judge.empty()) {
    std::erase_if(records, [&judge](const jeval::JudgeRecord& r) {
      return r.judge_id != judge;
    });
    if (records.empty())
      throw jeval::ValidationError("no records for judge \"" + judge + "\"");
  }
  return records;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw jeval::ValidationError("cannot write " + path);
  os << content;
}

// Text to stdout, or text + companion files under --out.
void emit_report(const CommonOpts& common, const std::string& companion) {
  const std::string text = jeval::render_text(companion);
  if (common.out.empty()) {
    std::cout << text;
  } else {
    write_file(common.out, text);
    write_file(common.out + ".json", companion);
  }
}

// Full-calibration view of one or two arms for diagnostics, independent of
// the estimation design's label budget.
jeval::EvalDataset neutral_dataset(std::span<const jeval::JudgeRecord> records,
                                   std::uint64_t seed) {
  jeval::EstimatorConfig neutral;
  neutral.estimator = jeval::Estimator::naive;
  return jeval::build_dataset(records, neutral, seed);
}

jeval::ReportMeta make_meta(const CommonOpts& c) {
  jeval::ReportMeta m;
  m.alpha = c.alpha;
  m.boot = c.boot;
  m.seed = c.seed;
  return m;
}

// One_x PPI halves the labeled set at ingestion; the resampler must then
// treat what remains as the full set or it would halve a second time.
jeval::EstimatorConfig runtime_config(const jeval::EstimatorConfig& design) {
  jeval::EstimatorConfig c = design;
  if (c.estimator == jeval::Estimator::ppi && c.budget == jeval::Budget::one_x)
    c.budget = jeval::Budget::two_x;
  return c;
}

int run_diagnose(const std::string& in, const std::string& judge,
                 const CommonOpts& common,
                 const jeval::DiagnosticThresholds& th) {
  const std::vector<jeval::JudgeRecord> records = load_filtered(in, judge);
  const jeval::EvalDataset ds = neutral_dataset(records, common.seed);
  const jeval::DiagnosticsReport rep =
      jeval::diagnose(ds, to_plan(common), th);
  emit_report(common, jeval::report_json(make_meta(common), &rep, {}, nullptr));
  return 0;
}

int run_estimate(const std::string& in, const std::string& judge,
                 const std::string& model, const CommonOpts& common,
                 const DesignOpts& dopts,
                 const jeval::DiagnosticThresholds& th) {
  const std::vector<jeval::JudgeRecord> records = load_filtered(in, judge);
  const jeval::EstimatorConfig design = to_config(dopts);
  const jeval::EvalDataset ds =
      jeval::build_dataset(records, design, common.seed, dopts.majority_cal);
  const jeval::BootstrapPlan plan = to_plan(common);

  jeval::ModelEstimateEntry entry;
  entry.model_id = model;
  entry.config = design;
  entry.result = jeval::bootstrap_estimate(ds, model, runtime_config(design),
                                           plan);

  // Single-arm judge diagnostics from the full calibration set, when one
  // exists for this model.
  jeval::EvalDataset full = neutral_dataset(records, common.seed);
  jeval::DiagnosticsReport rep;
  bool have_diag = false;
  if (full.has_arm(model) && full.arm(model).calibration.size() > 0) {
    jeval::EvalDataset one;
    one.judge_id = full.judge_id;
    one.arms.push_back(full.arm(model));
    rep = jeval::diagnose(one, plan, th);
    have_diag = true;
  }

  emit_report(common,
              jeval::report_json(make_meta(common),
                                 have_diag ? &rep : nullptr, {&entry, 1},
                                 nullptr));
  return 0;
}

int run_compare(const std::string& in, const std::string& judge,
                const std::string& model_a, const std::string& model_b,
                const CommonOpts& common, const DesignOpts& dopts,
                const jeval::DiagnosticThresholds& th) {
  const std::vector<jeval::JudgeRecord> records = load_filtered(in, judge);
  const jeval::EstimatorConfig design = to_config(dopts);
  const jeval::EvalDataset ds =
      jeval::build_dataset(records, design, common.seed, dopts.majority_cal);
  const jeval::BootstrapPlan plan = to_plan(common);

  jeval::ComparisonEntry entry;
  entry.model_a = model_a;
  entry.model_b = model_b;
  entry.config = design;
  entry.result = jeval::bootstrap_compare(ds, model_a, model_b,
                                          runtime_config(design), plan);

  const jeval::EvalDataset full = neutral_dataset(records, common.seed);
  jeval::DiagnosticsReport rep =
      jeval::diagnose(full, plan, th, entry.result, model_a, model_b);

  emit_report(common, jeval::report_json(make_meta(common), &rep, {}, &entry));
  return 0;
}

int run_simulate(const std::string& config_path, const std::string& axis,
                 std::vector<double>& grid, const CommonOpts& common,
                 CLI::App* sub, jeval::SimulationConfig& overrides) {
  jeval::SweepSpec spec;
  if (!config_path.empty()) {
    spec = jeval::load_sweep_spec(config_path);
  } else if (grid.empty()) {
    throw jeval::ValidationError("simulate needs --config or --grid");
  }
  if (sub->count("--axis") > 0) {
    spec.axis = axis == "j_a" ? jeval::SweepAxis::j_a
                              : jeval::SweepAxis::delta_j_sim;
  }
  if (!grid.empty()) spec.grid = grid;

  jeval::SimulationConfig& c = spec.config;
  if (sub->count("--theta-a")) c.theta_a = overrides.theta_a;
  if (sub->count("--delta-theta")) c.delta_theta = overrides.delta_theta;
  if (sub->count("--j-a")) c.j_a = overrides.j_a;
  if (sub->count("--j-b")) c.j_b = overrides.j_b;
  if (sub->count("--rho")) c.rho = overrides.rho;
  if (sub->count("--n-test")) c.n_test = overrides.n_test;
  if (sub->count("--n-cal")) c.n_cal = overrides.n_cal;
  if (sub->count("--mc-reps")) c.mc_reps = overrides.mc_reps;
  if (sub->count("--pooling-reps"))
    c.plan.pooling_reps = overrides.plan.pooling_reps;
  if (sub->count("--boot")) c.plan.iterations = common.boot;
  if (sub->count("--alpha")) c.plan.alpha = common.alpha;
  if (sub->count("--workers")) c.plan.workers = common.workers;

  const std::vector<jeval::SimulationSummary> rows =
      jeval::sweep(spec.axis, spec.grid, c, common.seed);
  const std::string csv = jeval::sweep_csv(rows);
  if (common.out.empty())
    std::cout << csv;
  else
    write_file(common.out, csv);
  return 0;
}

int run_extract(const std::string& text, const std::string& in,
                const CommonOpts& common) {
  std::string response = text;
  if (!in.empty()) {
    std::ifstream is(in, std::ios::binary);
    if (!is) throw jeval::ValidationError("cannot open " + in);
    std::ostringstream ss;
    ss << is.rdbuf();
    response = ss.str();
  }
  const char letter = jeval::extract_answer(response);
  if (common.out.empty())
    std::cout << letter << "\n";
  else
    write_file(common.out, std::string(1, letter) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"judge-based evaluation with judge-error correction"};
  app.require_subcommand(1);

  CommonOpts common;
  DesignOpts dopts;
  jeval::DiagnosticThresholds th;
  std::string in, judge, model, model_a, model_b;
  std::string thresholds_path, config_path, axis = "j_a", text;
  std::string force_isa;
  std::vector<double> grid;
  jeval::SimulationConfig sim_overrides;

  const auto add_thresholds = [&](CLI::App* sub) {
    sub->add_option("--thresholds", thresholds_path,
                    "JSON file {\"low_j\":..., \"near_tie\":...}");
    sub->add_option("--low-j", th.low_j, "low-J warning threshold")
        ->capture_default_str();
    sub->add_option("--near-tie", th.near_tie, "near-tie warning half-width")
        ->capture_default_str();
  };

  CLI::App* diag = app.add_subcommand(
      "diagnose", "judge quality workup: q0/q1/J per model, delta J, warnings");
  diag->add_option("--in", in, "line-delimited record file")->required();
  diag->add_option("--judge", judge, "keep records for this judge only");
  add_thresholds(diag);
  add_common(diag, common);

  CLI::App* est = app.add_subcommand(
      "estimate", "accuracy of one model from judge scores");
  est->add_option("--in", in, "line-delimited record file")->required();
  est->add_option("--judge", judge, "keep records for this judge only");
  est->add_option("--model", model, "model to estimate")->required();
  add_design(est, dopts);
  add_thresholds(est);
  add_common(est, common);

  CLI::App* cmp = app.add_subcommand(
      "compare", "accuracy difference of two models (paired test items)");
  cmp->add_option("--in", in, "line-delimited record file")->required();
  cmp->add_option("--judge", judge, "keep records for this judge only");
  cmp->add_option("--model-a", model_a, "first model")->required();
  cmp->add_option("--model-b", model_b, "second model")->required();
  add_design(cmp, dopts);
  add_thresholds(cmp);
  add_common(cmp, common);

  CLI::App* sim = app.add_subcommand(
      "simulate", "Monte Carlo sweeps of estimator bias and coverage");
  sim->add_option("--config", config_path, "JSON sweep definition");
  sim->add_option("--axis", axis, "j_a | delta_j_sim")
      ->check(CLI::IsMember({"j_a", "delta_j_sim"}))
      ->capture_default_str();
  sim->add_option("--grid", grid, "grid values for the axis");
  sim->add_option("--theta-a", sim_overrides.theta_a, "arm A true accuracy");
  sim->add_option("--delta-theta", sim_overrides.delta_theta,
                  "theta_b - theta_a");
  sim->add_option("--j-a", sim_overrides.j_a, "arm A judge J");
  sim->add_option("--j-b", sim_overrides.j_b, "arm B judge J");
  sim->add_option("--rho", sim_overrides.rho, "within-item label correlation");
  sim->add_option("--n-test", sim_overrides.n_test, "test items per dataset");
  sim->add_option("--n-cal", sim_overrides.n_cal,
                  "calibration items per model");
  sim->add_option("--mc-reps", sim_overrides.mc_reps,
                  "Monte Carlo replications per cell");
  sim->add_option("--pooling-reps", sim_overrides.plan.pooling_reps,
                  "half-calibration subsets pooled by the 1x cell");
  sim->add_option("--force-isa", force_isa,
                  "pin the kernel instruction set (scalar | avx2)")
      ->check(CLI::IsMember({"scalar", "avx2"}));
  add_common(sim, common);

  CLI::App* ext = app.add_subcommand(
      "extract-answer", "final answer letter (A-J) from a free-text response");
  ext->add_option("text", text, "response text");
  ext->add_option("--in", in, "read the response from a file");
  add_common(ext, common);

  try {
    app.parse(argc, argv);

    if (!force_isa.empty())
      jeval::kernels::force_isa(force_isa == "avx2"
                                    ? jeval::kernels::Isa::avx2
                                    : jeval::kernels::Isa::scalar);
    if (diag->parsed() || est->parsed() || cmp->parsed()) {
      if (!thresholds_path.empty()) {
        const jeval::DiagnosticThresholds file =
            jeval::load_thresholds(thresholds_path);
        CLI::App* owner = diag->parsed() ? diag : est->parsed() ? est : cmp;
        if (owner->count("--low-j") == 0) th.low_j = file.low_j;
        if (owner->count("--near-tie") == 0) th.near_tie = file.near_tie;
      }
    }

    if (diag->parsed()) return run_diagnose(in, judge, common, th);
    if (est->parsed()) return run_estimate(in, judge, model, common, dopts, th);
    if (cmp->parsed())
      return run_compare(in, judge, model_a, model_b, common, dopts, th);
    if (sim->parsed())
      return run_simulate(config_path, axis, grid, common, sim, sim_overrides);
    if (ext->parsed()) {
      if (text.empty() == in.empty())
        throw jeval::ValidationError(
            "extract-answer needs exactly one of TEXT or --in");
      return run_extract(text, in, common);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const jeval::DegenerateJError& e) {
    std::cerr << "error (degenerate judge): " << e.what() << "\n";
    return 3;
  } catch (const jeval::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
