#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jeval/dataset.hpp"
#include "jeval/estimators.hpp"
#include "jeval/measurement.hpp"
#include "jeval/resampling.hpp"

namespace jeval {

enum class Split { cal, test };

// One judged item for one model, line-delimited JSON on disk:
//   {"item_id": "...", "model_id": "...", "judge_id": "...",
//    "split": "cal"|"test", "z_true": 0|1, "z_judge_runs": [0,1,...]}
// z_true is required on cal records and optional elsewhere; z_judge_runs is
// nonempty. (item_id, model_id, judge_id) is unique within a file.
struct JudgeRecord {
  std::string item_id;
  std::string model_id;
  std::string judge_id;
  Split split = Split::test;
  std::optional<std::uint8_t> z_true;
  std::vector<std::uint8_t> z_judge_runs;
};

// Errors carry 1-based line numbers: ParseError for malformed JSON,
// SchemaError listing missing or ill-typed fields, DuplicateRecordError on a
// repeated key.
std::vector<JudgeRecord> parse_records(std::istream& is);
std::vector<JudgeRecord> load_records(const std::string& path);

// Final answer letter (A-J, upper-cased) from a free-text response. The last
// match of the primary "the answer is X" pattern wins; only when that
// pattern never matches is the last "Answer: X" match used. Throws
// FormatError when neither matches.
char extract_answer(const std::string& response_text);

// Assembles an EvalDataset for the given estimation design:
//   - test records collapse k judge runs into per-item mean scores;
//   - calibration labels use the first judge run, or the per-item majority
//     (ties round up) when majority_vote_cal is set;
//   - shared design keeps only the incumbent's calibration pairs;
//   - ppi + one_x keeps a seed-deterministic half (floor(m/2)) of each
//     model's calibration set, record order preserved.
// Records must share one judge_id and cover one or two models. Throws
// InsufficientCalibrationError naming the model (and class) whose labels the
// design needs but the records do not provide.
EvalDataset build_dataset(std::span<const JudgeRecord> records,
                          const EstimatorConfig& design,
                          std::uint64_t seed = 0,
                          bool majority_vote_cal = false);

struct DiagnosticThresholds {
  double low_j = 0.2;     // warn when a model's plug-in J falls below
  double near_tie = 0.05; // warn when a comparison CI sits inside +/- this
};

struct ModelDiagnostics {
  std::string model_id;
  CalibrationStats stats;      // plug-in rates on the full calibration set
  JudgeQualityResult quality;  // J / q0 / q1 with bootstrap CIs
};

struct PairDiagnostics {
  std::string model_a;
  std::string model_b;
  DeltaJResult delta_j;
};

struct DiagnosticWarning {
  std::string kind;     // "low_J" | "large_delta_J" | "near_tie"
  std::string subject;  // model id or "A vs B"
  double threshold = 0.0;
  double value = 0.0;
  std::string message;  // cites the threshold and the triggering value
};

struct DiagnosticsReport {
  std::string judge_id;
  DiagnosticThresholds thresholds;
  std::vector<ModelDiagnostics> models;
  std::vector<PairDiagnostics> pairs;
  bool has_comparison = false;  // set when both arms carry test scores
  std::string comparison_a;
  std::string comparison_b;
  EstimateResult comparison;  // bias-corrected per-model-calibration design
  std::vector<DiagnosticWarning> warnings;
};

// Judge-quality workup over every arm that has calibration pairs.
// Diagnostics always use each model's full calibration set, whatever labeling
// design the estimation step runs under. With two calibrated arms the J
// difference is bootstrapped; with two scored arms an error-corrected
// comparison is run so the near-tie check has an interval to inspect.
DiagnosticsReport diagnose(const EvalDataset& ds, const BootstrapPlan& plan,
                           const DiagnosticThresholds& thresholds = {});

// Same workup, but the near-tie check inspects the caller's already-computed
// comparison interval instead of running one internally.
DiagnosticsReport diagnose(const EvalDataset& ds, const BootstrapPlan& plan,
                           const DiagnosticThresholds& thresholds,
                           const EstimateResult& comparison,
                           std::string_view comparison_a,
                           std::string_view comparison_b);

// Optional JSON thresholds file: {"low_j": 0.2, "near_tie": 0.05}.
DiagnosticThresholds load_thresholds(const std::string& path);

}  // namespace jeval
