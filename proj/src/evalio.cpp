#include "jeval/evalio.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <numeric>
#include <regex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "jeval/errors.hpp"
#include "jeval/kernels/philox.hpp"

namespace jeval {

namespace {

using nlohmann::json;

std::string at_line(std::size_t lineno) {
  return "line " + std::to_string(lineno) + ": ";
}

std::uint8_t binary_value(const json& v, const char* key, std::size_t lineno) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number_integer()) {
    const std::int64_t x = v.get<std::int64_t>();
    if (x == 0 || x == 1) return std::uint8_t(x);
  }
  throw SchemaError(at_line(lineno) + std::string(key) + " must be 0 or 1");
}

std::string string_value(const json& v, const char* key, std::size_t lineno) {
  if (!v.is_string() || v.get<std::string>().empty())
    throw SchemaError(at_line(lineno) + std::string(key) +
                      " must be a nonempty string");
  return v.get<std::string>();
}

}  // namespace

std::vector<JudgeRecord> parse_records(std::istream& is) {
  std::vector<JudgeRecord> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(at_line(lineno) + e.what());
    }
    if (!j.is_object())
      throw SchemaError(at_line(lineno) + "record must be a JSON object");

    static const char* const required[] = {"item_id", "model_id", "judge_id",
                                           "split", "z_judge_runs"};
    std::string missing;
    for (const char* k : required)
      if (!j.contains(k)) missing += missing.empty() ? k : (std::string(", ") + k);

    JudgeRecord r;
    if (missing.empty() && j["split"].is_string() &&
        j["split"].get<std::string>() == "cal" && !j.contains("z_true"))
      missing = "z_true";  // required on cal records
    if (!missing.empty())
      throw SchemaError(at_line(lineno) + "missing fields: " + missing);

    r.item_id = string_value(j["item_id"], "item_id", lineno);
    r.model_id = string_value(j["model_id"], "model_id", lineno);
    r.judge_id = string_value(j["judge_id"], "judge_id", lineno);

    const std::string split = string_value(j["split"], "split", lineno);
    if (split == "cal")
      r.split = Split::cal;
    else if (split == "test")
      r.split = Split::test;
    else
      throw SchemaError(at_line(lineno) + "split must be \"cal\" or \"test\"");

    if (j.contains("z_true"))
      r.z_true = binary_value(j["z_true"], "z_true", lineno);

    const json& runs = j["z_judge_runs"];
    if (!runs.is_array() || runs.empty())
      throw SchemaError(at_line(lineno) +
                        "z_judge_runs must be a nonempty array");
    for (const json& v : runs)
      r.z_judge_runs.push_back(binary_value(v, "z_judge_runs", lineno));

    const std::string key =
        r.item_id + '\x1f' + r.model_id + '\x1f' + r.judge_id;
    if (!seen.insert(key).second)
      throw DuplicateRecordError(at_line(lineno) + "duplicate record for (" +
                                 r.item_id + ", " + r.model_id + ", " +
                                 r.judge_id + ")");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<JudgeRecord> load_records(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open records file: " + path);
  return parse_records(is);
}

char extract_answer(const std::string& response_text) {
  // Primary phrasing wins outright; the fallback is consulted only when the
  // primary never matches anywhere in the text. Within a pattern, the last
  // match decides.
  static const std::regex primary(
      R"((?:T|t)he [a-z ]*answer is[a-z ]*[:\s]*\(?([A-Ja-j])\)?)");
  static const std::regex fallback(R"((?:A|a)nswer:\s+\(?([A-Ja-j])\)?)");

  for (const std::regex* re : {&primary, &fallback}) {
    char letter = 0;
    for (std::sregex_iterator it(response_text.begin(), response_text.end(),
                                 *re),
         end;
         it != end; ++it)
      letter = (*it)[1].str()[0];
    if (letter != 0) return char(std::toupper(static_cast<unsigned char>(letter)));
  }
  throw FormatError("no answer statement found in response");
}

namespace {

constexpr std::uint64_t kSaltIngestHalf = 0x696e67642d68ull;

std::uint8_t cal_label(const JudgeRecord& r, bool majority_vote) {
  if (!majority_vote) return r.z_judge_runs.front();
  const std::size_t ones = std::size_t(
      std::count(r.z_judge_runs.begin(), r.z_judge_runs.end(), 1));
  return 2 * ones >= r.z_judge_runs.size() ? 1 : 0;  // ties round up
}

// Seed-deterministic choice of floor(m/2) calibration rows, order preserved.
void halve_calibration(CalibrationData& cal, std::uint64_t seed,
                       std::uint32_t arm_index) {
  const std::size_t m = cal.size();
  if (m < 2)
    throw InsufficientCalibrationError(
        "one_x design needs at least 2 calibration records for model " +
        cal.model_id);
  const std::size_t h = m / 2;
  std::vector<std::uint32_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0u);
  PhiloxStream rng(derive_seed(seed, kSaltIngestHalf),
                   stream_id(0, arm_index));
  for (std::size_t i = 0; i < h; ++i)
    std::swap(idx[i], idx[i + rng.below(std::uint32_t(m - i))]);
  idx.resize(h);
  std::sort(idx.begin(), idx.end());

  CalibrationData kept;
  kept.model_id = cal.model_id;
  for (const std::uint32_t i : idx) {
    if (!cal.item_ids.empty()) kept.item_ids.push_back(cal.item_ids[i]);
    kept.z_true.push_back(cal.z_true[i]);
    kept.z_judge.push_back(cal.z_judge[i]);
  }
  cal = std::move(kept);
}

void require_classes(const CalibrationData& cal) {
  if (cal.size() == 0)
    throw InsufficientCalibrationError("model " + cal.model_id +
                                       " has no calibration records");
  const std::size_t ones = std::size_t(
      std::count(cal.z_true.begin(), cal.z_true.end(), 1));
  if (ones == cal.size())
    throw InsufficientCalibrationError(
        "model " + cal.model_id + " calibration has no z_true=0 items");
  if (ones == 0)
    throw InsufficientCalibrationError(
        "model " + cal.model_id + " calibration has no z_true=1 items");
}

}  // namespace

EvalDataset build_dataset(std::span<const JudgeRecord> records,
                          const EstimatorConfig& design, std::uint64_t seed,
                          bool majority_vote_cal) {
  if (records.empty()) throw ValidationError("no records to build from");
  for (const JudgeRecord& r : records)
    if (r.judge_id != records.front().judge_id)
      throw ValidationError("records mix judge ids \"" +
                            records.front().judge_id + "\" and \"" +
                            r.judge_id + "\"; filter to one judge first");

  EvalDataset ds;
  ds.judge_id = records.front().judge_id;
  std::unordered_map<std::string, std::size_t> arm_ix;
  std::vector<std::vector<ItemRuns>> test_items;

  for (const JudgeRecord& r : records) {
    auto [it, inserted] = arm_ix.try_emplace(r.model_id, ds.arms.size());
    if (inserted) {
      ds.arms.emplace_back();
      ds.arms.back().model_id = r.model_id;
      ds.arms.back().calibration.model_id = r.model_id;
      ds.arms.back().test.model_id = r.model_id;
      test_items.emplace_back();
    }
    const std::size_t a = it->second;
    if (r.z_judge_runs.empty())
      throw EmptyRunsError("item " + r.item_id + " for model " + r.model_id +
                           " has no judge runs");
    if (r.split == Split::test) {
      test_items[a].push_back({r.item_id, r.z_judge_runs});
    } else {
      if (!r.z_true)
        throw SchemaError("cal record for item " + r.item_id +
                          " is missing z_true");
      CalibrationData& cal = ds.arms[a].calibration;
      cal.item_ids.push_back(r.item_id);
      cal.z_true.push_back(*r.z_true);
      cal.z_judge.push_back(cal_label(r, majority_vote_cal));
    }
  }
  if (ds.arms.size() > 2)
    throw ValidationError("expected one or two models, got " +
                          std::to_string(ds.arms.size()));

  for (std::size_t a = 0; a < ds.arms.size(); ++a)
    ds.arms[a].test = collapse_runs(test_items[a], ds.arms[a].model_id);

  // Comparisons resample one test index vector for both arms, so two scored
  // arms must cover the same items in the same order. Calibration-only arms
  // are exempt.
  if (ds.arms.size() == 2 && !ds.arms[0].test.scores.empty() &&
      !ds.arms[1].test.scores.empty())
    ds.require_paired();

  if (design.estimator != Estimator::rg &&
      design.design == CalibrationDesign::shared)
    throw ValidationError(
        "shared calibration applies to the rate-inversion estimator only");

  if (design.design == CalibrationDesign::shared) {
    if (design.incumbent.empty())
      throw ValidationError("shared design needs an incumbent model");
    if (!ds.has_arm(design.incumbent))
      throw ValidationError("incumbent \"" + design.incumbent +
                            "\" has no records");
    if (ds.arm(design.incumbent).calibration.size() == 0)
      throw InsufficientCalibrationError(
          "shared design: incumbent " + design.incumbent +
          " has no calibration records");
    for (ModelArm& arm : ds.arms)
      if (arm.model_id != design.incumbent) {
        arm.calibration = CalibrationData{};
        arm.calibration.model_id = arm.model_id;
      }
  }

  if (design.estimator == Estimator::ppi && design.budget == Budget::one_x)
    for (std::size_t a = 0; a < ds.arms.size(); ++a)
      halve_calibration(ds.arms[a].calibration, seed, std::uint32_t(a));

  if (design.estimator == Estimator::rg) {
    if (design.design == CalibrationDesign::shared)
      require_classes(ds.arm(design.incumbent).calibration);
    else
      for (const ModelArm& arm : ds.arms) require_classes(arm.calibration);
  }
  if (design.estimator == Estimator::ppi)
    for (const ModelArm& arm : ds.arms)
      if (arm.calibration.size() == 0)
        throw InsufficientCalibrationError(
            "model " + arm.model_id +
            " has no calibration records for the rectifier");

  for (const ModelArm& arm : ds.arms) arm.calibration.validate();
  return ds;
}

namespace {

constexpr std::uint64_t kSaltDiagQuality = 0x646961672d71ull;
constexpr std::uint64_t kSaltDiagDelta = 0x646961672d64ull;
constexpr std::uint64_t kSaltDiagCompare = 0x646961672d63ull;

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

namespace {

void near_tie_check(DiagnosticsReport& rep, const EstimateResult& cmp,
                    const std::string& subject, double threshold) {
  const double lo = cmp.ci_lo, hi = cmp.ci_hi;
  if (lo >= -threshold && hi <= threshold)
    rep.warnings.push_back(
        {"near_tie", subject, threshold, std::max(std::abs(lo), std::abs(hi)),
         "comparison CI [" + fmt6(lo) + ", " + fmt6(hi) +
             "] lies entirely within +/-" + fmt6(threshold) +
             "; residual judge bias could flip the sign of this difference"});
}

DiagnosticsReport diagnose_impl(const EvalDataset& ds,
                                const BootstrapPlan& plan,
                                const DiagnosticThresholds& thresholds,
                                const EstimateResult* comparison,
                                std::string_view comparison_a,
                                std::string_view comparison_b) {
  plan.validate();
  if (ds.arms.empty()) throw ValidationError("dataset has no model arms");

  DiagnosticsReport rep;
  rep.judge_id = ds.judge_id;
  rep.thresholds = thresholds;

  for (std::size_t a = 0; a < ds.arms.size(); ++a) {
    const ModelArm& arm = ds.arms[a];
    if (arm.calibration.size() == 0)
      throw EmptyCalibrationError("model " + arm.model_id +
                                  " has no calibration pairs to diagnose");
    ModelDiagnostics md;
    md.model_id = arm.model_id;
    md.stats =
        estimate_calibration(arm.calibration.z_true, arm.calibration.z_judge);
    BootstrapPlan p = plan;
    p.seed = derive_seed(plan.seed, kSaltDiagQuality, a);
    md.quality = bootstrap_judge_quality(arm.calibration, p);
    if (md.stats.j_hat < thresholds.low_j)
      rep.warnings.push_back(
          {"low_J", arm.model_id, thresholds.low_j, md.stats.j_hat,
           "judge J for model " + arm.model_id + " is " +
               fmt6(md.stats.j_hat) + ", below " + fmt6(thresholds.low_j) +
               "; error-rate corrections divide by J and are unstable here"});
    rep.models.push_back(std::move(md));
  }

  if (ds.arms.size() == 2) {
    const ModelArm& a = ds.arms[0];
    const ModelArm& b = ds.arms[1];

    BootstrapPlan pd = plan;
    pd.seed = derive_seed(plan.seed, kSaltDiagDelta);
    PairDiagnostics pair;
    pair.model_a = a.model_id;
    pair.model_b = b.model_id;
    pair.delta_j = bootstrap_delta_j(a.calibration, b.calibration, pd);
    if (pair.delta_j.excludes_zero) {
      const EstimateResult& dj = pair.delta_j.delta_j;
      rep.warnings.push_back(
          {"large_delta_J", a.model_id + " vs " + b.model_id, 0.0,
           dj.raw_point,
           "delta J is " + fmt6(dj.raw_point) + " with CI [" +
               fmt6(dj.ci_lo) + ", " + fmt6(dj.ci_hi) +
               "] excluding zero; judge quality shifts across models and "
               "shared calibration would be biased"});
    }
    rep.pairs.push_back(std::move(pair));
  }

  if (comparison != nullptr) {
    near_tie_check(rep, *comparison,
                   std::string(comparison_a) + " vs " +
                       std::string(comparison_b),
                   thresholds.near_tie);
  } else if (ds.arms.size() == 2 && !ds.arms[0].test.scores.empty() &&
             !ds.arms[1].test.scores.empty()) {
    const ModelArm& a = ds.arms[0];
    const ModelArm& b = ds.arms[1];
    EstimatorConfig cc;  // per-model error-corrected comparison
    cc.estimator = Estimator::rg;
    BootstrapPlan pc = plan;
    pc.seed = derive_seed(plan.seed, kSaltDiagCompare);
    rep.comparison = bootstrap_compare(ds, a.model_id, b.model_id, cc, pc);
    rep.has_comparison = true;
    rep.comparison_a = a.model_id;
    rep.comparison_b = b.model_id;
    near_tie_check(rep, rep.comparison, a.model_id + " vs " + b.model_id,
                   thresholds.near_tie);
  }
  return rep;
}

}  // namespace

DiagnosticsReport diagnose(const EvalDataset& ds, const BootstrapPlan& plan,
                           const DiagnosticThresholds& thresholds) {
  return diagnose_impl(ds, plan, thresholds, nullptr, {}, {});
}

DiagnosticsReport diagnose(const EvalDataset& ds, const BootstrapPlan& plan,
                           const DiagnosticThresholds& thresholds,
                           const EstimateResult& comparison,
                           std::string_view comparison_a,
                           std::string_view comparison_b) {
  return diagnose_impl(ds, plan, thresholds, &comparison, comparison_a,
                       comparison_b);
}

DiagnosticThresholds load_thresholds(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open thresholds file: " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("thresholds file: ") + e.what());
  }
  if (!j.is_object())
    throw SchemaError("thresholds file must be a JSON object");
  DiagnosticThresholds t;
  for (const auto& item : j.items()) {
    if (item.key() != "low_j" && item.key() != "near_tie")
      throw SchemaError("thresholds file: unknown key \"" + item.key() +
                        "\"");
    if (!item.value().is_number())
      throw SchemaError("thresholds file: " + item.key() +
                        " must be a number");
  }
  if (j.contains("low_j")) t.low_j = j["low_j"].get<double>();
  if (j.contains("near_tie")) t.near_tie = j["near_tie"].get<double>();
  return t;
}

}  // namespace jeval
