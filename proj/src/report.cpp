#include "jeval/report.hpp"

#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "jeval/errors.hpp"

namespace jeval {

namespace {

using nlohmann::json;

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const char* estimator_key(Estimator e) {
  switch (e) {
    case Estimator::naive:
      return "naive";
    case Estimator::rg:
      return "rg";
    case Estimator::ppi:
      return "ppi";
  }
  return "?";
}

json result_json(const EstimateResult& r) {
  json j;
  j["point"] = r.point_reported();
  j["ci"] = {r.ci_lo_reported(), r.ci_hi_reported()};
  j["plug_in"] = r.raw_point;
  j["scale"] = r.scale == EstimandScale::unit_interval ? "unit_interval"
                                                       : "difference";
  j["n_replicates"] = r.n_replicates;
  j["n_dropped"] = r.n_dropped;
  j["n_redrawn"] = r.n_redrawn;
  j["n_lambda_fallback"] = r.n_lambda_fallback;
  j["n_test"] = r.n_test;
  j["n_cal_a"] = r.n_cal_a;
  j["n_cal_b"] = r.n_cal_b;
  j["low_j"] = r.low_j;
  j["warnings"] = r.warnings;
  return j;
}

json config_json(const EstimatorConfig& c) {
  json j;
  j["estimator"] = estimator_key(c.estimator);
  j["design"] = c.design == CalibrationDesign::shared ? "shared"
                                                      : "model_specific";
  j["budget"] = c.budget == Budget::one_x ? "1x" : "2x";
  if (c.design == CalibrationDesign::shared) j["incumbent"] = c.incumbent;
  if (c.lambda.fixed)
    j["lambda_fixed"] = c.lambda.value;
  else if (c.estimator == Estimator::ppi)
    j["lambda"] = "tuned";
  return j;
}

json quality_json(const JudgeQualityResult& q) {
  json j;
  j["j"] = result_json(q.j);
  j["q0"] = result_json(q.q0);
  j["q1"] = result_json(q.q1);
  return j;
}

}  // namespace

std::string report_json(const ReportMeta& meta,
                        const DiagnosticsReport* diagnostics,
                        std::span<const ModelEstimateEntry> estimates,
                        const ComparisonEntry* comparison) {
  json root;
  root["meta"] = {{"tool", meta.tool},
                  {"alpha", meta.alpha},
                  {"boot", meta.boot},
                  {"seed", meta.seed}};

  if (diagnostics) {
    json d;
    d["judge_id"] = diagnostics->judge_id;
    d["thresholds"] = {{"low_j", diagnostics->thresholds.low_j},
                       {"near_tie", diagnostics->thresholds.near_tie}};
    d["models"] = json::array();
    for (const ModelDiagnostics& m : diagnostics->models) {
      json mj;
      mj["model_id"] = m.model_id;
      mj["n_cal"] = m.stats.m0 + m.stats.m1;
      mj["m0"] = m.stats.m0;
      mj["m1"] = m.stats.m1;
      mj["q0_hat"] = m.stats.q0_hat;
      mj["q1_hat"] = m.stats.q1_hat;
      mj["j_hat"] = m.stats.j_hat;
      mj["quality"] = quality_json(m.quality);
      d["models"].push_back(std::move(mj));
    }
    d["pairs"] = json::array();
    for (const PairDiagnostics& p : diagnostics->pairs) {
      json pj;
      pj["model_a"] = p.model_a;
      pj["model_b"] = p.model_b;
      pj["delta_j"] = result_json(p.delta_j.delta_j);
      pj["excludes_zero"] = p.delta_j.excludes_zero;
      d["pairs"].push_back(std::move(pj));
    }
    if (diagnostics->has_comparison) {
      d["comparison"] = result_json(diagnostics->comparison);
      d["comparison"]["model_a"] = diagnostics->comparison_a;
      d["comparison"]["model_b"] = diagnostics->comparison_b;
    }
    d["warnings"] = json::array();
    for (const DiagnosticWarning& w : diagnostics->warnings)
      d["warnings"].push_back({{"kind", w.kind},
                               {"subject", w.subject},
                               {"threshold", w.threshold},
                               {"value", w.value},
                               {"message", w.message}});
    root["diagnostics"] = std::move(d);
  }

  if (!estimates.empty()) {
    root["estimates"] = json::array();
    for (const ModelEstimateEntry& e : estimates) {
      json ej;
      ej["model_id"] = e.model_id;
      ej["config"] = config_json(e.config);
      ej["result"] = result_json(e.result);
      root["estimates"].push_back(std::move(ej));
    }
  }

  if (comparison) {
    json cj;
    cj["model_a"] = comparison->model_a;
    cj["model_b"] = comparison->model_b;
    cj["config"] = config_json(comparison->config);
    cj["result"] = result_json(comparison->result);
    root["comparison"] = std::move(cj);
  }

  return root.dump(2) + "\n";
}

namespace {

void need(bool ok, const std::string& what) {
  if (!ok) throw SchemaError("report companion: " + what);
}

std::string ci_only(const json& r) {
  return "[" + fmt6(r["ci"][0].get<double>()) + ", " +
         fmt6(r["ci"][1].get<double>()) + "]";
}

std::string ci_text(const json& r) {
  return fmt6(r["point"].get<double>()) + " " + ci_only(r);
}

std::string estimand_line(const std::string& estimator, bool comparison) {
  const std::string what =
      comparison ? "true-accuracy difference" : "true accuracy";
  if (estimator == "naive")
    return (comparison ? std::string("judge pass-rate difference")
                       : std::string("judge pass rate")) +
           ", uncorrected (estimates the judge's positive rate, not true "
           "accuracy)";
  if (estimator == "rg")
    return what + ", judge-error corrected (error-rate inversion)";
  return what + ", judge-error corrected (labeled-anchor rectifier)";
}

std::string design_line(const json& cfg) {
  std::string s = "design: ";
  if (cfg["design"].get<std::string>() == "shared")
    s += "shared calibration (incumbent: " +
         cfg["incumbent"].get<std::string>() + ")";
  else
    s += "model-specific calibration";
  s += ", budget " + cfg["budget"].get<std::string>();
  if (cfg.contains("lambda_fixed"))
    s += ", lambda fixed at " + fmt6(cfg["lambda_fixed"].get<double>());
  else if (cfg.contains("lambda"))
    s += ", lambda tuned per replicate";
  return s;
}

void render_result_counts(std::string& out, const json& r,
                          const std::string& indent) {
  out += indent + "replicates: " +
         std::to_string(r["n_replicates"].get<std::int64_t>()) + " usable";
  const std::int64_t dropped = r["n_dropped"].get<std::int64_t>();
  const std::int64_t redrawn = r["n_redrawn"].get<std::int64_t>();
  if (dropped > 0) out += ", " + std::to_string(dropped) + " dropped";
  if (redrawn > 0) out += ", " + std::to_string(redrawn) + " redrawn";
  out += "\n";
  for (const json& w : r["warnings"])
    out += indent + "note: " + w.get<std::string>() + "\n";
}

}  // namespace

std::string render_text(const std::string& companion_json) {
  json root;
  try {
    root = json::parse(companion_json);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("report companion: ") + e.what());
  }
  need(root.is_object() && root.contains("meta"), "missing meta section");
  const json& meta = root["meta"];
  need(meta.contains("alpha") && meta.contains("boot") &&
           meta.contains("seed") && meta.contains("tool"),
       "meta must carry tool, alpha, boot, seed");

  std::string out;
  out += "==============================================================\n";
  out += " judge-based evaluation report\n";
  out += "==============================================================\n";
  out += "tool: " + meta["tool"].get<std::string>() + "\n";
  const double alpha = meta["alpha"].get<double>();
  out += "intervals: " + fmt6(100.0 * (1.0 - alpha)) +
         "% percentile bootstrap CIs; the randomness they quantify is "
         "resampling\n  of calibration pairs and test items (B = " +
         std::to_string(meta["boot"].get<std::int64_t>()) +
         ", seed = " + std::to_string(meta["seed"].get<std::uint64_t>()) +
         ")\n";

  if (root.contains("diagnostics")) {
    const json& d = root["diagnostics"];
    out += "\n-- judge quality diagnostics (judge: " +
           d["judge_id"].get<std::string>() + ") --\n";
    for (const json& m : d["models"]) {
      out += "model " + m["model_id"].get<std::string>() + ":\n";
      out += "  n_cal = " + std::to_string(m["n_cal"].get<std::int64_t>()) +
             " (class 0: " + std::to_string(m["m0"].get<std::int64_t>()) +
             ", class 1: " + std::to_string(m["m1"].get<std::int64_t>()) +
             ")\n";
      const json& q = m["quality"];
      out += "  q0 = " + fmt6(m["q0_hat"].get<double>()) + ", CI " +
             ci_only(q["q0"]) + "\n";
      out += "  q1 = " + fmt6(m["q1_hat"].get<double>()) + ", CI " +
             ci_only(q["q1"]) + "\n";
      out += "  J  = " + fmt6(m["j_hat"].get<double>()) + ", CI " +
             ci_only(q["j"]) + "\n";
    }
    for (const json& p : d["pairs"]) {
      out += "delta J (" + p["model_a"].get<std::string>() + " minus " +
             p["model_b"].get<std::string>() + "): " + ci_text(p["delta_j"]);
      out += p["excludes_zero"].get<bool>() ? "  (excludes zero)\n"
                                            : "  (contains zero)\n";
    }
    if (d.contains("comparison")) {
      const json& c = d["comparison"];
      out += "diagnostic comparison (" + c["model_a"].get<std::string>() +
             " minus " + c["model_b"].get<std::string>() +
             ", error-corrected): " + ci_text(c) + "\n";
    }
  }

  if (root.contains("estimates")) {
    out += "\n-- per-model accuracy --\n";
    for (const json& e : root["estimates"]) {
      const json& cfg = e["config"];
      const json& r = e["result"];
      out += "model " + e["model_id"].get<std::string>() + ":\n";
      out += "  estimand: " +
             estimand_line(cfg["estimator"].get<std::string>(), false) + "\n";
      out += "  " + design_line(cfg) +
             " (n_cal = " + std::to_string(r["n_cal_a"].get<std::int64_t>()) +
             ", n_test = " + std::to_string(r["n_test"].get<std::int64_t>()) +
             ")\n";
      out += "  estimate: " + ci_text(r) + " (plug-in " +
             fmt6(r["plug_in"].get<double>()) + ")\n";
      render_result_counts(out, r, "  ");
    }
  }

  if (root.contains("comparison")) {
    const json& c = root["comparison"];
    const json& cfg = c["config"];
    const json& r = c["result"];
    out += "\n-- comparison (" + c["model_a"].get<std::string>() + " minus " +
           c["model_b"].get<std::string>() + ") --\n";
    out += "  estimand: " +
           estimand_line(cfg["estimator"].get<std::string>(), true) + "\n";
    out += "  " + design_line(cfg) +
           " (n_cal_a = " + std::to_string(r["n_cal_a"].get<std::int64_t>()) +
           ", n_cal_b = " + std::to_string(r["n_cal_b"].get<std::int64_t>()) +
           ", n_test = " + std::to_string(r["n_test"].get<std::int64_t>()) +
           ")\n";
    out += "  estimate: " + ci_text(r) + " (plug-in " +
           fmt6(r["plug_in"].get<double>()) + ")\n";
    render_result_counts(out, r, "  ");
  }

  std::size_t n_warn = 0;
  out += "\n-- warnings --\n";
  if (root.contains("diagnostics")) {
    for (const json& w : root["diagnostics"]["warnings"]) {
      out += "  [" + w["kind"].get<std::string>() + "] " +
             w["subject"].get<std::string>() + ": " +
             w["message"].get<std::string>() + "\n";
      ++n_warn;
    }
  }
  if (n_warn == 0) out += "  none\n";

  if (n_warn > 0) {
    out += "\nCaution: " + std::to_string(n_warn) +
           " diagnostic warning(s) fired. Corrected estimates depend on "
           "judge error\nrates measured from limited calibration data; "
           "weaken any accuracy claim built on\nthese numbers and report "
           "the diagnostics above alongside it.\n";
  }
  return out;
}

}  // namespace jeval
