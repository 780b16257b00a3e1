#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "jeval/errors.hpp"
#include "jeval/evalio.hpp"

using namespace jeval;

namespace {

JudgeRecord rec(std::string item, std::string model, Split split, int z_true,
                std::vector<std::uint8_t> runs,
                std::string judge = "judge-1") {
  JudgeRecord r;
  r.item_id = std::move(item);
  r.model_id = std::move(model);
  r.judge_id = std::move(judge);
  r.split = split;
  if (z_true >= 0) r.z_true = std::uint8_t(z_true);
  r.z_judge_runs = std::move(runs);
  return r;
}

// n calibration records, the first `flip0` negatives and `flip1` positives
// judged wrongly; balanced classes.
std::vector<JudgeRecord> cal_records(const std::string& model, int per_class,
                                     int flip0, int flip1) {
  std::vector<JudgeRecord> out;
  for (int i = 0; i < per_class; ++i)
    out.push_back(rec(model + "-n" + std::to_string(i), model, Split::cal, 0,
                      {std::uint8_t(i < flip0 ? 1 : 0)}));
  for (int i = 0; i < per_class; ++i)
    out.push_back(rec(model + "-p" + std::to_string(i), model, Split::cal, 1,
                      {std::uint8_t(i < flip1 ? 0 : 1)}));
  return out;
}

std::vector<JudgeRecord> test_records(const std::string& model, int n,
                                      int ones, const std::string& prefix) {
  std::vector<JudgeRecord> out;
  for (int i = 0; i < n; ++i)
    out.push_back(rec(prefix + std::to_string(i), model, Split::test, -1,
                      {std::uint8_t(i < ones ? 1 : 0)}));
  return out;
}

void append(std::vector<JudgeRecord>& dst, std::vector<JudgeRecord> src) {
  for (JudgeRecord& r : src) dst.push_back(std::move(r));
}

}  // namespace

TEST_CASE("record parsing, happy path") {
  std::istringstream is(R"({"item_id":"q1","model_id":"m","judge_id":"j","split":"test","z_judge_runs":[1,0,1]}

{"item_id":"q2","model_id":"m","judge_id":"j","split":"cal","z_true":true,"z_judge_runs":[false]}
{"item_id":"q1","model_id":"other","judge_id":"j","split":"test","z_judge_runs":[0]}
)");
  const std::vector<JudgeRecord> rs = parse_records(is);
  REQUIRE(rs.size() == 3);
  CHECK(rs[0].item_id == "q1");
  CHECK(rs[0].split == Split::test);
  CHECK_FALSE(rs[0].z_true.has_value());
  CHECK(rs[0].z_judge_runs == std::vector<std::uint8_t>{1, 0, 1});
  CHECK(rs[1].split == Split::cal);
  REQUIRE(rs[1].z_true.has_value());
  CHECK(*rs[1].z_true == 1);        // booleans accepted
  CHECK(rs[1].z_judge_runs[0] == 0);
  CHECK(rs[2].model_id == "other");  // same item, different model is fine
}

TEST_CASE("record parsing failures carry line numbers") {
  {
    std::istringstream is(
        "{\"item_id\":\"a\",\"model_id\":\"m\",\"judge_id\":\"j\","
        "\"split\":\"test\",\"z_judge_runs\":[1]}\nnot json\n");
    try {
      parse_records(is);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  {
    std::istringstream is(R"({"item_id":"a","judge_id":"j","z_judge_runs":[1]})");
    try {
      parse_records(is);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("model_id") != std::string::npos);
      CHECK(msg.find("split") != std::string::npos);
    }
  }
  {
    std::istringstream is(
        R"({"item_id":"a","model_id":"m","judge_id":"j","split":"cal","z_judge_runs":[1]})");
    try {
      parse_records(is);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("z_true") != std::string::npos);
    }
  }
  auto bad = [](const char* line) {
    std::istringstream is(line);
    CHECK_THROWS_AS(parse_records(is), SchemaError);
  };
  bad(R"({"item_id":"a","model_id":"m","judge_id":"j","split":"dev","z_judge_runs":[1]})");
  bad(R"({"item_id":"a","model_id":"m","judge_id":"j","split":"test","z_judge_runs":[2]})");
  bad(R"({"item_id":"a","model_id":"m","judge_id":"j","split":"test","z_judge_runs":[]})");
  bad(R"({"item_id":"a","model_id":"m","judge_id":"j","split":"test","z_judge_runs":1})");
  bad(R"({"item_id":"","model_id":"m","judge_id":"j","split":"test","z_judge_runs":[1]})");
  bad(R"(["not","an","object"])");
  {
    std::istringstream is(
        "{\"item_id\":\"a\",\"model_id\":\"m\",\"judge_id\":\"j\","
        "\"split\":\"test\",\"z_judge_runs\":[1]}\n"
        "{\"item_id\":\"a\",\"model_id\":\"m\",\"judge_id\":\"j\","
        "\"split\":\"test\",\"z_judge_runs\":[0]}\n");
    CHECK_THROWS_AS(parse_records(is), DuplicateRecordError);
  }
  CHECK_THROWS_AS(load_records("/nonexistent/records.jsonl"), ParseError);
}

TEST_CASE("answer extraction") {
  CHECK(extract_answer("The answer is C") == 'C');
  CHECK(extract_answer("the answer is (b).") == 'B');
  CHECK(extract_answer("The final answer is D") == 'D');
  CHECK(extract_answer("the correct answer is: A") == 'A');
  CHECK(extract_answer("The answer is A. Wait, the answer is E") == 'E');
  CHECK(extract_answer("Answer:  (f)") == 'F');
  // the primary pattern shadows the fallback even when the fallback is later
  CHECK(extract_answer("the answer is A\nAnswer: B") == 'A');
  CHECK(extract_answer("so the answer is j") == 'J');
  CHECK_THROWS_AS(extract_answer("I cannot decide."), FormatError);
  CHECK_THROWS_AS(extract_answer("The answer is 7"), FormatError);
  CHECK_THROWS_AS(extract_answer("The answer is K"), FormatError);
  CHECK_THROWS_AS(extract_answer(""), FormatError);
}

TEST_CASE("dataset assembly collapses runs and labels calibration") {
  std::vector<JudgeRecord> records;
  records.push_back(rec("t0", "M", Split::test, -1, {1, 0}));
  records.push_back(rec("t1", "M", Split::test, -1, {1, 1, 1}));
  records.push_back(rec("c0", "M", Split::cal, 1, {0, 1, 1}));
  records.push_back(rec("c1", "M", Split::cal, 0, {0, 1}));

  EstimatorConfig design;
  design.estimator = Estimator::naive;

  const EvalDataset first = build_dataset(records, design);
  CHECK(first.judge_id == "judge-1");
  REQUIRE(first.arms.size() == 1);
  CHECK(first.arm("M").test.scores[0] == doctest::Approx(0.5));
  CHECK(first.arm("M").test.scores[1] == doctest::Approx(1.0));
  CHECK(first.arm("M").test.item_ids ==
        std::vector<std::string>{"t0", "t1"});
  // first-run labels
  CHECK(first.arm("M").calibration.z_judge ==
        std::vector<std::uint8_t>{0, 0});

  const EvalDataset maj = build_dataset(records, design, 0, true);
  // majority of {0,1,1} is 1; the {0,1} tie rounds up
  CHECK(maj.arm("M").calibration.z_judge == std::vector<std::uint8_t>{1, 1});
}

TEST_CASE("dataset assembly guards") {
  EstimatorConfig naive_design;
  naive_design.estimator = Estimator::naive;
  CHECK_THROWS_AS(build_dataset(std::vector<JudgeRecord>{}, naive_design),
                  ValidationError);
  {
    std::vector<JudgeRecord> records;
    records.push_back(rec("a", "M", Split::test, -1, {1}, "j1"));
    records.push_back(rec("b", "M", Split::test, -1, {1}, "j2"));
    CHECK_THROWS_AS(build_dataset(records, naive_design), ValidationError);
  }
  {
    std::vector<JudgeRecord> records;
    records.push_back(rec("a", "M1", Split::test, -1, {1}));
    records.push_back(rec("a", "M2", Split::test, -1, {1}));
    records.push_back(rec("a", "M3", Split::test, -1, {1}));
    CHECK_THROWS_AS(build_dataset(records, naive_design), ValidationError);
  }
  {
    // same sizes, disjoint item sets: not a paired comparison
    std::vector<JudgeRecord> records;
    append(records, test_records("A", 5, 3, "a-"));
    append(records, test_records("B", 5, 3, "b-"));
    CHECK_THROWS_AS(build_dataset(records, naive_design), UnpairedItemsError);
  }
  {
    // one arm scored, one arm calibration-only: builds fine
    std::vector<JudgeRecord> records;
    append(records, test_records("A", 5, 3, "t-"));
    append(records, cal_records("B", 4, 1, 1));
    CHECK_NOTHROW(build_dataset(records, naive_design));
  }
}

TEST_CASE("single-class calibration is refused by name") {
  std::vector<JudgeRecord> records;
  append(records, test_records("M", 4, 2, "t-"));
  for (int i = 0; i < 5; ++i)
    records.push_back(rec("c" + std::to_string(i), "M", Split::cal, 1, {1}));
  EstimatorConfig design;  // rg
  try {
    build_dataset(records, design);
    FAIL("expected InsufficientCalibrationError");
  } catch (const InsufficientCalibrationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("M") != std::string::npos);
    CHECK(msg.find("z_true=0") != std::string::npos);
  }
}

TEST_CASE("shared design keeps only the incumbent's labels") {
  std::vector<JudgeRecord> records;
  append(records, test_records("A", 6, 4, "t-"));
  append(records, test_records("B", 6, 3, "t-"));
  append(records, cal_records("A", 5, 1, 1));
  append(records, cal_records("B", 5, 1, 1));

  EstimatorConfig shared;
  shared.estimator = Estimator::rg;
  shared.design = CalibrationDesign::shared;
  shared.incumbent = "A";
  const EvalDataset ds = build_dataset(records, shared);
  CHECK(ds.arm("A").calibration.size() == 10);
  CHECK(ds.arm("B").calibration.size() == 0);

  shared.incumbent = "";
  CHECK_THROWS_AS(build_dataset(records, shared), ValidationError);
  shared.incumbent = "C";
  CHECK_THROWS_AS(build_dataset(records, shared), ValidationError);
  shared.incumbent = "A";
  shared.estimator = Estimator::ppi;
  CHECK_THROWS_AS(build_dataset(records, shared), ValidationError);

  std::vector<JudgeRecord> no_cal_inc;
  append(no_cal_inc, test_records("A", 6, 4, "t-"));
  append(no_cal_inc, cal_records("B", 5, 1, 1));
  EstimatorConfig shared_a;
  shared_a.estimator = Estimator::rg;
  shared_a.design = CalibrationDesign::shared;
  shared_a.incumbent = "A";
  CHECK_THROWS_AS(build_dataset(no_cal_inc, shared_a),
                  InsufficientCalibrationError);
}

TEST_CASE("one_x rectifier design halves the labels at ingestion") {
  std::vector<JudgeRecord> records;
  append(records, test_records("M", 8, 5, "t-"));
  append(records, cal_records("M", 8, 2, 2));  // 16 calibration records

  EstimatorConfig design;
  design.estimator = Estimator::ppi;
  design.budget = Budget::one_x;

  const EvalDataset h1 = build_dataset(records, design, 11);
  const EvalDataset h2 = build_dataset(records, design, 11);
  const EvalDataset h3 = build_dataset(records, design, 12);
  CHECK(h1.arm("M").calibration.size() == 8);
  CHECK(h1.arm("M").calibration.item_ids == h2.arm("M").calibration.item_ids);
  CHECK(h1.arm("M").calibration.item_ids != h3.arm("M").calibration.item_ids);

  // kept rows are a subsequence of the original order
  const EvalDataset full = build_dataset(
      records, [] {
        EstimatorConfig d;
        d.estimator = Estimator::ppi;
        return d;
      }());
  const std::vector<std::string>& all = full.arm("M").calibration.item_ids;
  const std::vector<std::string>& kept = h1.arm("M").calibration.item_ids;
  std::size_t pos = 0;
  for (const std::string& id : kept) {
    while (pos < all.size() && all[pos] != id) ++pos;
    CHECK(pos < all.size());
    ++pos;
  }

  // too small to halve
  std::vector<JudgeRecord> tiny;
  append(tiny, test_records("M", 3, 2, "t-"));
  tiny.push_back(rec("c0", "M", Split::cal, 1, {1}));
  CHECK_THROWS_AS(build_dataset(tiny, design), InsufficientCalibrationError);
}

namespace {

EvalDataset diag_ds(int per_class_a, int flip_a, int per_class_b, int flip_b,
                    bool with_tests) {
  std::vector<JudgeRecord> records;
  if (with_tests) {
    append(records, test_records("A", 40, 24, "t-"));
    append(records, test_records("B", 40, 24, "t-"));
  }
  append(records, cal_records("A", per_class_a, flip_a, flip_a));
  append(records, cal_records("B", per_class_b, flip_b, flip_b));
  EstimatorConfig design;
  design.estimator = Estimator::naive;
  return build_dataset(records, design);
}

BootstrapPlan diag_plan() {
  BootstrapPlan p;
  p.iterations = 200;
  p.seed = 17;
  return p;
}

}  // namespace

TEST_CASE("diagnostics: healthy matched judges raise nothing") {
  // J = 0.9 in both arms, identical counts
  const EvalDataset ds = diag_ds(40, 2, 40, 2, true);
  const DiagnosticsReport rep = diagnose(ds, diag_plan());
  REQUIRE(rep.models.size() == 2);
  CHECK(rep.models[0].stats.j_hat == doctest::Approx(0.9));
  CHECK(rep.models[0].quality.j.raw_point == doctest::Approx(0.9));
  REQUIRE(rep.pairs.size() == 1);
  CHECK(rep.pairs[0].delta_j.delta_j.raw_point == doctest::Approx(0.0));
  CHECK_FALSE(rep.pairs[0].delta_j.excludes_zero);
  for (const DiagnosticWarning& w : rep.warnings)
    CHECK(w.kind != "large_delta_J");
  bool low = false;
  for (const DiagnosticWarning& w : rep.warnings) low |= w.kind == "low_J";
  CHECK_FALSE(low);
}

TEST_CASE("diagnostics: weak judge and quality gap both fire") {
  // arm A: J = 0.1; arm B: J = 0.9 with plenty of labels
  const EvalDataset ds = diag_ds(100, 45, 100, 5, false);
  const DiagnosticsReport rep = diagnose(ds, diag_plan());
  bool low_a = false, gap = false;
  for (const DiagnosticWarning& w : rep.warnings) {
    if (w.kind == "low_J" && w.subject == "A") {
      low_a = true;
      CHECK(w.threshold == doctest::Approx(0.2));
      CHECK(w.value == doctest::Approx(0.1));
      CHECK(w.message.find("0.1") != std::string::npos);
      CHECK(w.message.find("0.2") != std::string::npos);
    }
    if (w.kind == "large_delta_J") {
      gap = true;
      CHECK(w.subject == "A vs B");
      CHECK(w.message.find("CI") != std::string::npos);
    }
  }
  CHECK(low_a);
  CHECK(gap);
  CHECK_FALSE(rep.has_comparison);  // no test scores anywhere
}

TEST_CASE("diagnostics: identical arms trip the near-tie alarm") {
  const EvalDataset ds = diag_ds(30, 0, 30, 0, true);  // perfect judges
  const DiagnosticsReport rep = diagnose(ds, diag_plan());
  CHECK(rep.has_comparison);
  CHECK(rep.comparison_a == "A");
  CHECK(rep.comparison.ci_lo == 0.0);
  CHECK(rep.comparison.ci_hi == 0.0);
  bool tie = false;
  for (const DiagnosticWarning& w : rep.warnings)
    if (w.kind == "near_tie") {
      tie = true;
      CHECK(w.threshold == doctest::Approx(0.05));
      CHECK(w.subject == "A vs B");
    }
  CHECK(tie);
}

TEST_CASE("diagnostics: tighter thresholds never add warnings") {
  const EvalDataset ds = diag_ds(100, 45, 100, 5, true);
  DiagnosticThresholds strict;  // defaults: 0.2 / 0.05
  DiagnosticThresholds loose;
  loose.low_j = 0.02;
  loose.near_tie = 0.001;
  const DiagnosticsReport r_strict = diagnose(ds, diag_plan(), strict);
  const DiagnosticsReport r_loose = diagnose(ds, diag_plan(), loose);
  for (const DiagnosticWarning& lw : r_loose.warnings) {
    if (lw.kind == "large_delta_J") continue;  // threshold-independent
    bool found = false;
    for (const DiagnosticWarning& sw : r_strict.warnings)
      found = found || (sw.kind == lw.kind && sw.subject == lw.subject);
    CHECK(found);
  }
  CHECK(r_loose.warnings.size() <= r_strict.warnings.size());
}

TEST_CASE("diagnostics accept a precomputed comparison interval") {
  const EvalDataset ds = diag_ds(30, 1, 30, 1, false);
  EstimateResult cmp;
  cmp.scale = EstimandScale::difference;
  cmp.ci_lo = -0.01;
  cmp.ci_hi = 0.02;
  const DiagnosticsReport rep =
      diagnose(ds, diag_plan(), DiagnosticThresholds{}, cmp, "X", "Y");
  bool tie = false;
  for (const DiagnosticWarning& w : rep.warnings)
    if (w.kind == "near_tie") {
      tie = true;
      CHECK(w.subject == "X vs Y");
    }
  CHECK(tie);

  cmp.ci_hi = 0.06;  // sticks out of the band
  const DiagnosticsReport rep2 =
      diagnose(ds, diag_plan(), DiagnosticThresholds{}, cmp, "X", "Y");
  for (const DiagnosticWarning& w : rep2.warnings)
    CHECK(w.kind != "near_tie");
}

TEST_CASE("diagnostics need calibration on every arm") {
  std::vector<JudgeRecord> records;
  append(records, test_records("A", 5, 3, "t-"));
  append(records, test_records("B", 5, 3, "t-"));
  append(records, cal_records("A", 5, 1, 1));
  EstimatorConfig design;
  design.estimator = Estimator::naive;
  const EvalDataset ds = build_dataset(records, design);
  CHECK_THROWS_AS(diagnose(ds, diag_plan()), EmptyCalibrationError);
}

TEST_CASE("threshold file loading") {
  const std::string path = "test_thresholds.json";
  {
    std::ofstream os(path);
    os << R"({"low_j": 0.35, "near_tie": 0.02})";
  }
  const DiagnosticThresholds t = load_thresholds(path);
  CHECK(t.low_j == 0.35);
  CHECK(t.near_tie == 0.02);
  {
    std::ofstream os(path);
    os << R"({"low_j": 0.35, "spurious": 1})";
  }
  CHECK_THROWS_AS(load_thresholds(path), SchemaError);
  {
    std::ofstream os(path);
    os << "{{{";
  }
  CHECK_THROWS_AS(load_thresholds(path), ParseError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_thresholds(path), ParseError);
}
