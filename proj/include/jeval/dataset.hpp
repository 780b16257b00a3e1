#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jeval/estimators.hpp"

namespace jeval {

// Labeled calibration arrays for one model arm, index-aligned.
struct CalibrationData {
  std::string model_id;
  std::vector<std::string> item_ids;  // may be empty for synthetic data
  std::vector<std::uint8_t> z_true;
  std::vector<std::uint8_t> z_judge;

  std::size_t size() const { return z_true.size(); }
  std::vector<LabeledPair> pairs() const;
  void validate() const;
};

struct ModelArm {
  std::string model_id;
  CalibrationData calibration;  // may be empty (shared design, non-incumbent)
  TestScores test;
};

// One or two model arms under a single judge. For comparisons the test item
// ids must agree elementwise across arms (paired items).
struct EvalDataset {
  std::string judge_id;
  std::vector<ModelArm> arms;

  bool has_arm(std::string_view model_id) const;
  const ModelArm& arm(std::string_view model_id) const;
  ModelArm& arm(std::string_view model_id);

  // Throws UnpairedItemsError unless both arms score the same items in the
  // same order.
  void require_paired() const;
};

}  // namespace jeval
