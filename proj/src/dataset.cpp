#include "jeval/dataset.hpp"

#include <string>

#include "jeval/errors.hpp"

namespace jeval {

void CalibrationData::validate() const {
  if (z_true.size() != z_judge.size())
    throw ValidationError("calibration z_true and z_judge lengths differ");
  if (!item_ids.empty() && item_ids.size() != z_true.size())
    throw ValidationError("calibration item_ids length mismatch");
  for (std::size_t i = 0; i < z_true.size(); ++i)
    if (z_true[i] > 1 || z_judge[i] > 1)
      throw ValidationError("calibration labels must be 0 or 1");
}

std::vector<LabeledPair> CalibrationData::pairs() const {
  validate();
  std::vector<LabeledPair> out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    out[i].z_true = z_true[i];
    out[i].z_judge = z_judge[i];
    if (!item_ids.empty()) out[i].item_id = item_ids[i];
    out[i].model_id = model_id;
  }
  return out;
}

bool EvalDataset::has_arm(std::string_view model_id) const {
  for (const ModelArm& a : arms)
    if (a.model_id == model_id) return true;
  return false;
}

const ModelArm& EvalDataset::arm(std::string_view model_id) const {
  for (const ModelArm& a : arms)
    if (a.model_id == model_id) return a;
  throw ValidationError("no arm for model " + std::string(model_id));
}

ModelArm& EvalDataset::arm(std::string_view model_id) {
  for (ModelArm& a : arms)
    if (a.model_id == model_id) return a;
  throw ValidationError("no arm for model " + std::string(model_id));
}

void EvalDataset::require_paired() const {
  if (arms.size() != 2)
    throw UnpairedItemsError("pairing requires exactly two arms, have " +
                             std::to_string(arms.size()));
  const TestScores& a = arms[0].test;
  const TestScores& b = arms[1].test;
  if (a.scores.size() != b.scores.size())
    throw UnpairedItemsError("test sizes differ: " +
                             std::to_string(a.scores.size()) + " vs " +
                             std::to_string(b.scores.size()));
  if (!a.item_ids.empty() && !b.item_ids.empty()) {
    if (a.item_ids.size() != a.scores.size() ||
        b.item_ids.size() != b.scores.size())
      throw ValidationError("test item_ids length mismatch");
    for (std::size_t i = 0; i < a.item_ids.size(); ++i)
      if (a.item_ids[i] != b.item_ids[i])
        throw UnpairedItemsError("test items differ at position " +
                                 std::to_string(i) + ": " + a.item_ids[i] +
                                 " vs " + b.item_ids[i]);
  }
}

}  // namespace jeval
