#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "jeval/estimators.hpp"
#include "jeval/evalio.hpp"
#include "jeval/resampling.hpp"

namespace jeval {

// Run metadata echoed into every report.
struct ReportMeta {
  std::string tool = "jeval";
  double alpha = 0.05;
  std::int64_t boot = 10000;
  std::uint64_t seed = 0;
};

// One per-model accuracy estimate for the report.
struct ModelEstimateEntry {
  std::string model_id;
  EstimatorConfig config;
  EstimateResult result;
};

// A two-model accuracy difference (model_a minus model_b).
struct ComparisonEntry {
  std::string model_a;
  std::string model_b;
  EstimatorConfig config;
  EstimateResult result;
};

// Machine-readable companion document (serialized JSON, stable key order,
// full double precision). Every number that appears in the rendered text is
// present here. Any section may be absent.
std::string report_json(const ReportMeta& meta,
                        const DiagnosticsReport* diagnostics,
                        std::span<const ModelEstimateEntry> estimates,
                        const ComparisonEntry* comparison);

// Plain-text report rendered from the companion alone, so regenerating from
// the companion is byte-identical. Throws SchemaError / ParseError on a
// companion this tool did not produce.
std::string render_text(const std::string& companion_json);

}  // namespace jeval
