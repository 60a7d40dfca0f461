#pragma once

#include <string>
#include <vector>

#include "dres/harness.hpp"
#include "dres/scoring.hpp"

namespace dres {

// One row of the k-shot results grid. Metric order mirrors the report
// columns: e_f, e_p, e_r, z_e, z_i, z_p.
struct ReportCell {
  std::string model_id;
  Condition condition = Condition::Full;
  int shots = 0;
  Summary summary;
  FailureMode failure = FailureMode::None;
  std::size_t failed_units = 0;
};

std::string condition_name(Condition condition);  // "f" or "s"
std::string failure_name(FailureMode mode);

// "mean{std}" with two decimals, e.g. "82.38{4.18}"; "-" when undefined.
std::string format_cell(const MetricSummary& m);

// Per-unit scores, one JSON document per line. Metric names exactly
// e_p, e_r, e_f, z_e, z_i, z_p.
std::string unit_scores_to_jsonl(const std::vector<UnitScores>& units);

std::string unit_scores_to_csv(const std::vector<UnitScores>& units);

// Grid report. The markdown table marks the best and worst e_f row per
// model block and annotates failure modes; the CSV carries raw numbers.
std::string render_markdown(const std::vector<ReportCell>& cells);
std::string render_csv(const std::vector<ReportCell>& cells);

}  // namespace dres
