#include "dres/report.hpp"

#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

namespace dres {

namespace {

std::string two_dp(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v;
  return out.str();
}

void put_metric(nlohmann::ordered_json& rec, const char* name,
                const std::optional<double>& value) {
  if (value.has_value()) {
    rec[name] = *value;
  } else {
    rec[name] = nullptr;
  }
}

std::string csv_opt(const std::optional<double>& value) {
  return value.has_value() ? two_dp(*value) : "";
}

}  // namespace

std::string condition_name(Condition condition) {
  return condition == Condition::Full ? "f" : "s";
}

std::string failure_name(FailureMode mode) {
  switch (mode) {
    case FailureMode::OverDeletion: return "over-deletion";
    case FailureMode::UnderDeletion: return "under-deletion";
    case FailureMode::None: return "none";
  }
  return "none";
}

std::string format_cell(const MetricSummary& m) {
  if (m.count == 0) return "-";
  return two_dp(m.mean) + "{" + two_dp(m.std_dev) + "}";
}

std::string unit_scores_to_jsonl(const std::vector<UnitScores>& units) {
  std::ostringstream out;
  for (const auto& u : units) {
    nlohmann::ordered_json rec;
    rec["unit"] = u.unit_id;
    rec["e_p"] = u.e.precision;
    put_metric(rec, "e_r", u.e.recall_defined ? std::optional<double>(u.e.recall) : std::nullopt);
    put_metric(rec, "e_f", u.e.f1_defined ? std::optional<double>(u.e.f1) : std::nullopt);
    put_metric(rec, "z_e", u.z.z_e);
    put_metric(rec, "z_i", u.z.z_i);
    put_metric(rec, "z_p", u.z.z_p);
    rec["undefined_precision"] = !u.e.precision_defined;
    rec["tp"] = u.e.tp;
    rec["fp"] = u.e.fp;
    rec["fn"] = u.e.fn;
    rec["tn"] = u.e.tn;
    out << rec.dump() << '\n';
  }
  return out.str();
}

std::string unit_scores_to_csv(const std::vector<UnitScores>& units) {
  std::ostringstream out;
  out << "unit,e_p,e_r,e_f,z_e,z_i,z_p,undefined_precision,tp,fp,fn,tn\n";
  for (const auto& u : units) {
    out << u.unit_id << ',' << two_dp(u.e.precision) << ','
        << (u.e.recall_defined ? two_dp(u.e.recall) : "") << ','
        << (u.e.f1_defined ? two_dp(u.e.f1) : "") << ','
        << csv_opt(u.z.z_e) << ',' << csv_opt(u.z.z_i) << ',' << csv_opt(u.z.z_p) << ','
        << (u.e.precision_defined ? 0 : 1) << ','
        << u.e.tp << ',' << u.e.fp << ',' << u.e.fn << ',' << u.e.tn << '\n';
  }
  return out.str();
}

std::string render_markdown(const std::vector<ReportCell>& cells) {
  // Group rows by model, preserving first-seen model order.
  std::vector<std::string> model_order;
  std::map<std::string, std::vector<const ReportCell*>> by_model;
  for (const auto& cell : cells) {
    if (by_model.find(cell.model_id) == by_model.end()) model_order.push_back(cell.model_id);
    by_model[cell.model_id].push_back(&cell);
  }

  std::ostringstream out;
  out << "# k-Shot Results\n";
  for (const auto& model : model_order) {
    const auto& rows = by_model[model];
    const ReportCell* best = nullptr;
    const ReportCell* worst = nullptr;
    for (const auto* row : rows) {
      if (row->summary.e_f.count == 0) continue;
      if (!best || row->summary.e_f.mean > best->summary.e_f.mean) best = row;
      if (!worst || row->summary.e_f.mean < worst->summary.e_f.mean) worst = row;
    }

    out << "\n## " << model << "\n\n";
    out << "| cond | k | e_f | e_p | e_r | z_e | z_i | z_p | flags |\n";
    out << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto* row : rows) {
      std::string flags;
      if (row == best && best != worst) flags += "best ";
      if (row == worst && best != worst) flags += "worst ";
      if (row->failure != FailureMode::None) flags += failure_name(row->failure) + " ";
      if (row->failed_units > 0) {
        flags += "excluded=" + std::to_string(row->failed_units) + " ";
      }
      if (!flags.empty()) flags.pop_back();
      out << "| " << condition_name(row->condition) << " | " << row->shots << " | "
          << format_cell(row->summary.e_f) << " | " << format_cell(row->summary.e_p) << " | "
          << format_cell(row->summary.e_r) << " | " << format_cell(row->summary.z_e) << " | "
          << format_cell(row->summary.z_i) << " | " << format_cell(row->summary.z_p) << " | "
          << flags << " |\n";
    }
  }
  return out.str();
}

std::string render_csv(const std::vector<ReportCell>& cells) {
  std::ostringstream out;
  out << "model,condition,k,"
         "e_f_mean,e_f_std,e_p_mean,e_p_std,e_r_mean,e_r_std,"
         "z_e_mean,z_e_std,z_i_mean,z_i_std,z_p_mean,z_p_std,"
         "units,failure_mode,failed_units\n";
  auto num = [&](const MetricSummary& m) {
    return m.count > 0 ? two_dp(m.mean) + "," + two_dp(m.std_dev) : ",";
  };
  for (const auto& cell : cells) {
    out << cell.model_id << ',' << condition_name(cell.condition) << ',' << cell.shots << ','
        << num(cell.summary.e_f) << ',' << num(cell.summary.e_p) << ','
        << num(cell.summary.e_r) << ',' << num(cell.summary.z_e) << ','
        << num(cell.summary.z_i) << ',' << num(cell.summary.z_p) << ','
        << cell.summary.units << ',' << failure_name(cell.failure) << ','
        << cell.failed_units << '\n';
  }
  return out.str();
}

}  // namespace dres
