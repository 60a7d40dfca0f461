#include "dres/scoring.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dres {

namespace {

void finalize_e(EScores& e) {
  const std::size_t pred_pos = e.tp + e.fp;
  const std::size_t actual_pos = e.tp + e.fn;
  e.precision_defined = pred_pos > 0;
  e.recall_defined = actual_pos > 0;
  // Degenerate precision (no deletions made) is reported as 0 with the
  // flag cleared; it still participates in aggregation.
  e.precision = pred_pos > 0 ? 100.0 * static_cast<double>(e.tp) / static_cast<double>(pred_pos) : 0.0;
  e.recall = actual_pos > 0 ? 100.0 * static_cast<double>(e.tp) / static_cast<double>(actual_pos) : 0.0;
  e.f1_defined = e.recall_defined;
  if (e.f1_defined) {
    e.f1 = (e.precision + e.recall) > 0.0
               ? 2.0 * e.precision * e.recall / (e.precision + e.recall)
               : 0.0;
  } else {
    e.f1 = 0.0;
  }
}

std::optional<double> ratio(std::size_t removed, std::size_t total) {
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(removed) / static_cast<double>(total);
}

void finalize_z(ZScores& z) {
  z.z_e = ratio(z.removed_e, z.total_e);
  z.z_i = ratio(z.removed_i, z.total_i);
  z.z_p = ratio(z.removed_p, z.total_p);
}

void z_walk(const ParseTree& node, const DeletionLabels& labels,
            const ScoreOptions& options, ZScores& z) {
  const NodeClass cls = classify_node(node.label);
  if (cls != NodeClass::Fluent) {
    bool fully_removed = true;
    bool any_checked = false;
    const auto tokens = yield_tokens(node);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (options.z_ignore_punct && tokens[i].is_punct) continue;
      any_checked = true;
      if (!labels.deleted[node.span_begin + i]) {
        fully_removed = false;
        break;
      }
    }
    if (!any_checked) fully_removed = false;
    switch (cls) {
      case NodeClass::Edited:
        ++z.total_e;
        if (fully_removed) ++z.removed_e;
        break;
      case NodeClass::Intj:
        ++z.total_i;
        if (fully_removed) ++z.removed_i;
        break;
      case NodeClass::Prn:
        ++z.total_p;
        if (fully_removed) ++z.removed_p;
        break;
      default:
        break;
    }
  }
  for (const auto& child : node.children) z_walk(child, labels, options, z);
}

MetricSummary summarize(const std::vector<std::optional<double>>& values) {
  MetricSummary s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v.has_value()) {
      sum += *v;
      ++s.count;
    } else {
      ++s.excluded;
    }
  }
  if (s.count == 0) return s;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double sq = 0.0;
    for (const auto& v : values) {
      if (v.has_value()) sq += (*v - s.mean) * (*v - s.mean);
    }
    s.std_dev = std::sqrt(sq / static_cast<double>(s.count - 1));
  }
  return s;
}

}  // namespace

EScores e_scores(const std::vector<TokenTag>& tags, const DeletionLabels& labels,
                 const ScoreOptions& options) {
  if (tags.size() != labels.deleted.size()) {
    throw LengthMismatch("e_scores: |tags| != gold length");
  }
  (void)options;
  EScores e;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const bool disfluent = tags[i] != TokenTag::Fluent;
    const bool deleted = labels.deleted[i];
    if (disfluent && deleted) ++e.tp;
    else if (!disfluent && deleted) ++e.fp;
    else if (disfluent && !deleted) ++e.fn;
    else ++e.tn;
  }
  finalize_e(e);
  return e;
}

ZScores z_scores(const ParseTree& tree, const DeletionLabels& labels,
                 const ScoreOptions& options) {
  if (tree.span_width() != labels.deleted.size()) {
    throw LengthMismatch("z_scores: tree yield != gold length");
  }
  ZScores z;
  z_walk(tree, labels, options, z);
  finalize_z(z);
  return z;
}

FailureMode classify_failure(const EScores& e, const FailureThresholds& t) {
  if (e.recall - e.precision >= t.gap && e.recall >= t.high) {
    return FailureMode::OverDeletion;
  }
  if (e.precision - e.recall >= t.gap && e.precision >= t.high) {
    return FailureMode::UnderDeletion;
  }
  return FailureMode::None;
}

EScores merge_e(const std::vector<EScores>& parts) {
  EScores e;
  for (const auto& p : parts) {
    e.tp += p.tp;
    e.fp += p.fp;
    e.fn += p.fn;
    e.tn += p.tn;
  }
  finalize_e(e);
  return e;
}

ZScores merge_z(const std::vector<ZScores>& parts) {
  ZScores z;
  for (const auto& p : parts) {
    z.total_e += p.total_e;
    z.removed_e += p.removed_e;
    z.total_i += p.total_i;
    z.removed_i += p.removed_i;
    z.total_p += p.total_p;
    z.removed_p += p.removed_p;
  }
  finalize_z(z);
  return z;
}

Summary aggregate(const std::vector<UnitScores>& per_unit) {
  if (per_unit.empty()) throw std::invalid_argument("EmptyInput: no units to aggregate");
  Summary s;
  s.units = per_unit.size();
  std::vector<std::optional<double>> e_f, e_p, e_r, z_e, z_i, z_p;
  for (const auto& u : per_unit) {
    e_p.push_back(u.e.precision);  // degenerate precision reported as 0
    e_r.push_back(u.e.recall_defined ? std::optional<double>(u.e.recall) : std::nullopt);
    e_f.push_back(u.e.f1_defined ? std::optional<double>(u.e.f1) : std::nullopt);
    z_e.push_back(u.z.z_e);
    z_i.push_back(u.z.z_i);
    z_p.push_back(u.z.z_p);
  }
  s.e_f = summarize(e_f);
  s.e_p = summarize(e_p);
  s.e_r = summarize(e_r);
  s.z_e = summarize(z_e);
  s.z_i = summarize(z_i);
  s.z_p = summarize(z_p);
  return s;
}

UnitScores score_task(const ScoringTask& task, const ScoreOptions& options) {
  const Alignment alignment = align(task.gold, task.hyp);
  const DeletionLabels labels = deletion_labels(alignment);

  UnitScores scores;
  scores.unit_id = task.unit_id;

  if (options.exclude_punct_from_e) {
    std::vector<TokenTag> scoped_tags;
    DeletionLabels scoped;
    scoped.insertions = labels.insertions;
    for (std::size_t i = 0; i < task.gold.size(); ++i) {
      if (task.gold[i].is_punct) continue;
      scoped_tags.push_back(task.tags[i]);
      scoped.deleted.push_back(labels.deleted[i]);
    }
    scores.e = e_scores(scoped_tags, scoped, options);
  } else {
    scores.e = e_scores(task.tags, labels, options);
  }

  std::vector<ZScores> z_parts;
  std::size_t offset = 0;
  for (const ParseTree* tree : task.trees) {
    DeletionLabels slice;
    slice.deleted.assign(labels.deleted.begin() + static_cast<std::ptrdiff_t>(offset),
                         labels.deleted.begin() +
                             static_cast<std::ptrdiff_t>(offset + tree->span_width()));
    z_parts.push_back(z_scores(*tree, slice, options));
    offset += tree->span_width();
  }
  if (offset != task.gold.size()) {
    throw LengthMismatch("score_task: trees do not cover the gold sequence");
  }
  scores.z = merge_z(z_parts);
  return scores;
}

std::vector<UnitScores> score_tasks_serial(const std::vector<ScoringTask>& tasks,
                                           const ScoreOptions& options) {
  std::vector<UnitScores> out(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) out[i] = score_task(tasks[i], options);
  return out;
}

std::vector<UnitScores> score_tasks(const std::vector<ScoringTask>& tasks,
                                    const ScoreOptions& options) {
  std::vector<UnitScores> out(tasks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(tasks.size()); ++i) {
    out[static_cast<std::size_t>(i)] = score_task(tasks[static_cast<std::size_t>(i)], options);
  }
  return out;
}

}  // namespace dres
