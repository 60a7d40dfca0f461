#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dres/alignment.hpp"
#include "dres/extraction.hpp"
#include "dres/treebank.hpp"

namespace dres {

// Word-level scores. Positive class = disfluent token, positive
// prediction = deleted. Percentages in [0,100].
struct EScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_defined = true;  // false when no deletions were made
  bool recall_defined = true;     // false when no disfluent tokens in scope
  bool f1_defined = true;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// Per-category fraction of disfluent nodes whose whole terminal span was
// deleted. UNDEFINED (nullopt) when a category has no nodes.
struct ZScores {
  std::optional<double> z_e;
  std::optional<double> z_i;
  std::optional<double> z_p;
  std::size_t total_e = 0, removed_e = 0;
  std::size_t total_i = 0, removed_i = 0;
  std::size_t total_p = 0, removed_p = 0;
};

enum class FailureMode { None, OverDeletion, UnderDeletion };

struct MetricSummary {
  double mean = 0.0;
  double std_dev = 0.0;
  std::size_t count = 0;     // units contributing
  std::size_t excluded = 0;  // units with the metric undefined
};

// Summaries keyed in the report's column order: e_f, e_p, e_r, z_e, z_i, z_p.
struct Summary {
  MetricSummary e_f, e_p, e_r, z_e, z_i, z_p;
  std::size_t units = 0;
};

struct ScoreOptions {
  // Exclude punctuation-only tokens from E-score counts (Z-score
  // full-removal checks always consider the whole span unless
  // z_ignore_punct is set).
  bool exclude_punct_from_e = true;
  bool z_ignore_punct = false;
};

struct LengthMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

EScores e_scores(const std::vector<TokenTag>& tags, const DeletionLabels& labels,
                 const ScoreOptions& options = {});

ZScores z_scores(const ParseTree& tree, const DeletionLabels& labels,
                 const ScoreOptions& options = {});

struct FailureThresholds {
  double gap = 40.0;
  double high = 80.0;
};

FailureMode classify_failure(const EScores& e, const FailureThresholds& thresholds = {});

// Per-unit scores for one evaluation unit; e and z carry raw counts so
// units can be merged (segments of one conversation into one unit).
struct UnitScores {
  std::string unit_id;
  EScores e;
  ZScores z;
};

EScores merge_e(const std::vector<EScores>& parts);
ZScores merge_z(const std::vector<ZScores>& parts);

Summary aggregate(const std::vector<UnitScores>& per_unit);

// One evaluation unit ready for scoring: gold tokens/tags with their
// source trees, plus the hypothesis token sequence.
struct ScoringTask {
  std::string unit_id;
  std::vector<Token> gold;
  std::vector<TokenTag> tags;
  // Trees covering consecutive slices of `gold`, in order.
  std::vector<const ParseTree*> trees;
  std::vector<std::string> hyp;
};

UnitScores score_task(const ScoringTask& task, const ScoreOptions& options = {});

// Scores every task. The parallel variant uses OpenMP when available and
// returns results in task order; the serial variant is the reference.
std::vector<UnitScores> score_tasks_serial(const std::vector<ScoringTask>& tasks,
                                           const ScoreOptions& options = {});
std::vector<UnitScores> score_tasks(const std::vector<ScoringTask>& tasks,
                                    const ScoreOptions& options = {});

}  // namespace dres
