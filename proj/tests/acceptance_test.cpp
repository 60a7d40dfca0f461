// Acceptance suite: one pass/fail line per criterion.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "dres/extraction.hpp"
#include "dres/harness.hpp"
#include "dres/report.hpp"
#include "dres/scoring.hpp"

using namespace dres;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void verdict(int criterion, bool ok, const std::string& label, const std::string& detail = "") {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": " << label;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << "\n";
  if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Seed-fixed synthetic corpus built through the injector.
Corpus synthetic_corpus(std::size_t n_utterances, std::uint64_t seed,
                        InjectionRates rates = {0.15, 0.3, 0.15}) {
  // Disjoint from filler/parenthetical words so a fluent hypothesis can
  // never be mistaken for injected material.
  static const std::vector<std::string> vocab = {
      "think", "agree", "went", "home", "the", "dog", "really",
      "today", "works", "fine", "maybe", "blue", "garden", "quickly"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len_dist(3, 10);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);

  std::vector<std::pair<std::string, std::vector<ParseTree>>> by_conv;
  std::size_t made = 0;
  std::size_t conv_no = 0;
  while (made < n_utterances) {
    std::vector<ParseTree> trees;
    for (std::size_t u = 0; u < 10 && made < n_utterances; ++u, ++made) {
      std::vector<Token> fluent;
      for (std::size_t i = 0, len = len_dist(rng); i < len; ++i) {
        fluent.push_back({vocab[word(rng)], i, false});
      }
      trees.push_back(inject_disfluencies(fluent, rng(), rates, "tmp").tree);
    }
    by_conv.push_back({"synth" + std::to_string(conv_no++), std::move(trees)});
  }
  CorpusOptions options;
  options.drop_none = false;
  options.split_seed = seed;
  return build_corpus(by_conv, options);
}

struct PipelineResult {
  std::string corpus_jsonl;
  std::string scores_jsonl;
  std::string scores_csv;
  std::string report_md;
  std::string report_csv;
  std::vector<UnitScores> per_conversation;
  std::size_t failures = 0;
};

PipelineResult run_pipeline(const Corpus& corpus, const std::string& model,
                            Condition condition, int shots) {
  EvalConfig config;
  config.model_id = model;
  config.condition = condition;
  config.shots = shots;
  config.exemplar_seed = 17;
  auto backend = make_mock_backend(model, corpus, config);
  const auto run = run_eval(corpus, *backend, config);
  const auto tasks = scoring_tasks(corpus, config, run.outputs);
  const auto per_segment = score_tasks(tasks);
  PipelineResult result;
  result.per_conversation = merge_by_conversation(per_segment);
  result.failures = run.failures;
  result.corpus_jsonl = corpus_to_jsonl(corpus);
  result.scores_jsonl = unit_scores_to_jsonl(result.per_conversation);
  result.scores_csv = unit_scores_to_csv(result.per_conversation);

  ReportCell cell;
  cell.model_id = model;
  cell.condition = condition;
  cell.shots = shots;
  cell.summary = aggregate(result.per_conversation);
  EScores mean;
  mean.precision = cell.summary.e_p.mean;
  mean.recall = cell.summary.e_r.mean;
  cell.failure = classify_failure(mean);
  result.report_md = render_markdown({cell});
  result.report_csv = render_csv({cell});
  return result;
}

void criterion_1_oracle_identity(const Corpus& corpus) {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (auto cond : {Condition::Segmented, Condition::Full}) {
    const auto result = run_pipeline(corpus, "mock-oracle", cond, 1);
    if (result.failures != 0) ok = false;
    for (const auto& u : result.per_conversation) {
      if (u.e.precision != 100.0 || u.e.recall != 100.0 || u.e.f1 != 100.0) ok = false;
      for (const auto& z : {u.z.z_e, u.z.z_i, u.z.z_p}) {
        if (z.has_value() && *z != 100.0) ok = false;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 10.0) ok = false;
  std::ostringstream d;
  d << "runtime " << elapsed << "s";
  verdict(1, ok, "mock-oracle yields E_P=E_R=E_F=100.00 and all defined Z=100.00", d.str());
}

void criterion_2_null_edit(const Corpus& corpus) {
  bool ok = true;
  const auto result = run_pipeline(corpus, "mock-echo", Condition::Segmented, 0);
  for (const auto& u : result.per_conversation) {
    if (u.e.recall_defined && u.e.recall != 0.0) ok = false;
    for (const auto& z : {u.z.z_e, u.z.z_i, u.z.z_p}) {
      if (z.has_value() && *z != 0.0) ok = false;
    }
  }
  verdict(2, ok, "mock-echo yields E_R=0.00 and all defined Z=0.00");
}

void criterion_3_full_deletion(const Corpus& corpus) {
  bool ok = true;
  EvalConfig config;
  config.model_id = "mock-empty";
  config.condition = Condition::Segmented;
  auto backend = make_mock_backend(config.model_id, corpus, config);
  const auto run = run_eval(corpus, *backend, config);
  const auto tasks = scoring_tasks(corpus, config, run.outputs);
  const auto per_segment = score_tasks_serial(tasks);

  // Hand-computed per-unit expectation: disfluent fraction of the unit's
  // (non-punctuation) tokens, computed straight from the task tags.
  std::size_t checked = 0;
  for (std::size_t i = 0; i < tasks.size() && checked < 20; i += 3, ++checked) {
    const auto& task = tasks[i];
    const auto& scores = per_segment[i];
    std::size_t disfluent = 0, total = 0;
    for (std::size_t t = 0; t < task.tags.size(); ++t) {
      if (task.gold[t].is_punct) continue;
      ++total;
      disfluent += task.tags[t] != TokenTag::Fluent;
    }
    if (total == 0) continue;
    const double expected_p = 100.0 * static_cast<double>(disfluent) / static_cast<double>(total);
    if (std::abs(scores.e.precision - expected_p) > 0.01) ok = false;
    if (disfluent > 0 && scores.e.recall != 100.0) ok = false;
  }
  if (checked < 20) ok = false;
  verdict(3, ok, "mock-empty yields E_R=100.00 and E_P = disfluent-token fraction (+-0.01, 20 units)");
}

// Independent Gestalt reference: naive cubic longest-block search with
// the documented tie-break, recursing on both remainders.
struct RefBlock {
  std::size_t g, h, len;
};

bool ref_eq(const std::string& a, const std::string& b) {
  const std::string na = normalize_token(a);
  const std::string nb = normalize_token(b);
  if (na.empty() || nb.empty()) return a == b;
  return na == nb;
}

void ref_align(const std::vector<std::string>& gold, const std::vector<std::string>& hyp,
               std::size_t glo, std::size_t ghi, std::size_t hlo, std::size_t hhi,
               std::vector<RefBlock>& out) {
  if (glo >= ghi || hlo >= hhi) return;
  RefBlock best{glo, hlo, 0};
  for (std::size_t g = glo; g < ghi; ++g) {
    for (std::size_t h = hlo; h < hhi; ++h) {
      std::size_t len = 0;
      while (g + len < ghi && h + len < hhi && ref_eq(gold[g + len], hyp[h + len])) ++len;
      if (len > best.len) best = {g, h, len};
    }
  }
  if (best.len == 0) return;
  ref_align(gold, hyp, glo, best.g, hlo, best.h, out);
  out.push_back(best);
  ref_align(gold, hyp, best.g + best.len, ghi, best.h + best.len, hhi, out);
}

bool check_pair(const std::vector<std::string>& gold, const std::vector<std::string>& hyp) {
  const auto a = align(gold, hyp);
  std::vector<RefBlock> ref;
  ref_align(gold, hyp, 0, gold.size(), 0, hyp.size(), ref);
  if (a.blocks.size() != ref.size()) return false;
  std::size_t gprev = 0, hprev = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto& b = a.blocks[i];
    if (b.gold_start != ref[i].g || b.hyp_start != ref[i].h || b.length != ref[i].len) return false;
    if (b.length == 0 || b.gold_start < gprev || b.hyp_start < hprev) return false;
    gprev = b.gold_start + b.length;
    hprev = b.hyp_start + b.length;
  }
  return true;
}

void criterion_4_alignment_oracle() {
  const auto t0 = Clock::now();
  const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  std::size_t pairs = 0, violations = 0;

  // Exhaustive: all pairs up to length 4 over a 2-symbol alphabet.
  std::vector<std::vector<std::string>> short_seqs;
  for (std::size_t len = 0; len <= 4; ++len) {
    for (std::size_t code = 0; code < (1u << len); ++code) {
      std::vector<std::string> seq;
      for (std::size_t i = 0; i < len; ++i) seq.push_back(alphabet[(code >> i) & 1]);
      short_seqs.push_back(std::move(seq));
    }
  }
  for (const auto& gold : short_seqs) {
    for (const auto& hyp : short_seqs) {
      ++pairs;
      violations += !check_pair(gold, hyp);
    }
  }

  // Randomized: pairs up to length 8 over the full 4-symbol alphabet.
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> len_dist(0, 8);
  std::uniform_int_distribution<std::size_t> sym(0, alphabet.size() - 1);
  while (pairs < 110000) {
    std::vector<std::string> gold, hyp;
    for (std::size_t i = 0, n = len_dist(rng); i < n; ++i) gold.push_back(alphabet[sym(rng)]);
    for (std::size_t i = 0, n = len_dist(rng); i < n; ++i) hyp.push_back(alphabet[sym(rng)]);
    ++pairs;
    violations += !check_pair(gold, hyp);
  }

  const double elapsed = seconds_since(t0);
  std::ostringstream d;
  d << pairs << " pairs, " << violations << " violations, runtime " << elapsed << "s";
  verdict(4, violations == 0 && pairs >= 100000 && elapsed < 60.0,
          "align() matches the Gestalt reference recursion with documented tie-break", d.str());
}

void ancestor_oracle_rec(const ParseTree& node, TokenTag inherited, std::vector<TokenTag>& out) {
  TokenTag here = inherited;
  if (here == TokenTag::Fluent) {
    switch (classify_node(node.label)) {
      case NodeClass::Edited: here = TokenTag::E; break;
      case NodeClass::Intj: here = TokenTag::I; break;
      case NodeClass::Prn: here = TokenTag::P; break;
      case NodeClass::Fluent: break;
    }
  }
  if (node.is_terminal()) {
    out.push_back(here);
    return;
  }
  for (const auto& child : node.children) ancestor_oracle_rec(child, here, out);
}

void criterion_5_extraction_oracle() {
  static const std::vector<std::string> vocab = {"i", "think", "the", "dog", "ran", "home"};
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> len_dist(1, 9);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  std::uniform_real_distribution<double> rate(0.0, 0.7);

  std::size_t violations = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<Token> fluent;
    for (std::size_t i = 0, len = len_dist(rng); i < len; ++i) {
      fluent.push_back({vocab[word(rng)], i, false});
    }
    const InjectionRates rates{rate(rng), rate(rng), rate(rng)};
    const auto tuple = inject_disfluencies(fluent, rng(), rates, "x:0");

    std::vector<TokenTag> oracle;
    ancestor_oracle_rec(tuple.tree, TokenTag::Fluent, oracle);
    if (oracle != tuple.tags) ++violations;

    // Injector round-trip.
    const auto re = extract_tuple(tuple.tree, tuple.id);
    if (re.tags != tuple.tags || re.disfluent.size() != tuple.disfluent.size() ||
        re.fluent.size() != tuple.fluent.size()) {
      ++violations;
    } else {
      for (std::size_t i = 0; i < re.fluent.size(); ++i) {
        if (re.fluent[i].surface != fluent[i].surface) ++violations;
      }
    }
  }
  std::ostringstream d;
  d << "1000 trees, " << violations << " violations";
  verdict(5, violations == 0, "extract_tuple matches first-disfluent-ancestor oracle; injector round-trips",
          d.str());
}

void criterion_6_failure_modes() {
  EScores over;
  over.precision = 18.02;
  over.recall = 99.94;
  EScores under;
  under.precision = 86.02;
  under.recall = 5.91;
  const bool ok = classify_failure(over) == FailureMode::OverDeletion &&
                  classify_failure(under) == FailureMode::UnderDeletion;
  verdict(6, ok, "(18.02,99.94)->over-deletion and (86.02,5.91)->under-deletion at default thresholds");
}

void criterion_7_metric_identities() {
  static const std::vector<std::string> vocab = {"i", "think", "the", "dog", "ran"};
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<std::size_t> len_dist(1, 8);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  std::uniform_real_distribution<double> rate(0.0, 0.8);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::size_t violations = 0;
  for (int iter = 0; iter < 10000; ++iter) {
    std::vector<Token> fluent;
    for (std::size_t i = 0, len = len_dist(rng); i < len; ++i) {
      fluent.push_back({vocab[word(rng)], i, false});
    }
    const auto tuple =
        inject_disfluencies(fluent, rng(), {rate(rng), rate(rng), rate(rng)}, "x:0");

    // Count identity.
    std::size_t tagged = 0;
    for (auto tag : tuple.tags) tagged += tag != TokenTag::Fluent;
    if (tagged != tuple.disfluent.size() - tuple.fluent.size()) ++violations;

    // Random hypothesis: keep each gold token with some probability,
    // occasionally append noise.
    ScoringTask task;
    task.unit_id = "x/0";
    task.gold = tuple.disfluent;
    task.tags = tuple.tags;
    task.trees = {&tuple.tree};
    const double keep = coin(rng);
    for (const auto& tok : tuple.disfluent) {
      if (coin(rng) < keep) task.hyp.push_back(tok.surface);
    }
    if (coin(rng) < 0.1) task.hyp.push_back("zzz");

    const auto scores = score_task(task);
    // F1 bounds.
    if (scores.e.f1_defined && scores.e.precision_defined) {
      const double lo = std::min(scores.e.precision, scores.e.recall);
      const double hi = std::max(scores.e.precision, scores.e.recall);
      if (scores.e.f1 < lo - 1e-9 || scores.e.f1 > hi + 1e-9) ++violations;
    }
    // Z/E consistency: all defined Z at 100 forces E_R=100.
    const bool any_z = scores.z.z_e || scores.z.z_i || scores.z.z_p;
    const bool all_z_100 = (!scores.z.z_e || *scores.z.z_e == 100.0) &&
                           (!scores.z.z_i || *scores.z.z_i == 100.0) &&
                           (!scores.z.z_p || *scores.z.z_p == 100.0);
    if (any_z && all_z_100 && scores.e.recall_defined && scores.e.recall != 100.0) ++violations;
  }
  std::ostringstream d;
  d << "10000 instances, " << violations << " violations";
  verdict(7, violations == 0, "F1 bounds, Z/E consistency, and count identity hold", d.str());
}

void criterion_8_determinism(const Corpus& corpus) {
  const auto a = run_pipeline(corpus, "mock-echo", Condition::Segmented, 1);
  const auto b = run_pipeline(corpus, "mock-echo", Condition::Segmented, 1);
  const bool ok = a.corpus_jsonl == b.corpus_jsonl && a.scores_jsonl == b.scores_jsonl &&
                  a.scores_csv == b.scores_csv && a.report_md == b.report_md &&
                  a.report_csv == b.report_csv;
  verdict(8, ok, "two pipeline runs produce byte-identical JSONL, CSV, and markdown");
}

void criterion_9_segmentation_faithfulness(const Corpus& corpus) {
  bool ok = true;
  for (const auto& [conv, _] : corpus.conversations) {
    const auto full = segment(corpus, conv, Condition::Full, 1);
    for (std::size_t size : {std::size_t{1}, std::size_t{3}}) {
      const auto segs = segment(corpus, conv, Condition::Segmented, size);
      std::string joined;
      for (const auto& unit : segs) {
        if (!joined.empty()) joined.push_back(' ');
        joined += unit_input_text(corpus, unit);
      }
      if (joined != unit_input_text(corpus, full[0])) ok = false;
    }
  }
  verdict(9, ok, "concatenated s-condition inputs equal the f-condition input per conversation");
}

void criterion_10_report_format() {
  ReportCell cell;
  cell.model_id = "mock-oracle";
  cell.condition = Condition::Segmented;
  cell.shots = 1;
  cell.summary.e_f = {82.3812, 4.1771, 10, 0};
  cell.summary.e_p = {83.6141, 6.0269, 10, 0};
  cell.summary.e_r = {81.5320, 5.1681, 10, 0};
  cell.summary.z_e = {83.7661, 9.4112, 10, 0};
  cell.summary.z_i = {79.7441, 6.9381, 10, 0};
  cell.summary.z_p = {79.6542, 19.4012, 10, 0};
  cell.summary.units = 10;
  const auto md = render_markdown({cell});

  bool ok = md.find("82.38{4.18}") != std::string::npos;
  std::ifstream golden(std::string(DRES_GOLDEN_DIR) + "/report_cell.md", std::ios::binary);
  if (!golden) {
    ok = false;
  } else {
    std::ostringstream buf;
    buf << golden.rdbuf();
    if (buf.str() != md) ok = false;
  }
  verdict(10, ok, "rendered cells match the mean{std} two-decimal golden file");
}

}  // namespace

int main() {
  const auto corpus = synthetic_corpus(200, 4242);

  criterion_1_oracle_identity(corpus);
  criterion_2_null_edit(corpus);
  criterion_3_full_deletion(corpus);
  criterion_4_alignment_oracle();
  criterion_5_extraction_oracle();
  criterion_6_failure_modes();
  criterion_7_metric_identities();
  criterion_8_determinism(corpus);
  criterion_9_segmentation_faithfulness(corpus);
  criterion_10_report_format();

  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(g_failures))
            << "\n";
  return g_failures == 0 ? 0 : 1;
}
