// dres: build Switchboard-style disfluency corpora, run model evaluations,
// and render k-shot score reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dres/extraction.hpp"
#include "dres/harness.hpp"
#include "dres/report.hpp"
#include "dres/scoring.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitInputError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

dres::Corpus load_corpus(const std::string& path) {
  return dres::corpus_from_jsonl(read_file(path));
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == '/' || c == ':' || c == ' ') c = '-';
  }
  return s;
}

dres::Condition parse_condition(const std::string& s) {
  if (s == "f") return dres::Condition::Full;
  if (s == "s") return dres::Condition::Segmented;
  throw CLI::ValidationError("condition must be 'f' or 's', got '" + s + "'");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct CellFile {
  std::string model;
  dres::Condition condition = dres::Condition::Full;
  int shots = 0;
  std::size_t segment_size = 1;
  std::vector<dres::ModelOutput> outputs;
};

CellFile load_cell(const std::string& path) {
  CellFile cell;
  std::istringstream in(read_file(path));
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto rec = json::parse(line);
    if (first) {
      cell.model = rec.at("model").get<std::string>();
      cell.condition = parse_condition(rec.at("condition").get<std::string>());
      cell.shots = rec.at("k").get<int>();
      cell.segment_size = rec.value("segment_size", std::size_t{1});
      first = false;
    }
    dres::ModelOutput out;
    out.unit_id = rec.at("unit").get<std::string>();
    out.fingerprint = rec.value("fingerprint", "");
    out.raw = rec.value("raw", "");
    out.transcript = rec.value("transcript", "");
    out.failed = rec.value("failed", false);
    out.error = rec.value("error", "");
    cell.outputs.push_back(std::move(out));
  }
  if (first) throw std::runtime_error(path + ": no output records");
  return cell;
}

std::string cell_to_jsonl(const CellFile& cell) {
  std::ostringstream out;
  for (const auto& o : cell.outputs) {
    ordered_json rec;
    rec["model"] = cell.model;
    rec["condition"] = dres::condition_name(cell.condition);
    rec["k"] = cell.shots;
    rec["segment_size"] = cell.segment_size;
    rec["unit"] = o.unit_id;
    rec["fingerprint"] = o.fingerprint;
    rec["raw"] = o.raw;
    rec["transcript"] = o.transcript;
    rec["failed"] = o.failed;
    if (o.failed) rec["error"] = o.error;
    out << rec.dump() << '\n';
  }
  return out.str();
}

struct ScoredCell {
  dres::ReportCell report;
  std::vector<dres::UnitScores> per_conversation;
};

ScoredCell score_cell(const dres::Corpus& corpus, const CellFile& cell,
                      const dres::ScoreOptions& score_options,
                      const dres::FailureThresholds& thresholds) {
  dres::EvalConfig config;
  config.model_id = cell.model;
  config.condition = cell.condition;
  config.shots = cell.shots;
  config.segment_size = cell.segment_size;

  const auto tasks = dres::scoring_tasks(corpus, config, cell.outputs);
  const auto per_segment = dres::score_tasks(tasks, score_options);
  ScoredCell scored;
  scored.per_conversation = dres::merge_by_conversation(per_segment);

  scored.report.model_id = cell.model;
  scored.report.condition = cell.condition;
  scored.report.shots = cell.shots;
  for (const auto& o : cell.outputs) scored.report.failed_units += o.failed;
  if (!scored.per_conversation.empty()) {
    scored.report.summary = dres::aggregate(scored.per_conversation);
    dres::EScores cell_mean;
    cell_mean.precision = scored.report.summary.e_p.mean;
    cell_mean.recall = scored.report.summary.e_r.mean;
    scored.report.failure = dres::classify_failure(cell_mean, thresholds);
  }
  return scored;
}

// ---- subcommands -----------------------------------------------------------

int cmd_build_corpus(const std::vector<std::string>& inputs, const std::string& out_path,
                     const dres::CorpusOptions& options) {
  std::vector<std::pair<std::string, std::vector<dres::ParseTree>>> by_conv;
  for (const auto& path : inputs) {
    try {
      by_conv.push_back({fs::path(path).stem().string(), dres::parse_trees(read_file(path))});
    } catch (const dres::ParseError& e) {
      std::cerr << path << ":" << e.line << ":" << e.column << ": " << e.what() << "\n";
      return kExitInputError;
    } catch (const std::exception& e) {
      std::cerr << path << ": " << e.what() << "\n";
      return kExitInputError;
    }
  }
  const auto corpus = dres::build_corpus(by_conv, options);
  write_file(out_path, dres::corpus_to_jsonl(corpus));
  std::cout << "wrote " << corpus.utterances.size() << " utterances ("
            << corpus.train_conversations.size() << " train / "
            << corpus.test_conversations.size() << " test conversations) to "
            << out_path << "\n";
  return kExitOk;
}

int cmd_synth(std::size_t n, std::uint64_t seed, const dres::InjectionRates& rates,
              std::size_t per_conversation, double train_ratio, const std::string& out_path) {
  // Disjoint from the injected filler/parenthetical words, and no word's
  // cut-off form collides with another word, so a perfect hypothesis is
  // never confusable with injected material.
  static const std::vector<std::string> vocab = {
      "think", "agree", "went", "home", "the", "dog", "car", "really",
      "maybe", "today", "yesterday", "works", "fine", "garden", "quickly"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len_dist(3, 12);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);

  std::vector<std::pair<std::string, std::vector<dres::ParseTree>>> by_conv;
  std::size_t made = 0;
  std::size_t conv_no = 0;
  while (made < n) {
    std::vector<dres::ParseTree> trees;
    for (std::size_t u = 0; u < per_conversation && made < n; ++u, ++made) {
      std::vector<dres::Token> fluent;
      for (std::size_t i = 0, len = len_dist(rng); i < len; ++i) {
        fluent.push_back({vocab[word(rng)], i, false});
      }
      auto tuple = dres::inject_disfluencies(fluent, rng(), rates, "tmp");
      trees.push_back(std::move(tuple.tree));
    }
    char name[32];
    std::snprintf(name, sizeof(name), "synth%04zu", conv_no++);
    by_conv.push_back({name, std::move(trees)});
  }

  dres::CorpusOptions options;
  options.drop_none = false;
  options.split_seed = seed;
  options.train_ratio = train_ratio;
  const auto corpus = dres::build_corpus(by_conv, options);
  write_file(out_path, dres::corpus_to_jsonl(corpus));
  std::cout << "wrote " << corpus.utterances.size() << " synthetic utterances to "
            << out_path << "\n";
  return kExitOk;
}

int cmd_run(const std::string& corpus_path, const std::string& out_dir,
            dres::EvalConfig config, const std::vector<std::string>& conditions,
            const std::vector<int>& shot_list, const std::string& base_url) {
  const auto corpus = load_corpus(corpus_path);

  std::unique_ptr<dres::ModelBackend> backend;
  if (!base_url.empty()) {
    dres::HttpBackendOptions http;
    http.base_url = base_url;
    backend = dres::make_http_backend(http, config.max_retries);
  } else {
    backend = dres::make_mock_backend(config.model_id, corpus, config);
  }

  std::size_t total_failures = 0;
  for (const auto& cond : conditions) {
    config.condition = parse_condition(cond);
    for (int k : shot_list) {
      config.shots = k;
      const auto result = dres::run_eval(corpus, *backend, config);
      total_failures += result.failures;

      CellFile cell;
      cell.model = config.model_id;
      cell.condition = config.condition;
      cell.shots = k;
      cell.segment_size = config.segment_size;
      cell.outputs = result.outputs;
      const auto path = (fs::path(out_dir) /
                         (sanitize(config.model_id) + "__" + cond + "__k" +
                          std::to_string(k) + ".jsonl"))
                            .string();
      write_file(path, cell_to_jsonl(cell));
      std::cout << cond << ",k=" << k << ": " << result.outputs.size() << " units, "
                << result.backend_calls << " calls, " << result.cache_hits << " cache hits, "
                << result.failures << " failures -> " << path << "\n";
    }
  }
  return total_failures == 0 ? kExitOk : kExitPartial;
}

int cmd_score(const std::string& corpus_path, const std::string& outputs_path,
              const std::string& out_jsonl, const std::string& out_csv,
              const dres::ScoreOptions& score_options,
              const dres::FailureThresholds& thresholds) {
  const auto corpus = load_corpus(corpus_path);
  const auto cell = load_cell(outputs_path);
  const auto scored = score_cell(corpus, cell, score_options, thresholds);
  if (!out_jsonl.empty()) write_file(out_jsonl, dres::unit_scores_to_jsonl(scored.per_conversation));
  if (!out_csv.empty()) write_file(out_csv, dres::unit_scores_to_csv(scored.per_conversation));
  std::cout << cell.model << " " << dres::condition_name(cell.condition) << ",k=" << cell.shots
            << ": e_f=" << dres::format_cell(scored.report.summary.e_f)
            << " e_p=" << dres::format_cell(scored.report.summary.e_p)
            << " e_r=" << dres::format_cell(scored.report.summary.e_r)
            << " failure=" << dres::failure_name(scored.report.failure) << "\n";
  return scored.report.failed_units == 0 ? kExitOk : kExitPartial;
}

int cmd_report(const std::string& corpus_path, const std::string& outputs_dir,
               const std::string& out_md, const std::string& out_csv,
               const dres::ScoreOptions& score_options,
               const dres::FailureThresholds& thresholds) {
  const auto corpus = load_corpus(corpus_path);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(outputs_dir)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path().string());
  }
  if (files.empty()) {
    std::cerr << outputs_dir << ": no .jsonl output files\n";
    return kExitInputError;
  }
  std::sort(files.begin(), files.end());

  std::vector<dres::ReportCell> cells;
  std::size_t failed_units = 0;
  for (const auto& file : files) {
    const auto cell = load_cell(file);
    auto scored = score_cell(corpus, cell, score_options, thresholds);
    failed_units += scored.report.failed_units;
    cells.push_back(std::move(scored.report));
  }
  write_file(out_md, dres::render_markdown(cells));
  write_file(out_csv, dres::render_csv(cells));
  std::cout << "wrote " << cells.size() << " cells to " << out_md << " and " << out_csv << "\n";
  return failed_units == 0 ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DRES-style disfluency removal evaluation toolkit"};
  app.set_config("--config", "", "key=value config file overriding flags");
  app.require_subcommand(1);

  // build-corpus
  auto* build = app.add_subcommand("build-corpus", "Extract tuples from .mrg parse files");
  std::vector<std::string> mrg_paths;
  std::string corpus_out = "corpus.jsonl";
  dres::CorpusOptions corpus_options;
  build->add_option("inputs", mrg_paths, "input .mrg files")->required()->expected(-1);
  build->add_option("--out", corpus_out, "output corpus JSONL");
  build->add_flag("--drop-none,!--keep-none", corpus_options.drop_none,
                  "drop -NONE- trace terminals (default on)");
  build->add_option("--train-ratio", corpus_options.train_ratio)->check(CLI::Range(0.0, 1.0));
  build->add_option("--split-seed", corpus_options.split_seed);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus via the injector");
  std::size_t synth_n = 50;
  std::uint64_t synth_seed = 7;
  std::size_t synth_per_conv = 10;
  double synth_train_ratio = 0.5;
  dres::InjectionRates rates{0.15, 0.25, 0.1};
  std::string synth_out = "synthetic.jsonl";
  synth->add_option("--n", synth_n, "number of utterances")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed);
  synth->add_option("--rate-edited", rates.edited)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--rate-intj", rates.intj)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--rate-prn", rates.prn)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--per-conversation", synth_per_conv)->check(CLI::PositiveNumber);
  synth->add_option("--train-ratio", synth_train_ratio)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--out", synth_out);

  // run
  auto* run = app.add_subcommand("run", "Run a model over the evaluation grid");
  std::string run_corpus, run_out_dir = "outputs", run_conditions = "s", run_shots = "0";
  std::string base_url;
  dres::EvalConfig eval_config;
  run->add_option("--corpus", run_corpus)->required();
  run->add_option("--model", eval_config.model_id,
                  "model id (mock-oracle | mock-echo | mock-empty, or any id with --base-url)");
  run->add_option("--conditions", run_conditions, "comma list of f,s");
  run->add_option("--shots", run_shots, "comma list of k values");
  run->add_option("--out-dir", run_out_dir);
  run->add_option("--base-url", base_url, "chat-completions endpoint base URL");
  run->add_option("--cache-dir", eval_config.cache_dir);
  run->add_option("--seed", eval_config.exemplar_seed, "exemplar shuffle seed");
  run->add_option("--segment-size", eval_config.segment_size)->check(CLI::PositiveNumber);
  run->add_option("--concurrency", eval_config.concurrency)->check(CLI::PositiveNumber);
  run->add_option("--temperature", eval_config.temperature);
  run->add_option("--max-output-tokens", eval_config.max_output_tokens,
                  "0 = 2x input token estimate");
  run->add_option("--max-retries", eval_config.max_retries);
  run->add_option("--instruction-file", [&eval_config](const std::vector<std::string>& v) {
    eval_config.instruction = read_file(v.at(0));
    return true;
  }, "file with the prompt instruction text");
  run->add_option("--think-open", eval_config.think_open);
  run->add_option("--think-close", eval_config.think_close);

  // score
  auto* score = app.add_subcommand("score", "Score one outputs file against the corpus");
  std::string score_corpus, score_outputs, score_jsonl = "scores.jsonl", score_csv = "scores.csv";
  dres::ScoreOptions score_options;
  dres::FailureThresholds thresholds;
  score->add_option("--corpus", score_corpus)->required();
  score->add_option("--outputs", score_outputs)->required();
  score->add_option("--out-jsonl", score_jsonl);
  score->add_option("--out-csv", score_csv);
  score->add_flag("!--include-punct", score_options.exclude_punct_from_e,
                  "include punctuation-only tokens in E-scores");
  score->add_flag("--z-ignore-punct", score_options.z_ignore_punct);
  score->add_option("--gap-threshold", thresholds.gap)->check(CLI::Range(0.0, 100.0));
  score->add_option("--high-threshold", thresholds.high)->check(CLI::Range(0.0, 100.0));

  // report
  auto* report = app.add_subcommand("report", "Render the grid report from an outputs dir");
  std::string report_corpus, report_dir, report_md = "report.md", report_csv = "report.csv";
  report->add_option("--corpus", report_corpus)->required();
  report->add_option("--outputs-dir", report_dir)->required();
  report->add_option("--out-md", report_md);
  report->add_option("--out-csv", report_csv);
  report->add_flag("!--include-punct", score_options.exclude_punct_from_e);
  report->add_option("--gap-threshold", thresholds.gap)->check(CLI::Range(0.0, 100.0));
  report->add_option("--high-threshold", thresholds.high)->check(CLI::Range(0.0, 100.0));

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build_corpus(mrg_paths, corpus_out, corpus_options);
    if (synth->parsed()) {
      return cmd_synth(synth_n, synth_seed, rates, synth_per_conv, synth_train_ratio, synth_out);
    }
    if (run->parsed()) {
      return cmd_run(run_corpus, run_out_dir, eval_config, split_csv(run_conditions),
                     [&] {
                       std::vector<int> shots;
                       for (const auto& s : split_csv(run_shots)) shots.push_back(std::stoi(s));
                       return shots;
                     }(),
                     base_url);
    }
    if (score->parsed()) {
      return cmd_score(score_corpus, score_outputs, score_jsonl, score_csv, score_options,
                       thresholds);
    }
    if (report->parsed()) {
      return cmd_report(report_corpus, report_dir, report_md, report_csv, score_options,
                        thresholds);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}
