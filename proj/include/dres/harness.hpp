#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dres/extraction.hpp"
#include "dres/scoring.hpp"

namespace dres {

enum class Condition { Full, Segmented };

struct EvalConfig {
  std::string model_id = "mock-oracle";
  Condition condition = Condition::Segmented;
  int shots = 0;
  double temperature = 0.0;
  std::size_t max_output_tokens = 0;  // 0 = 2x input token estimate
  std::uint64_t exemplar_seed = 0;
  std::string cache_dir;              // empty = caching disabled
  std::size_t concurrency = 1;
  std::size_t segment_size = 1;       // utterances per segment (condition s)
  int max_retries = 3;
  std::string instruction =
      "Remove the disfluencies from the following transcript. "
      "Output only the cleaned transcript, nothing else.";
  std::string think_open = "<think>";
  std::string think_close = "</think>";
};

struct CompletionRequest {
  std::string model_id;
  std::string prompt;
  double temperature = 0.0;
  std::size_t max_tokens = 0;
};

struct ModelBackend {
  virtual ~ModelBackend() = default;
  virtual std::string name() const = 0;
  // Returns the raw model text; throws on unrecoverable failure.
  virtual std::string complete(const CompletionRequest& request) = 0;
  virtual bool deterministic() const { return false; }
};

// Built-in mock backends:
//   mock-oracle  returns the unit's fluent text
//   mock-echo    returns the unit's disfluent input unchanged
//   mock-empty   returns the empty string
// Mocks resolve the expected text from the trailing transcript line of the
// prompt, so they run through the exact same pipeline as real backends.
std::unique_ptr<ModelBackend> make_mock_backend(const std::string& model_id,
                                                const Corpus& corpus,
                                                const EvalConfig& config);

struct HttpBackendOptions {
  std::string base_url;                  // e.g. http://localhost:8000
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "DRES_API_KEY";
  int timeout_seconds = 120;
};

// Chat-completion-style HTTP JSON backend with exponential-backoff retry.
std::unique_ptr<ModelBackend> make_http_backend(const HttpBackendOptions& options,
                                                int max_retries);

// One prompt-sized chunk of a conversation.
struct EvalUnit {
  std::string id;  // "<conversation>/<segment ordinal>"
  std::string conversation;
  std::vector<std::size_t> utterance_indices;  // into Corpus::utterances
};

std::vector<EvalUnit> segment(const Corpus& corpus, const std::string& conversation,
                              Condition condition, std::size_t segment_size);

std::string unit_input_text(const Corpus& corpus, const EvalUnit& unit);
std::string unit_fluent_text(const Corpus& corpus, const EvalUnit& unit);

struct Exemplar {
  std::string id;
  std::string disfluent_text;
  std::string fluent_text;
};

// Train-split utterances with at least one disfluent token, in a
// deterministic seed-shuffled order.
std::vector<Exemplar> select_exemplars(const Corpus& corpus, std::uint64_t seed);

std::string build_prompt(const std::string& instruction, const std::string& input_text,
                         const std::vector<Exemplar>& exemplars, int shots);

// Strips reasoning blocks, fenced code blocks, and leading
// "Cleaned transcript:"-style labels; trims whitespace.
std::string extract_transcript(const std::string& raw, const std::string& think_open,
                               const std::string& think_close);

std::vector<std::string> split_tokens(const std::string& text);

struct ModelOutput {
  std::string unit_id;
  std::string fingerprint;
  std::string raw;
  std::string transcript;
  double latency_ms = 0.0;
  bool from_cache = false;
  bool failed = false;
  std::string error;
};

std::string fingerprint(const CompletionRequest& request);

struct RunResult {
  std::vector<ModelOutput> outputs;  // one per test-split EvalUnit, unit order
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t failures = 0;
};

RunResult run_eval(const Corpus& corpus, ModelBackend& backend, const EvalConfig& config);

// Scoring tasks for the units of a run (skipping failed units); segments
// are later merged per conversation for aggregation.
std::vector<ScoringTask> scoring_tasks(const Corpus& corpus, const EvalConfig& config,
                                       const std::vector<ModelOutput>& outputs);

// Per-conversation scores: segment units of one conversation are merged
// into a single evaluation unit so f and s summaries are comparable.
std::vector<UnitScores> merge_by_conversation(const std::vector<UnitScores>& per_segment);

}  // namespace dres
