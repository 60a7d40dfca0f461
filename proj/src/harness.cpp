#include "dres/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <openssl/evp.h>

#include <httplib.h>
#include <json.hpp>

namespace dres {

namespace {

namespace fs = std::filesystem;

std::string join_surfaces(const std::vector<Token>& tokens) {
  std::string out;
  for (const auto& tok : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += tok.surface;
  }
  return out;
}

constexpr std::string_view kTranscriptPrefix = "Transcript: ";
constexpr std::string_view kCleanedPrefix = "Cleaned:";

// The transcript the prompt asks about: text after the last "Transcript: ".
std::string last_prompt_input(const std::string& prompt) {
  const auto pos = prompt.rfind(kTranscriptPrefix);
  if (pos == std::string::npos) return {};
  const auto begin = pos + kTranscriptPrefix.size();
  auto end = prompt.find('\n', begin);
  if (end == std::string::npos) end = prompt.size();
  return prompt.substr(begin, end - begin);
}

class MockBackend final : public ModelBackend {
 public:
  enum class Kind { Oracle, Echo, Empty };

  MockBackend(Kind kind, std::unordered_map<std::string, std::string> fluent_by_input,
              std::string name)
      : kind_(kind), fluent_by_input_(std::move(fluent_by_input)), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  bool deterministic() const override { return true; }

  std::string complete(const CompletionRequest& request) override {
    const std::string input = last_prompt_input(request.prompt);
    switch (kind_) {
      case Kind::Echo:
        return input;
      case Kind::Empty:
        return "";
      case Kind::Oracle: {
        auto it = fluent_by_input_.find(input);
        if (it == fluent_by_input_.end()) {
          throw std::runtime_error("mock-oracle: prompt input not found in corpus");
        }
        return it->second;
      }
    }
    return "";
  }

 private:
  Kind kind_;
  std::unordered_map<std::string, std::string> fluent_by_input_;
  std::string name_;
};

class HttpBackend final : public ModelBackend {
 public:
  HttpBackend(HttpBackendOptions options, int max_retries)
      : options_(std::move(options)), max_retries_(max_retries) {}

  std::string name() const override { return "http:" + options_.base_url; }

  std::string complete(const CompletionRequest& request) override {
    nlohmann::json body;
    body["model"] = request.model_id;
    body["messages"] = nlohmann::json::array(
        {{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.temperature;
    if (request.max_tokens > 0) body["max_tokens"] = request.max_tokens;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(options_.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    int delay_ms = 250;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        delay_ms = std::min(delay_ms * 2, 8000);
      }
      httplib::Client client(options_.base_url);
      client.set_read_timeout(options_.timeout_seconds, 0);
      client.set_connection_timeout(options_.timeout_seconds, 0);
      auto res = client.Post(options_.path, headers, payload, "application/json");
      if (!res) {
        last_error = "connection error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw std::runtime_error("BackendUnreachable: HTTP " + std::to_string(res->status) +
                                 ": " + res->body);
      }
      const auto json = nlohmann::json::parse(res->body);
      return json.at("choices").at(0).at("message").at("content").get<std::string>();
    }
    throw std::runtime_error("BackendUnreachable: retries exhausted (" + last_error + ")");
  }

 private:
  HttpBackendOptions options_;
  int max_retries_;
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

std::string strip_think_blocks(std::string text, const std::string& open,
                               const std::string& close) {
  if (open.empty() || close.empty()) return text;
  while (true) {
    const auto b = text.find(open);
    if (b == std::string::npos) break;
    const auto e = text.find(close, b + open.size());
    if (e == std::string::npos) {
      text.erase(b);
      break;
    }
    text.erase(b, e + close.size() - b);
  }
  return text;
}

std::string strip_code_fences(const std::string& text) {
  const auto first = text.find("```");
  if (first == std::string::npos) return text;
  auto body_begin = text.find('\n', first);
  if (body_begin == std::string::npos) return text;
  ++body_begin;  // skip fence line (and any language tag on it)
  const auto second = text.find("```", body_begin);
  if (second == std::string::npos) return text;
  return text.substr(body_begin, second - body_begin);
}

std::string strip_leading_label(const std::string& text) {
  static const std::vector<std::string_view> kLabels = {
      "cleaned transcript", "clean transcript", "transcript",
      "cleaned", "output", "answer"};
  const auto colon = text.find(':');
  if (colon == std::string::npos) return text;
  const std::string head = trim(std::string_view(text).substr(0, colon));
  for (auto label : kLabels) {
    if (iequals(head, label)) return text.substr(colon + 1);
  }
  return text;
}

std::string cache_path(const std::string& cache_dir, const std::string& fp) {
  return (fs::path(cache_dir) / (fp + ".json")).string();
}

std::optional<std::string> cache_read(const std::string& cache_dir,
                                      const CompletionRequest& request,
                                      const std::string& fp) {
  const auto path = cache_path(cache_dir, fp);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("CacheCorruption: " + path + ": " + e.what());
  }
  if (doc.value("fingerprint", "") != fp ||
      doc.value("prompt", "") != request.prompt ||
      doc.value("model", "") != request.model_id) {
    throw std::runtime_error("CacheCorruption: " + path + " does not match request");
  }
  return doc.at("raw").get<std::string>();
}

void cache_write(const std::string& cache_dir, const CompletionRequest& request,
                 const std::string& fp, const std::string& raw) {
  fs::create_directories(cache_dir);
  nlohmann::ordered_json doc;
  doc["fingerprint"] = fp;
  doc["model"] = request.model_id;
  doc["temperature"] = request.temperature;
  doc["max_tokens"] = request.max_tokens;
  doc["prompt"] = request.prompt;
  doc["raw"] = raw;
  const auto path = cache_path(cache_dir, fp);
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << doc.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

}  // namespace

std::vector<EvalUnit> segment(const Corpus& corpus, const std::string& conversation,
                              Condition condition, std::size_t segment_size) {
  auto it = corpus.conversations.find(conversation);
  if (it == corpus.conversations.end() || it->second.empty()) {
    throw std::invalid_argument("EmptyInput: unknown or empty conversation " + conversation);
  }
  const auto& indices = it->second;
  std::vector<EvalUnit> units;
  if (condition == Condition::Full) {
    units.push_back({conversation + "/0", conversation, indices});
    return units;
  }
  if (segment_size == 0) segment_size = 1;
  for (std::size_t begin = 0; begin < indices.size(); begin += segment_size) {
    const auto end = std::min(begin + segment_size, indices.size());
    EvalUnit unit;
    unit.id = conversation + "/" + std::to_string(units.size());
    unit.conversation = conversation;
    unit.utterance_indices.assign(indices.begin() + static_cast<std::ptrdiff_t>(begin),
                                  indices.begin() + static_cast<std::ptrdiff_t>(end));
    units.push_back(std::move(unit));
  }
  return units;
}

std::string unit_input_text(const Corpus& corpus, const EvalUnit& unit) {
  std::string out;
  for (auto idx : unit.utterance_indices) {
    if (!out.empty()) out.push_back(' ');
    out += join_surfaces(corpus.utterances[idx].disfluent);
  }
  return out;
}

std::string unit_fluent_text(const Corpus& corpus, const EvalUnit& unit) {
  std::string out;
  for (auto idx : unit.utterance_indices) {
    const auto text = join_surfaces(corpus.utterances[idx].fluent);
    if (text.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += text;
  }
  return out;
}

std::vector<Exemplar> select_exemplars(const Corpus& corpus, std::uint64_t seed) {
  std::vector<Exemplar> exemplars;
  for (const auto& conv : corpus.train_conversations) {
    auto it = corpus.conversations.find(conv);
    if (it == corpus.conversations.end()) continue;
    for (auto idx : it->second) {
      const auto& utt = corpus.utterances[idx];
      if (utt.fluent.size() == utt.disfluent.size()) continue;  // nothing to teach
      exemplars.push_back({utt.id, join_surfaces(utt.disfluent), join_surfaces(utt.fluent)});
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(exemplars.begin(), exemplars.end(), rng);
  return exemplars;
}

std::string build_prompt(const std::string& instruction, const std::string& input_text,
                         const std::vector<Exemplar>& exemplars, int shots) {
  if (shots < 0 || exemplars.size() < static_cast<std::size_t>(shots)) {
    throw std::invalid_argument("InsufficientExemplars: need " + std::to_string(shots) +
                                ", have " + std::to_string(exemplars.size()));
  }
  std::ostringstream out;
  out << instruction << "\n";
  for (int i = 0; i < shots; ++i) {
    out << "\n" << kTranscriptPrefix << exemplars[static_cast<std::size_t>(i)].disfluent_text
        << "\n" << kCleanedPrefix << " " << exemplars[static_cast<std::size_t>(i)].fluent_text
        << "\n";
  }
  out << "\n" << kTranscriptPrefix << input_text << "\n" << kCleanedPrefix;
  return out.str();
}

std::string extract_transcript(const std::string& raw, const std::string& think_open,
                               const std::string& think_close) {
  std::string text = strip_think_blocks(raw, think_open, think_close);
  text = strip_code_fences(text);
  text = trim(text);
  text = strip_leading_label(text);
  return trim(text);
}

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::string fingerprint(const CompletionRequest& request) {
  std::ostringstream material;
  material << request.model_id << '\x1f' << request.temperature << '\x1f'
           << request.max_tokens << '\x1f' << request.prompt;
  const std::string data = material.str();

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::unique_ptr<ModelBackend> make_mock_backend(const std::string& model_id,
                                                const Corpus& corpus,
                                                const EvalConfig& config) {
  MockBackend::Kind kind;
  if (model_id == "mock-oracle") kind = MockBackend::Kind::Oracle;
  else if (model_id == "mock-echo") kind = MockBackend::Kind::Echo;
  else if (model_id == "mock-empty") kind = MockBackend::Kind::Empty;
  else throw std::invalid_argument("unknown mock backend " + model_id);

  std::unordered_map<std::string, std::string> fluent_by_input;
  if (kind == MockBackend::Kind::Oracle) {
    for (const auto& [conv, _] : corpus.conversations) {
      for (auto cond : {Condition::Full, Condition::Segmented}) {
        for (const auto& unit : segment(corpus, conv, cond, config.segment_size)) {
          fluent_by_input[unit_input_text(corpus, unit)] = unit_fluent_text(corpus, unit);
        }
      }
    }
  }
  return std::make_unique<MockBackend>(kind, std::move(fluent_by_input), model_id);
}

std::unique_ptr<ModelBackend> make_http_backend(const HttpBackendOptions& options,
                                                int max_retries) {
  return std::make_unique<HttpBackend>(options, max_retries);
}

RunResult run_eval(const Corpus& corpus, ModelBackend& backend, const EvalConfig& config) {
  std::vector<std::string> eval_conversations = corpus.test_conversations;
  if (eval_conversations.empty()) {
    for (const auto& [conv, _] : corpus.conversations) eval_conversations.push_back(conv);
  }

  std::vector<EvalUnit> units;
  for (const auto& conv : eval_conversations) {
    for (auto& unit : segment(corpus, conv, config.condition, config.segment_size)) {
      units.push_back(std::move(unit));
    }
  }

  std::vector<Exemplar> exemplars;
  if (config.shots > 0) {
    exemplars = select_exemplars(corpus, config.exemplar_seed);
    if (exemplars.size() < static_cast<std::size_t>(config.shots)) {
      throw std::invalid_argument("InsufficientExemplars: train split provides " +
                                  std::to_string(exemplars.size()) + " exemplars, need " +
                                  std::to_string(config.shots));
    }
  }

  RunResult result;
  result.outputs.resize(units.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> calls{0}, hits{0}, failures{0};

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= units.size()) break;
      const auto& unit = units[i];
      ModelOutput out;
      out.unit_id = unit.id;
      try {
        const std::string input = unit_input_text(corpus, unit);
        CompletionRequest request;
        request.model_id = config.model_id;
        request.prompt = build_prompt(config.instruction, input, exemplars, config.shots);
        request.temperature = config.temperature;
        request.max_tokens = config.max_output_tokens > 0
                                 ? config.max_output_tokens
                                 : 2 * split_tokens(input).size();
        out.fingerprint = fingerprint(request);

        std::optional<std::string> cached;
        if (!config.cache_dir.empty()) {
          cached = cache_read(config.cache_dir, request, out.fingerprint);
        }
        if (cached) {
          out.raw = *cached;
          out.from_cache = true;
          hits.fetch_add(1);
        } else {
          const auto t0 = std::chrono::steady_clock::now();
          out.raw = backend.complete(request);
          const auto t1 = std::chrono::steady_clock::now();
          out.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
          calls.fetch_add(1);
          if (!config.cache_dir.empty()) {
            cache_write(config.cache_dir, request, out.fingerprint, out.raw);
          }
        }
        out.transcript = extract_transcript(out.raw, config.think_open, config.think_close);
      } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
        failures.fetch_add(1);
      }
      result.outputs[i] = std::move(out);
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, config.concurrency);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  result.backend_calls = calls.load();
  result.cache_hits = hits.load();
  result.failures = failures.load();
  return result;
}

std::vector<ScoringTask> scoring_tasks(const Corpus& corpus, const EvalConfig& config,
                                       const std::vector<ModelOutput>& outputs) {
  std::vector<std::string> eval_conversations = corpus.test_conversations;
  if (eval_conversations.empty()) {
    for (const auto& [conv, _] : corpus.conversations) eval_conversations.push_back(conv);
  }
  std::unordered_map<std::string, const ModelOutput*> by_id;
  for (const auto& out : outputs) by_id[out.unit_id] = &out;

  std::vector<ScoringTask> tasks;
  for (const auto& conv : eval_conversations) {
    for (const auto& unit : segment(corpus, conv, config.condition, config.segment_size)) {
      auto it = by_id.find(unit.id);
      if (it == by_id.end() || it->second->failed) continue;
      ScoringTask task;
      task.unit_id = unit.id;
      for (auto idx : unit.utterance_indices) {
        const auto& utt = corpus.utterances[idx];
        task.gold.insert(task.gold.end(), utt.disfluent.begin(), utt.disfluent.end());
        task.tags.insert(task.tags.end(), utt.tags.begin(), utt.tags.end());
        task.trees.push_back(&utt.tree);
      }
      task.hyp = split_tokens(it->second->transcript);
      tasks.push_back(std::move(task));
    }
  }
  return tasks;
}

std::vector<UnitScores> merge_by_conversation(const std::vector<UnitScores>& per_segment) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::pair<std::vector<EScores>, std::vector<ZScores>>> groups;
  for (const auto& u : per_segment) {
    const auto cut = u.unit_id.rfind('/');
    const std::string conv = cut == std::string::npos ? u.unit_id : u.unit_id.substr(0, cut);
    if (groups.find(conv) == groups.end()) order.push_back(conv);
    groups[conv].first.push_back(u.e);
    groups[conv].second.push_back(u.z);
  }
  std::vector<UnitScores> merged;
  for (const auto& conv : order) {
    UnitScores u;
    u.unit_id = conv;
    u.e = merge_e(groups[conv].first);
    u.z = merge_z(groups[conv].second);
    merged.push_back(std::move(u));
  }
  return merged;
}

}  // namespace dres
