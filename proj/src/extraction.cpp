#include "dres/extraction.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dres {

namespace {

void tag_span(std::vector<TokenTag>& tags, const ParseTree& node, TokenTag tag) {
  for (std::size_t i = node.span_begin; i < node.span_end; ++i) {
    if (tags[i] == TokenTag::Fluent) tags[i] = tag;
  }
}

// Top-down: a disfluent node claims every terminal in its span that a
// shallower disfluent ancestor has not already claimed.
void tag_rec(std::vector<TokenTag>& tags, const ParseTree& node) {
  switch (classify_node(node.label)) {
    case NodeClass::Edited:
      tag_span(tags, node, TokenTag::E);
      break;
    case NodeClass::Intj:
      tag_span(tags, node, TokenTag::I);
      break;
    case NodeClass::Prn:
      tag_span(tags, node, TokenTag::P);
      break;
    case NodeClass::Fluent:
      break;
  }
  for (const auto& child : node.children) tag_rec(tags, child);
}

ParseTree preterminal(std::string label, std::string token) {
  ParseTree node;
  node.label = std::move(label);
  node.token = std::move(token);
  return node;
}

ParseTree word_node(const Token& tok) {
  return preterminal(tok.is_punct ? tok.surface : std::string("XX"), tok.surface);
}

std::string conversation_of(const std::string& utterance_id) {
  const auto cut = utterance_id.rfind(':');
  return cut == std::string::npos ? utterance_id : utterance_id.substr(0, cut);
}

}  // namespace

char tag_char(TokenTag tag) { return static_cast<char>(tag); }

TokenTag tag_from_char(char c) {
  switch (c) {
    case 'F': return TokenTag::Fluent;
    case 'E': return TokenTag::E;
    case 'I': return TokenTag::I;
    case 'P': return TokenTag::P;
  }
  throw std::invalid_argument(std::string("unknown tag '") + c + "'");
}

UtteranceTuple extract_tuple(const ParseTree& tree, std::string id) {
  UtteranceTuple tuple;
  tuple.tree = tree;
  tuple.id = std::move(id);
  tuple.disfluent = yield_tokens(tree);
  tuple.tags.assign(tuple.disfluent.size(), TokenTag::Fluent);
  tag_rec(tuple.tags, tree);
  for (std::size_t i = 0; i < tuple.disfluent.size(); ++i) {
    if (tuple.tags[i] == TokenTag::Fluent) {
      Token tok = tuple.disfluent[i];
      tok.index = tuple.fluent.size();
      tuple.fluent.push_back(std::move(tok));
    }
  }
  return tuple;
}

bool drop_none_terminals(ParseTree& tree) {
  if (tree.is_terminal()) return base_label(tree.label) != "-NONE-";
  std::vector<ParseTree> kept;
  for (auto& child : tree.children) {
    if (drop_none_terminals(child)) kept.push_back(std::move(child));
  }
  tree.children = std::move(kept);
  return !tree.children.empty();
}

Corpus build_corpus(
    const std::vector<std::pair<std::string, std::vector<ParseTree>>>& by_conversation,
    const CorpusOptions& options) {
  if (by_conversation.empty()) throw std::invalid_argument("EmptyInput: no trees");

  Corpus corpus;
  for (const auto& [conv_id, trees] : by_conversation) {
    std::size_t ordinal = 0;
    for (const auto& tree : trees) {
      ParseTree working = tree;
      if (options.drop_none && !drop_none_terminals(working)) continue;
      if (options.drop_none) {
        // Reindex spans after trace removal.
        working = parse_trees(render(working)).front();
      }
      std::string id = conv_id + ":" + std::to_string(ordinal++);
      corpus.conversations[conv_id].push_back(corpus.utterances.size());
      corpus.utterances.push_back(extract_tuple(working, std::move(id)));
    }
  }
  if (corpus.utterances.empty()) throw std::invalid_argument("EmptyInput: no utterances survived filtering");

  // Deterministic conversation-level split.
  std::vector<std::string> conv_ids;
  for (const auto& [conv_id, _] : corpus.conversations) conv_ids.push_back(conv_id);
  std::mt19937_64 rng(options.split_seed);
  std::shuffle(conv_ids.begin(), conv_ids.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      static_cast<double>(conv_ids.size()) * options.train_ratio + 0.5);
  for (std::size_t i = 0; i < conv_ids.size(); ++i) {
    (i < n_train ? corpus.train_conversations : corpus.test_conversations)
        .push_back(conv_ids[i]);
  }
  std::sort(corpus.train_conversations.begin(), corpus.train_conversations.end());
  std::sort(corpus.test_conversations.begin(), corpus.test_conversations.end());
  return corpus;
}

UtteranceTuple inject_disfluencies(const std::vector<Token>& fluent,
                                   std::uint64_t seed,
                                   const InjectionRates& rates,
                                   std::string id) {
  for (double r : {rates.edited, rates.intj, rates.prn}) {
    if (r < 0.0 || r > 1.0) throw std::invalid_argument("InvalidRate: rate outside [0,1]");
  }
  if (fluent.empty()) throw std::invalid_argument("EmptyInput: no fluent tokens");

  static const std::vector<std::string> kFillers = {"uh", "um"};
  static const std::vector<std::vector<std::string>> kParentheticals = {
      {"you", "know"}, {"i", "mean"}};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  ParseTree root;
  root.label = "S";
  for (std::size_t i = 0; i < fluent.size(); ++i) {
    if (coin(rng) < rates.edited) {
      // Duplicated prefix of the upcoming fluent span, wrapped in EDITED.
      // Copied words are cut off Switchboard-style ("toda-"), which keeps
      // the restart distinguishable from the repair it duplicates.
      std::uniform_int_distribution<std::size_t> len_dist(1, 3);
      const std::size_t len = std::min(len_dist(rng), fluent.size() - i);
      ParseTree edited;
      edited.label = "EDITED";
      ParseTree inner;
      inner.label = "NP";
      for (std::size_t j = 0; j < len; ++j) {
        const std::string& word = fluent[i + j].surface;
        const std::string partial =
            (word.size() > 1 ? word.substr(0, word.size() - 1) : word) + "-";
        inner.children.push_back(preterminal("XX", partial));
      }
      edited.children.push_back(std::move(inner));
      root.children.push_back(std::move(edited));
    }
    if (coin(rng) < rates.intj) {
      std::uniform_int_distribution<std::size_t> pick(0, kFillers.size() - 1);
      ParseTree intj;
      intj.label = "INTJ";
      intj.children.push_back(preterminal("UH", kFillers[pick(rng)]));
      root.children.push_back(std::move(intj));
    }
    if (coin(rng) < rates.prn) {
      std::uniform_int_distribution<std::size_t> pick(0, kParentheticals.size() - 1);
      ParseTree prn;
      prn.label = "PRN";
      ParseTree inner;
      inner.label = "S";
      for (const auto& word : kParentheticals[pick(rng)]) {
        inner.children.push_back(preterminal("XX", word));
      }
      prn.children.push_back(std::move(inner));
      root.children.push_back(std::move(prn));
    }
    root.children.push_back(word_node(fluent[i]));
  }

  // Reparse to assign spans.
  ParseTree reparsed = parse_trees(render(root)).front();
  return extract_tuple(reparsed, std::move(id));
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& utt : corpus.utterances) {
    nlohmann::ordered_json rec;
    rec["id"] = utt.id;
    rec["tree"] = render(utt.tree);
    auto& disfluent = rec["disfluent"] = nlohmann::json::array();
    for (const auto& tok : utt.disfluent) disfluent.push_back(tok.surface);
    auto& tags = rec["tags"] = nlohmann::json::array();
    for (auto tag : utt.tags) tags.push_back(std::string(1, tag_char(tag)));
    auto& fluent = rec["fluent"] = nlohmann::json::array();
    for (const auto& tok : utt.fluent) fluent.push_back(tok.surface);
    const auto conv = conversation_of(utt.id);
    const bool in_train =
        std::binary_search(corpus.train_conversations.begin(),
                           corpus.train_conversations.end(), conv);
    rec["split"] = in_train ? "train" : "test";
    out << rec.dump() << '\n';
  }
  return out.str();
}

Corpus corpus_from_jsonl(const std::string& text) {
  Corpus corpus;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    auto trees = parse_trees(rec.at("tree").get<std::string>());
    if (trees.size() != 1) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) +
                               ": expected exactly one tree");
    }
    UtteranceTuple tuple = extract_tuple(trees.front(), rec.at("id").get<std::string>());

    // Cross-check the stored token/tag lists against the tree.
    const auto& stored_tags = rec.at("tags");
    if (stored_tags.size() != tuple.tags.size()) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) +
                               ": tags do not match tree yield");
    }
    for (std::size_t i = 0; i < tuple.tags.size(); ++i) {
      if (tag_from_char(stored_tags[i].get<std::string>().at(0)) != tuple.tags[i]) {
        throw std::runtime_error("corpus line " + std::to_string(line_no) +
                                 ": tag " + std::to_string(i) + " does not match tree");
      }
    }

    const auto conv = conversation_of(tuple.id);
    corpus.conversations[conv].push_back(corpus.utterances.size());
    const auto split = rec.value("split", std::string("test"));
    auto& bucket = split == "train" ? corpus.train_conversations : corpus.test_conversations;
    if (std::find(bucket.begin(), bucket.end(), conv) == bucket.end()) bucket.push_back(conv);
    corpus.utterances.push_back(std::move(tuple));
  }
  std::sort(corpus.train_conversations.begin(), corpus.train_conversations.end());
  std::sort(corpus.test_conversations.begin(), corpus.test_conversations.end());
  return corpus;
}

}  // namespace dres
