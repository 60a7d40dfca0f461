#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dres/treebank.hpp"

namespace dres {

enum class TokenTag : char { Fluent = 'F', E = 'E', I = 'I', P = 'P' };

char tag_char(TokenTag tag);
TokenTag tag_from_char(char c);

// The per-utterance 4-tuple: source tree, full (disfluent) yield,
// per-token tags, and the fluent subsequence.
struct UtteranceTuple {
  ParseTree tree;
  std::vector<Token> disfluent;
  std::vector<TokenTag> tags;
  std::vector<Token> fluent;
  std::string id;
};

struct Corpus {
  std::vector<UtteranceTuple> utterances;
  // conversation id -> indices into `utterances`, in utterance order
  std::map<std::string, std::vector<std::size_t>> conversations;
  std::vector<std::string> train_conversations;
  std::vector<std::string> test_conversations;
};

struct CorpusOptions {
  bool drop_none = true;  // filter -NONE- trace terminals before extraction
  double train_ratio = 0.5;
  std::uint64_t split_seed = 0;
  std::string conversation_id = "conv0";  // id for trees not grouped by file
};

UtteranceTuple extract_tuple(const ParseTree& tree, std::string id);

// Trees grouped by conversation id (typically one .mrg file per conversation).
Corpus build_corpus(const std::vector<std::pair<std::string, std::vector<ParseTree>>>& by_conversation,
                    const CorpusOptions& options);

struct InjectionRates {
  double edited = 0.0;
  double intj = 0.0;
  double prn = 0.0;
};

// Synthesizes a parse tree around a fluent token sequence by inserting
// INTJ/PRN filler spans and EDITED duplicated prefixes, then extracts the
// tuple from it. extract_tuple on the returned tree reproduces the tuple.
UtteranceTuple inject_disfluencies(const std::vector<Token>& fluent,
                                   std::uint64_t seed,
                                   const InjectionRates& rates,
                                   std::string id);

// Drops -NONE- trace terminals (and any node left with an empty yield).
// Returns false when nothing remains.
bool drop_none_terminals(ParseTree& tree);

// JSONL corpus serialization: one record per utterance with fields
// {id, tree, disfluent, tags, fluent}. Tag alphabet {"F","E","I","P"}.
std::string corpus_to_jsonl(const Corpus& corpus);
Corpus corpus_from_jsonl(const std::string& text);

}  // namespace dres
