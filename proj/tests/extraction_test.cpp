#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dres/extraction.hpp"

using namespace dres;

namespace {

std::vector<Token> make_tokens(std::initializer_list<const char*> words) {
  std::vector<Token> out;
  for (const char* w : words) out.push_back({w, out.size(), false});
  return out;
}

// Brute-force oracle: a terminal's tag is the class of the first
// disfluent label on the root-to-terminal path.
void oracle_tags_rec(const ParseTree& node, TokenTag inherited, std::vector<TokenTag>& out) {
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
  for (const auto& child : node.children) oracle_tags_rec(child, here, out);
}

std::vector<TokenTag> oracle_tags(const ParseTree& tree) {
  std::vector<TokenTag> out;
  oracle_tags_rec(tree, TokenTag::Fluent, out);
  return out;
}

std::vector<std::string> surfaces(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

}  // namespace

TEST_CASE("single INTJ") {
  auto tree = parse_trees("(S (INTJ (UH uh)) (NP (PRP i)) (VP (VBP agree)))")[0];
  auto tuple = extract_tuple(tree, "c:0");
  CHECK(surfaces(tuple.disfluent) == std::vector<std::string>{"uh", "i", "agree"});
  CHECK(tuple.tags == std::vector<TokenTag>{TokenTag::I, TokenTag::Fluent, TokenTag::Fluent});
  CHECK(surfaces(tuple.fluent) == std::vector<std::string>{"i", "agree"});
}

TEST_CASE("EDITED and PRN in one utterance") {
  auto tree = parse_trees(
      "(S (EDITED (NP (PRP i))) (NP (PRP i)) (VP (VBP think)"
      " (PRN (S (PRP you) (VBP know))) (SBAR (S (NP (PRP it)) (VP (VBZ works))))))")[0];
  auto tuple = extract_tuple(tree, "c:0");
  CHECK(surfaces(tuple.disfluent) ==
        std::vector<std::string>{"i", "i", "think", "you", "know", "it", "works"});
  CHECK(tuple.tags == std::vector<TokenTag>{TokenTag::E, TokenTag::Fluent, TokenTag::Fluent,
                                            TokenTag::P, TokenTag::P, TokenTag::Fluent,
                                            TokenTag::Fluent});
  CHECK(surfaces(tuple.fluent) == std::vector<std::string>{"i", "think", "it", "works"});
}

TEST_CASE("shallowest disfluent ancestor wins") {
  auto tree = parse_trees("(EDITED (S (INTJ (UH uh)) (NP (PRP i))))")[0];
  auto tuple = extract_tuple(tree, "c:0");
  CHECK(tuple.tags == std::vector<TokenTag>{TokenTag::E, TokenTag::E});
}

TEST_CASE("no disfluent nodes means fluent == disfluent") {
  auto tree = parse_trees("(S (NP (PRP i)) (VP (VBP agree)))")[0];
  auto tuple = extract_tuple(tree, "c:0");
  CHECK(surfaces(tuple.fluent) == surfaces(tuple.disfluent));
  CHECK(tuple.tags == std::vector<TokenTag>(2, TokenTag::Fluent));
}

TEST_CASE("build_corpus splits deterministically at conversation level") {
  std::vector<std::pair<std::string, std::vector<ParseTree>>> by_conv;
  for (const char* conv : {"sw2001", "sw2002", "sw2003", "sw2004"}) {
    by_conv.push_back({conv, parse_trees("(S (NP (PRP i)) (VP (VBP agree)))"
                                         "(S (INTJ (UH uh)) (NP (PRP i)))")});
  }
  CorpusOptions options;
  options.train_ratio = 0.5;
  options.split_seed = 7;
  auto a = build_corpus(by_conv, options);
  auto b = build_corpus(by_conv, options);
  CHECK(a.train_conversations.size() == 2);
  CHECK(a.test_conversations.size() == 2);
  CHECK(a.train_conversations == b.train_conversations);
  CHECK(a.utterances.size() == 8);

  // Different seed: possibly different split, identical tuple contents.
  options.split_seed = 8;
  auto c = build_corpus(by_conv, options);
  REQUIRE(c.utterances.size() == a.utterances.size());
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK(a.utterances[i].id == c.utterances[i].id);
    CHECK(a.utterances[i].tags == c.utterances[i].tags);
  }
}

TEST_CASE("build_corpus with one tree") {
  auto corpus = build_corpus({{"c", parse_trees("(S (UH uh))")}}, CorpusOptions{});
  CHECK(corpus.utterances.size() == 1);
}

TEST_CASE("build_corpus rejects empty input") {
  CHECK_THROWS(build_corpus({}, CorpusOptions{}));
}

TEST_CASE("-NONE- traces dropped when configured") {
  auto trees = parse_trees("(S (NP (-NONE- *T*-1)) (NP (PRP i)) (VP (VBP agree)))");
  CorpusOptions options;
  options.drop_none = true;
  auto corpus = build_corpus({{"c", trees}}, options);
  CHECK(surfaces(corpus.utterances[0].disfluent) == std::vector<std::string>{"i", "agree"});

  options.drop_none = false;
  auto kept = build_corpus({{"c", trees}}, options);
  CHECK(kept.utterances[0].disfluent.size() == 3);
}

TEST_CASE("injector: zero rates produce an all-fluent tuple") {
  auto tuple = inject_disfluencies(make_tokens({"i", "agree"}), 3, {}, "c:0");
  CHECK(surfaces(tuple.fluent) == surfaces(tuple.disfluent));
  for (auto tag : tuple.tags) CHECK(tag == TokenTag::Fluent);
}

TEST_CASE("injector: rate 1 forces insertion") {
  InjectionRates rates;
  rates.intj = 1.0;
  auto tuple = inject_disfluencies(make_tokens({"i", "agree"}), 3, rates, "c:0");
  std::size_t n_i = 0;
  for (auto tag : tuple.tags) n_i += tag == TokenTag::I;
  CHECK(n_i >= 1);
  CHECK(surfaces(tuple.fluent) == std::vector<std::string>{"i", "agree"});
}

TEST_CASE("injector is deterministic given a seed") {
  InjectionRates rates{0.3, 0.4, 0.2};
  auto a = inject_disfluencies(make_tokens({"i", "think", "it", "works"}), 99, rates, "c:0");
  auto b = inject_disfluencies(make_tokens({"i", "think", "it", "works"}), 99, rates, "c:0");
  CHECK(render(a.tree) == render(b.tree));
  CHECK(a.tags == b.tags);
}

TEST_CASE("injector rejects invalid rates") {
  InjectionRates rates;
  rates.prn = 1.5;
  CHECK_THROWS(inject_disfluencies(make_tokens({"i"}), 0, rates, "c:0"));
}

TEST_CASE("tuple invariants and ancestor oracle on random injected trees") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> vocab = {"i", "think", "the", "dog", "ran", "home", "today"};
  std::uniform_int_distribution<std::size_t> len_dist(1, 7);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  std::uniform_real_distribution<double> rate(0.0, 0.6);

  for (int iter = 0; iter < 500; ++iter) {
    std::vector<Token> fluent;
    for (std::size_t i = 0, n = len_dist(rng); i < n; ++i) {
      fluent.push_back({vocab[word(rng)], i, false});
    }
    InjectionRates rates{rate(rng), rate(rng), rate(rng)};
    auto tuple = inject_disfluencies(fluent, rng(), rates, "c:0");

    // Tag/ancestor equivalence.
    CHECK(tuple.tags == oracle_tags(tuple.tree));
    // fluent is the order-preserving FLUENT subsequence.
    REQUIRE(tuple.tags.size() == tuple.disfluent.size());
    std::vector<std::string> expected_fluent;
    for (std::size_t i = 0; i < tuple.tags.size(); ++i) {
      if (tuple.tags[i] == TokenTag::Fluent) expected_fluent.push_back(tuple.disfluent[i].surface);
    }
    CHECK(surfaces(tuple.fluent) == expected_fluent);
    CHECK(surfaces(tuple.fluent) == surfaces(fluent));
    // Count identity.
    std::size_t tagged = 0;
    for (auto tag : tuple.tags) tagged += tag != TokenTag::Fluent;
    CHECK(tagged == tuple.disfluent.size() - tuple.fluent.size());
    // Round-trip: extracting from the synthesized tree reproduces the tuple.
    auto re = extract_tuple(tuple.tree, tuple.id);
    CHECK(re.tags == tuple.tags);
    CHECK(surfaces(re.disfluent) == surfaces(tuple.disfluent));
    CHECK(surfaces(re.fluent) == surfaces(tuple.fluent));
  }
}

TEST_CASE("corpus JSONL round-trip") {
  std::vector<std::pair<std::string, std::vector<ParseTree>>> by_conv = {
      {"sw1", parse_trees("(S (INTJ (UH uh)) (NP (PRP i)) (VP (VBP agree)))")},
      {"sw2", parse_trees("(S (NP (PRP it)) (VP (VBZ works)) (. .))")},
  };
  auto corpus = build_corpus(by_conv, CorpusOptions{});
  const auto jsonl = corpus_to_jsonl(corpus);
  auto loaded = corpus_from_jsonl(jsonl);
  REQUIRE(loaded.utterances.size() == corpus.utterances.size());
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    CHECK(loaded.utterances[i].id == corpus.utterances[i].id);
    CHECK(loaded.utterances[i].tags == corpus.utterances[i].tags);
    CHECK(surfaces(loaded.utterances[i].fluent) == surfaces(corpus.utterances[i].fluent));
  }
  CHECK(loaded.train_conversations == corpus.train_conversations);
  CHECK(loaded.test_conversations == corpus.test_conversations);
  CHECK(corpus_to_jsonl(loaded) == jsonl);
}
