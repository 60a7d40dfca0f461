#include "dres/alignment.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

namespace dres {

namespace {

const std::unordered_map<std::string_view, std::string_view> kPtbEscapes = {
    {"-LRB-", "("}, {"-RRB-", ")"}, {"-LCB-", "{"}, {"-RCB-", "}"},
    {"``", "\""},   {"''", "\""},
};

bool is_strip_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

struct Key {
  std::string normalized;
  std::string surface;  // used only when normalized is empty

  bool operator==(const Key& other) const {
    if (normalized.empty() || other.normalized.empty()) {
      return surface == other.surface;
    }
    return normalized == other.normalized;
  }
};

std::vector<Key> keys_of(const std::vector<std::string>& tokens) {
  std::vector<Key> keys;
  keys.reserve(tokens.size());
  for (const auto& tok : tokens) keys.push_back({normalize_token(tok), tok});
  return keys;
}

// Longest common contiguous block in gold[glo,ghi) x hyp[hlo,hhi),
// leftmost by gold index then hyp index on length ties.
MatchBlock longest_block(const std::vector<Key>& gold, const std::vector<Key>& hyp,
                         std::size_t glo, std::size_t ghi,
                         std::size_t hlo, std::size_t hhi) {
  MatchBlock best{glo, hlo, 0};
  // run[j] = length of the common run ending at (i-1, j-1)
  std::vector<std::size_t> run(hhi - hlo + 1, 0);
  for (std::size_t i = glo; i < ghi; ++i) {
    std::size_t prev_diag = 0;
    for (std::size_t j = hlo; j < hhi; ++j) {
      const std::size_t cur = run[j - hlo + 1];
      if (gold[i] == hyp[j]) {
        const std::size_t len = prev_diag + 1;
        run[j - hlo + 1] = len;
        if (len > best.length) {
          best = {i + 1 - len, j + 1 - len, len};
        } else if (len == best.length && best.length > 0) {
          const std::size_t gs = i + 1 - len;
          const std::size_t hs = j + 1 - len;
          if (gs < best.gold_start ||
              (gs == best.gold_start && hs < best.hyp_start)) {
            best = {gs, hs, len};
          }
        }
      } else {
        run[j - hlo + 1] = 0;
      }
      prev_diag = cur;
    }
  }
  return best;
}

void align_rec(const std::vector<Key>& gold, const std::vector<Key>& hyp,
               std::size_t glo, std::size_t ghi,
               std::size_t hlo, std::size_t hhi,
               std::vector<MatchBlock>& out) {
  if (glo >= ghi || hlo >= hhi) return;
  const MatchBlock block = longest_block(gold, hyp, glo, ghi, hlo, hhi);
  if (block.length == 0) return;
  align_rec(gold, hyp, glo, block.gold_start, hlo, block.hyp_start, out);
  out.push_back(block);
  align_rec(gold, hyp, block.gold_start + block.length, ghi,
            block.hyp_start + block.length, hhi, out);
}

Alignment align_keys(std::vector<Key> gold, std::vector<Key> hyp) {
  Alignment result;
  result.gold_len = gold.size();
  result.hyp_len = hyp.size();
  align_rec(gold, hyp, 0, gold.size(), 0, hyp.size(), result.blocks);
  return result;
}

}  // namespace

std::string normalize_token(std::string_view surface) {
  if (auto it = kPtbEscapes.find(surface); it != kPtbEscapes.end()) {
    return std::string(it->second);
  }
  std::size_t begin = 0;
  std::size_t end = surface.size();
  while (begin < end && is_strip_punct(surface[begin])) ++begin;
  while (end > begin && is_strip_punct(surface[end - 1])) --end;
  std::string out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    out.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(surface[i]))));
  }
  return out;
}

Alignment align(const std::vector<Token>& gold, const std::vector<std::string>& hyp) {
  std::vector<Key> gold_keys;
  gold_keys.reserve(gold.size());
  for (const auto& tok : gold) gold_keys.push_back({normalize_token(tok.surface), tok.surface});
  return align_keys(std::move(gold_keys), keys_of(hyp));
}

Alignment align(const std::vector<std::string>& gold, const std::vector<std::string>& hyp) {
  return align_keys(keys_of(gold), keys_of(hyp));
}

DeletionLabels deletion_labels(const Alignment& alignment) {
  DeletionLabels labels;
  labels.deleted.assign(alignment.gold_len, true);
  for (const auto& block : alignment.blocks) {
    for (std::size_t i = 0; i < block.length; ++i) {
      labels.deleted[block.gold_start + i] = false;
    }
  }
  labels.insertions = alignment.hyp_len - alignment.matched();
  return labels;
}

}  // namespace dres
