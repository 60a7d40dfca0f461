#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dres/treebank.hpp"

namespace dres {

struct MatchBlock {
  std::size_t gold_start = 0;
  std::size_t hyp_start = 0;
  std::size_t length = 0;

  bool operator==(const MatchBlock&) const = default;
};

// Non-crossing matched blocks between the gold token sequence and the
// hypothesis token sequence, ordered by position.
struct Alignment {
  std::vector<MatchBlock> blocks;
  std::size_t gold_len = 0;
  std::size_t hyp_len = 0;

  std::size_t matched() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.length;
    return n;
  }
};

struct DeletionLabels {
  std::vector<bool> deleted;  // per gold token
  std::size_t insertions = 0;  // hypothesis tokens outside all blocks
};

// Lower-cases and strips leading/trailing punctuation. PTB escape tokens
// map to their literal character. May return empty (punctuation-only token).
std::string normalize_token(std::string_view surface);

// Ratcliff-Obershelp: recursively match the longest contiguous run of
// equal normalized tokens (ties broken by smallest gold index, then
// smallest hyp index). Tokens that normalize to empty match only on
// identical surfaces.
Alignment align(const std::vector<Token>& gold, const std::vector<std::string>& hyp);
Alignment align(const std::vector<std::string>& gold, const std::vector<std::string>& hyp);

DeletionLabels deletion_labels(const Alignment& alignment);

}  // namespace dres
