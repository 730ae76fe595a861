#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsum/candidates.hpp"
#include "rsum/corpus.hpp"
#include "rsum/opinions.hpp"

namespace rsum {

struct SummaryItem {
  std::string cluster_id;
  std::size_t candidate_set_size = 0;
  Opinion opinion;
  std::vector<SentenceUnit> rationales;

  bool operator==(const SummaryItem&) const = default;
};

struct Summary {
  std::string entity_id;
  std::vector<SummaryItem> items;
  std::size_t word_count = 0;

  bool operator==(const Summary&) const = default;
};

// Indices of `sets` by descending size; ties by cluster_id.
std::vector<std::size_t> rank_opinions(std::span<const CandidateSet> sets);

// Whitespace words of the opinion surface plus every rationale text.
std::size_t item_word_count(const SummaryItem& item);

// Appends ranked items until the next one would exceed word_limit.
Summary assemble_summary(std::string entity_id, std::span<const SummaryItem> ranked,
                         std::optional<std::size_t> word_limit);

enum class SummaryFormat { text, json };

std::optional<SummaryFormat> parse_summary_format(std::string_view s);
std::string_view extension(SummaryFormat f);

// text: "<opinion>: <rationale> | <rationale>" per line.
std::string render_summary(const Summary& summary, SummaryFormat format);
Summary parse_summary_json(std::string_view json);

}  // namespace rsum
