#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rsum/absa.hpp"

namespace rsum {

struct RawSentence {
  std::string text;
  std::optional<std::string> parse;  // Penn-Treebank bracketed tree
  std::optional<AbsaAnnotation> absa;
};

struct Review {
  std::string review_id;
  std::vector<RawSentence> sentences;
};

struct Entity {
  std::string entity_id;
  std::vector<Review> reviews;
};

struct ReviewCorpus {
  std::vector<Entity> entities;

  std::size_t review_count() const;
  std::size_t sentence_count() const;
};

// One JSON record per review; records of an entity must be contiguous.
ReviewCorpus parse_corpus(std::istream& in);
ReviewCorpus load_corpus(const std::filesystem::path& path);

// Drops entities with fewer than min_reviews reviews and uniformly downsamples
// entities above max_reviews. Retained reviews keep their input order.
ReviewCorpus filter_entities(const ReviewCorpus& corpus, std::size_t min_reviews,
                             std::size_t max_reviews, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Constituency trees

struct ParseNode {
  std::string tag;
  std::string word;  // set on preterminals only
  std::vector<ParseNode> children;
  std::size_t token_count = 0;

  bool is_leaf() const { return children.empty(); }
};

ParseNode parse_tree(std::string_view bracketed);
std::vector<std::string> leaves(const ParseNode& tree);

struct SegmentParams {
  std::size_t l_max = 20;
  std::size_t l_min = 2;
};

// Token range [begin, end) over the tree's leaves.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const TokenSpan&) const = default;
};

struct Segmentation {
  bool whole_sentence = true;
  std::vector<TokenSpan> clauses;  // empty when whole_sentence
};

// Clause boundaries from a parse. The root is always descended into; the
// sentence is kept whole when fewer than two clauses are found or when two
// neighbouring clauses are more than l_min tokens apart.
Segmentation segment_tree(const ParseNode& tree, const SegmentParams& params);

// ---------------------------------------------------------------------------
// Sentence units

enum class UnitKind { whole_sentence, clause };

struct SentenceUnit {
  std::string unit_id;
  std::string entity_id;
  std::string review_id;
  std::string source_sentence_id;
  UnitKind kind = UnitKind::whole_sentence;
  std::string text;
  std::vector<std::string> tokens;
  std::pair<std::size_t, std::size_t> char_span{0, 0};
  std::optional<AbsaAnnotation> absa;

  bool operator==(const SentenceUnit&) const = default;
};

std::string_view to_string(UnitKind k);

struct SentenceRef {
  std::string entity_id;
  std::string review_id;
  std::size_t sentence_index = 0;
  const RawSentence* sentence = nullptr;
};

std::vector<SentenceUnit> segment_sentence(const ParseNode& tree, const SentenceRef& src,
                                           const SegmentParams& params);

std::vector<SentenceUnit> sentences_to_units(const ReviewCorpus& corpus, bool use_clauses,
                                             const SegmentParams& params);

// Units of a single entity.
std::vector<SentenceUnit> entity_units(const Entity& entity, bool use_clauses,
                                       const SegmentParams& params);

}  // namespace rsum
