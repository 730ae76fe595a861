#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rsum/absa.hpp"

namespace rsum {

enum class AlignLabel { alignment, opposite, neutral };

std::string_view to_string(AlignLabel l);
std::optional<AlignLabel> parse_align_label(std::string_view s);

// 3-way distribution over an ordered pair (x, y): x aligns with / opposes /
// is neutral to y.
struct AlignmentJudgment {
  double p_aligns = 0.0;
  double p_opposes = 0.0;
  double p_neutral = 1.0;

  // First label attaining the maximum, in the order alignment, opposite, neutral.
  AlignLabel argmax() const;
  bool is_valid(double tol = 1e-6) const;
  bool operator==(const AlignmentJudgment&) const = default;
};

using TextPair = std::pair<std::string, std::string>;

// Alignment model contract. Implementations must be safe to call concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;

  // Stable identifier; part of every cache key.
  virtual std::string id() const = 0;
  virtual AlignmentJudgment judge(std::string_view x, std::string_view y) const = 0;
  virtual std::vector<AlignmentJudgment> judge_batch(std::span<const TextPair> pairs) const;
  // Sentiment label used by the gate; nullopt disables gating for the pair.
  virtual std::optional<Sentiment> sentiment(std::string_view text) const = 0;
  virtual std::vector<std::optional<Sentiment>> sentiment_batch(
      std::span<const std::string> texts) const;
};

// ---------------------------------------------------------------------------
// Lexical baseline

struct AnnotatedText {
  AbsaAnnotation absa;
  std::vector<std::string> content_tokens;  // sorted, unique
};

AnnotatedText annotate(std::string_view text, const AbsaAnnotation& absa);

// Jaccard overlap of two sorted unique token sets; 0 when both are empty.
double jaccard(std::span<const std::string> a, std::span<const std::string> b);

// Deterministic judgment from annotations:
//   same aspect, same sentiment    -> aligns = 0.5 + 0.5 J, rest split equally
//   same aspect, opposite sentiment -> opposes = 0.9, 0.05 each otherwise
//   otherwise                       -> neutral = 0.9, 0.05 each otherwise
AlignmentJudgment lexical_judge(const AnnotatedText& x, const AnnotatedText& y);

// Scorer backed by annotations registered per text. Texts without an
// annotation are judged neutral to everything and carry no sentiment.
class LexicalScorer final : public Scorer {
 public:
  // First registration of a text wins.
  void add(std::string_view text, const AbsaAnnotation& absa);
  bool knows(std::string_view text) const;

  std::string id() const override { return "lexical-v1"; }
  AlignmentJudgment judge(std::string_view x, std::string_view y) const override;
  std::optional<Sentiment> sentiment(std::string_view text) const override;

 private:
  std::unordered_map<std::string, AnnotatedText> index_;
};

// ---------------------------------------------------------------------------
// Persistent judgment cache

// Append-only JSONL keyed by (scorer, sha256(x), sha256(y)). Ordered pairs
// are distinct keys. Writes are serialized; I/O failures are logged and the
// cache keeps working in memory.
class JudgmentCache {
 public:
  JudgmentCache() = default;
  explicit JudgmentCache(std::filesystem::path file);

  std::optional<AlignmentJudgment> get(const std::string& scorer, std::string_view x,
                                       std::string_view y) const;
  void put(const std::string& scorer, std::string_view x, std::string_view y,
           const AlignmentJudgment& j);
  void clear();
  std::size_t size() const;

 private:
  using Key = std::string;
  static Key key(const std::string& scorer, const std::string& xh, const std::string& yh);

  mutable std::mutex mu_;
  std::unordered_map<Key, AlignmentJudgment> entries_;
  std::optional<std::filesystem::path> file_;
  bool file_ok_ = true;
};

// Scorer front end: caching, the sentiment gate, and the aligns predicate.
class Aligner {
 public:
  explicit Aligner(const Scorer& scorer, JudgmentCache* cache = nullptr)
      : scorer_(scorer), cache_(cache) {}

  AlignmentJudgment judge(std::string_view x, std::string_view y) const;
  // Warms the cache for many pairs with one batched scorer call.
  void prefetch(std::span<const TextPair> pairs) const;

  // True when both sentiments are known and differ.
  bool gated(std::string_view x, std::string_view y) const;
  double p_align(std::string_view x, std::string_view y) const;
  bool aligns(std::string_view x, std::string_view y) const;

  const Scorer& scorer() const { return scorer_; }
  std::uint64_t scorer_calls() const { return calls_.load(); }

 private:
  const Scorer& scorer_;
  JudgmentCache* cache_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

// Gate applied to an already computed judgment.
double gated_p_align(const AlignmentJudgment& j, std::optional<Sentiment> sx,
                     std::optional<Sentiment> sy);
bool gated_aligns(const AlignmentJudgment& j, std::optional<Sentiment> sx,
                  std::optional<Sentiment> sy);

// ---------------------------------------------------------------------------
// Synthetic fine-tuning pairs

enum class PairKind { sent_opinion, sent_sent };
std::string_view to_string(PairKind k);

struct LabeledPair {
  std::string x_text;
  std::string y_text;
  PairKind kind = PairKind::sent_opinion;
  AlignLabel label = AlignLabel::alignment;
  // Indices into the input sentences: x, and the partner y was drawn from.
  std::size_t x_index = 0;
  std::size_t y_index = 0;
};

struct AnnotatedSentence {
  std::string text;
  AbsaAnnotation absa;
};

struct PairReport {
  std::vector<LabeledPair> pairs;
  // (kind, label) -> sentences for which no eligible partner existed.
  std::map<std::pair<PairKind, AlignLabel>, std::size_t> skipped;
};

// "noun is adjective", lowercased.
std::string opinion_surface(std::string_view noun, std::string_view adjective);

// Eligible partner indices of sentence i for a (kind, label) slot. For
// sent_opinion alignment the sentence itself is the only partner.
std::vector<std::size_t> eligible_partners(std::span<const AnnotatedSentence> sentences,
                                           std::size_t i, PairKind kind, AlignLabel label);

PairReport generate_finetuning_pairs(std::span<const AnnotatedSentence> sentences,
                                     std::size_t per_label, std::uint64_t seed);

}  // namespace rsum
